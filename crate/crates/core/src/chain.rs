//! Ring dynamics generated by n^{3/2}(𝒜 + λ𝒮₁ + γₙ𝒮₂).
//!
//! Every sub-flow is an exact orthogonal map: transport is a unitary Fourier
//! multiplier, the noises are rotations of a triple or a pair by Gaussian
//! angles. Energy is therefore conserved to rounding and the Gibbs measure is
//! invariant for the discrete scheme itself.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{NormalStream, Purpose};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

/// Model constants. `period` is the ring length in macroscopic units, so the
/// ring holds `period * n` sites; `b` is the exponent in γₙ = a/n^b.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub n: usize,
    pub lambda: f64,
    pub a: f64,
    pub beta: f64,
    pub dt_macro: f64,
    #[serde(default = "one")]
    pub period: usize,
    #[serde(default = "unit")]
    pub b: f64,
}

impl ModelParams {
    pub fn new(n: usize, lambda: f64, a: f64, beta: f64, dt_macro: f64) -> Self {
        ModelParams { n, lambda, a, beta, dt_macro, period: 1, b: 1.0 }
    }

    pub fn with_period(mut self, period: usize) -> Self {
        self.period = period;
        self
    }

    pub fn with_exponent(mut self, b: f64) -> Self {
        self.b = b;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParam(m.to_string()));
        if self.n < 8 || self.n % 2 != 0 {
            return bad("n must be even and at least 8");
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be positive");
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return bad("a must be positive");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if !(self.dt_macro > 0.0 && self.dt_macro.is_finite()) {
            return bad("dt_macro must be positive");
        }
        if self.period == 0 {
            return bad("period must be at least 1");
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return bad("b must be non-negative");
        }
        Ok(())
    }

    /// γₙ = a/n^b, computed as a/n when b = 1.
    pub fn gamma_n(&self) -> f64 {
        if self.b == 1.0 {
            self.a / self.n as f64
        } else {
            self.a / (self.n as f64).powf(self.b)
        }
    }

    pub fn sites(&self) -> usize {
        self.n * self.period
    }

    /// n^{3/2}: micro time per unit of macro time.
    pub fn time_scale(&self) -> f64 {
        (self.n as f64).powf(1.5)
    }

    pub fn micro_per_macro(&self) -> f64 {
        self.time_scale() * self.dt_macro
    }

    /// Largest admissible micro sub-step.
    pub fn max_substep(&self) -> f64 {
        0.1 * 1f64.min(1.0 / self.lambda).min(1.0 / self.gamma_n())
    }

    pub fn default_substeps(&self) -> usize {
        let target = 0.5 * self.max_substep();
        (self.micro_per_macro() / target).ceil().max(1.0) as usize
    }
}

/// Ring configuration with its clock. `substep` counts micro sub-steps since
/// the initial sample and addresses the noise stream.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub omega: Vec<f64>,
    pub t_macro: f64,
    pub substep: u64,
}

impl ChainState {
    pub fn new(omega: Vec<f64>) -> Self {
        ChainState { omega, t_macro: 0.0, substep: 0 }
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.omega.iter().map(|w| w * w).sum()
    }

    pub fn volume(&self) -> f64 {
        self.omega.iter().sum()
    }

    pub fn abs_volume(&self) -> f64 {
        self.omega.iter().map(|w| w.abs()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    pub seed: u64,
    pub replica_id: u64,
    pub substeps_per_macro: usize,
    /// Switches for the two noises; a disabled noise still consumes its draw.
    pub x_noise: bool,
    pub y_noise: bool,
}

impl NoiseSchedule {
    pub fn new(seed: u64, replica_id: u64, substeps_per_macro: usize) -> Self {
        NoiseSchedule { seed, replica_id, substeps_per_macro, x_noise: true, y_noise: true }
    }

    pub fn for_params(params: &ModelParams, seed: u64, replica_id: u64) -> Self {
        Self::new(seed, replica_id, params.default_substeps())
    }

    pub fn without_noise(mut self) -> Self {
        self.x_noise = false;
        self.y_noise = false;
        self
    }

    pub fn without_y(mut self) -> Self {
        self.y_noise = false;
        self
    }
}

/// Independent N(0, 1/β) sites.
pub fn sample_gibbs(params: &ModelParams, schedule: &NoiseSchedule) -> Result<ChainState> {
    params.validate()?;
    let sd = params.beta.recip().sqrt();
    Ok(sample_profile(params.sites(), schedule, |_| sd))
}

/// Independent centered Gaussians with site-dependent standard deviation.
pub fn sample_profile(
    sites: usize,
    schedule: &NoiseSchedule,
    sd: impl Fn(usize) -> f64,
) -> ChainState {
    let mut stream = NormalStream::new(schedule.seed, schedule.replica_id, Purpose::Initial);
    stream.seek(0);
    ChainState::new((0..sites).map(|x| sd(x) * stream.normal()).collect())
}

/// Exact flow of dωₓ/dτ = ω_{x+1} − ω_{x−1} through the discrete Fourier basis.
pub struct Transport {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
    rates: Vec<f64>,
    cache: Vec<(f64, Vec<Complex64>)>,
}

impl Transport {
    pub fn new(sites: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(sites);
        let inv = planner.plan_fft_inverse(sites);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        let rates = (0..sites)
            .map(|k| 2.0 * (2.0 * PI * k as f64 / sites as f64).sin())
            .collect();
        Transport {
            fwd,
            inv,
            buf: vec![Complex64::new(0.0, 0.0); sites],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            rates,
            cache: Vec::new(),
        }
    }

    fn multipliers(&mut self, tau: f64) -> usize {
        if let Some(i) = self.cache.iter().position(|(t, _)| *t == tau) {
            return i;
        }
        let scale = 1.0 / self.rates.len() as f64;
        let m = self.rates.iter().map(|r| Complex64::from_polar(scale, r * tau)).collect();
        if self.cache.len() == 4 {
            self.cache.remove(0);
        }
        self.cache.push((tau, m));
        self.cache.len() - 1
    }

    /// Advances `omega` by micro time `tau`.
    pub fn apply(&mut self, omega: &mut [f64], tau: f64) {
        assert_eq!(omega.len(), self.rates.len(), "transport plan built for another ring");
        if tau == 0.0 {
            return;
        }
        let idx = self.multipliers(tau);
        for (b, w) in self.buf.iter_mut().zip(omega.iter()) {
            *b = Complex64::new(*w, 0.0);
        }
        self.fwd.process_with_scratch(&mut self.buf, &mut self.scratch);
        for (b, m) in self.buf.iter_mut().zip(self.cache[idx].1.iter()) {
            *b *= m;
        }
        self.inv.process_with_scratch(&mut self.buf, &mut self.scratch);
        for (w, b) in omega.iter_mut().zip(self.buf.iter()) {
            *w = b.re;
        }
    }
}

pub fn transport_flow(state: &ChainState, tau_micro: f64) -> Result<ChainState> {
    if !(tau_micro >= 0.0 && tau_micro.is_finite()) {
        return Err(Error::InvalidParam(format!("transport duration {tau_micro}")));
    }
    let mut out = state.clone();
    Transport::new(state.len()).apply(&mut out.omega, tau_micro);
    Ok(out)
}

/// exp(angle·𝒳ₓ): rotation of (ω_{x−1}, ωₓ, ω_{x+1}) about (1,1,1) at rate √3.
#[inline]
pub fn rotate_x(omega: &mut [f64], x: usize, angle: f64) {
    let n = omega.len();
    let (m, p) = ((x + n - 1) % n, (x + 1) % n);
    let (l, c, r) = (omega[m], omega[x], omega[p]);
    let mean = (l + c + r) / 3.0;
    let (s, co) = (SQRT_3 * angle).sin_cos();
    let k = s / SQRT_3;
    omega[m] = mean + co * (l - mean) + k * (r - c);
    omega[x] = mean + co * (c - mean) + k * (l - r);
    omega[p] = mean + co * (r - mean) + k * (c - l);
}

/// exp(angle·𝒴ₓ): planar rotation of (ωₓ, ω_{x+1}); (1,0) at π/2 becomes (0,−1).
#[inline]
pub fn rotate_y(omega: &mut [f64], x: usize, angle: f64) {
    let p = (x + 1) % omega.len();
    let (u, v) = (omega[x], omega[p]);
    let (s, c) = angle.sin_cos();
    omega[x] = c * u + s * v;
    omega[p] = -s * u + c * v;
}

pub fn apply_x_noise(state: &ChainState, x: usize, angle: f64) -> ChainState {
    let mut out = state.clone();
    rotate_x(&mut out.omega, x % state.len(), angle);
    out
}

pub fn apply_y_noise(state: &ChainState, x: usize, angle: f64) -> ChainState {
    let mut out = state.clone();
    rotate_y(&mut out.omega, x % state.len(), angle);
    out
}

/// Strang-split integrator holding its FFT plan and noise stream.
pub struct Integrator {
    transport: Transport,
    stream: NormalStream,
    schedule: NoiseSchedule,
    delta: f64,
    sd_x: f64,
    sd_y: f64,
    dt_sub: f64,
}

impl Integrator {
    pub fn new(params: &ModelParams, schedule: &NoiseSchedule) -> Result<Self> {
        params.validate()?;
        if schedule.substeps_per_macro == 0 {
            return Err(Error::InvalidParam("substeps_per_macro must be at least 1".into()));
        }
        let delta = params.micro_per_macro() / schedule.substeps_per_macro as f64;
        let bound = params.max_substep();
        if delta > bound * (1.0 + 1e-12) {
            return Err(Error::Stability { delta, bound });
        }
        let sites = params.sites();
        Ok(Integrator {
            transport: Transport::new(sites),
            stream: NormalStream::new(schedule.seed, schedule.replica_id, Purpose::Noise),
            schedule: *schedule,
            delta,
            sd_x: (2.0 * params.lambda * delta).sqrt(),
            sd_y: (2.0 * params.gamma_n() * delta).sqrt(),
            dt_sub: params.dt_macro / schedule.substeps_per_macro as f64,
        })
    }

    /// Micro duration of one sub-step.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Macro duration of one sub-step.
    pub fn dt_sub(&self) -> f64 {
        self.dt_sub
    }

    pub fn substeps_per_macro(&self) -> usize {
        self.schedule.substeps_per_macro
    }

    /// Half transport, one noise sweep in site order, half transport.
    pub fn substep(&mut self, state: &mut ChainState) {
        let half = 0.5 * self.delta;
        self.transport.apply(&mut state.omega, half);
        self.stream.seek(state.substep);
        let (sx, sy) = (self.sd_x, self.sd_y);
        let (xo, yo) = (self.schedule.x_noise, self.schedule.y_noise);
        for x in 0..state.omega.len() {
            let g0 = self.stream.normal();
            let g1 = self.stream.normal();
            if xo {
                rotate_x(&mut state.omega, x, sx * g0);
            }
            if yo {
                rotate_y(&mut state.omega, x, sy * g1);
            }
        }
        self.transport.apply(&mut state.omega, half);
        state.substep += 1;
        state.t_macro = state.substep as f64 * self.dt_sub;
    }

    /// One macroscopic step.
    pub fn step(&mut self, state: &mut ChainState) {
        for _ in 0..self.schedule.substeps_per_macro {
            self.substep(state);
        }
    }
}

pub fn step(state: &ChainState, params: &ModelParams, schedule: &NoiseSchedule) -> Result<ChainState> {
    let mut out = state.clone();
    Integrator::new(params, schedule)?.step(&mut out);
    Ok(out)
}

/// Read-only probe of the trajectory.
pub trait Observer {
    fn observe(&mut self, state: &ChainState);

    /// Request a call after every sub-step instead of every macro step.
    fn every_substep(&self) -> bool {
        false
    }
}

impl<F: FnMut(&ChainState)> Observer for F {
    fn observe(&mut self, state: &ChainState) {
        self(state)
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct TrajectorySummary {
    pub macro_steps: usize,
    pub substeps: u64,
    pub energy_initial: f64,
    pub energy_final: f64,
    /// max |E(t) − E(0)|/E(0) over macro steps
    pub energy_drift: f64,
    /// max |V(t) − V(0)| / Σ|ωₓ(0)| over macro steps
    pub volume_drift: f64,
    pub wall_time_s: f64,
}

pub fn macro_steps(t_final: f64, dt_macro: f64) -> Result<usize> {
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParam(format!("t_final = {t_final}")));
    }
    let k = (t_final / dt_macro).round();
    if (k * dt_macro - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::InvalidParam(format!(
            "t_final = {t_final} is not a multiple of dt_macro = {dt_macro}"
        )));
    }
    Ok(k as usize)
}

/// Runs to `t_final`, calling observers on the initial state and then after
/// every macro step (or sub-step, if an observer asks for it).
pub fn run_trajectory(
    initial: ChainState,
    params: &ModelParams,
    schedule: &NoiseSchedule,
    t_final: f64,
    observers: &mut [&mut dyn Observer],
) -> Result<(ChainState, TrajectorySummary)> {
    let steps = macro_steps(t_final, params.dt_macro)?;
    let mut integ = Integrator::new(params, schedule)?;
    if initial.len() != params.sites() {
        return Err(Error::InvalidParam(format!(
            "state has {} sites, params expect {}",
            initial.len(),
            params.sites()
        )));
    }
    let clock = Instant::now();
    let mut state = initial;
    let e0 = state.energy();
    let v0 = state.volume();
    let scale_v = state.abs_volume().max(f64::MIN_POSITIVE);
    let fine = observers.iter().any(|o| o.every_substep());
    for o in observers.iter_mut() {
        o.observe(&state);
    }
    let mut summary = TrajectorySummary { energy_initial: e0, ..Default::default() };
    for _ in 0..steps {
        if fine {
            for _ in 0..integ.substeps_per_macro() {
                integ.substep(&mut state);
                for o in observers.iter_mut().filter(|o| o.every_substep()) {
                    o.observe(&state);
                }
            }
            for o in observers.iter_mut().filter(|o| !o.every_substep()) {
                o.observe(&state);
            }
        } else {
            integ.step(&mut state);
            for o in observers.iter_mut() {
                o.observe(&state);
            }
        }
        let e = state.energy();
        summary.energy_drift = summary.energy_drift.max(((e - e0) / e0).abs());
        summary.volume_drift = summary.volume_drift.max((state.volume() - v0).abs() / scale_v);
    }
    summary.macro_steps = steps;
    summary.substeps = steps as u64 * schedule.substeps_per_macro as u64;
    summary.energy_final = state.energy();
    summary.wall_time_s = clock.elapsed().as_secs_f64();
    Ok((state, summary))
}

/// Streams `replica_id, t_macro, energy, volume, <probes…>` rows as CSV.
pub struct DiagnosticsWriter<W: Write> {
    out: csv::Writer<W>,
    replica_id: u64,
    probes: Vec<(String, Box<dyn Fn(&ChainState) -> f64>)>,
    error: Option<csv::Error>,
}

impl<W: Write> DiagnosticsWriter<W> {
    pub fn new(sink: W, replica_id: u64) -> Self {
        DiagnosticsWriter { out: csv::Writer::from_writer(sink), replica_id, probes: Vec::new(), error: None }
    }

    pub fn probe(mut self, name: &str, f: impl Fn(&ChainState) -> f64 + 'static) -> Self {
        self.probes.push((name.to_string(), Box::new(f)));
        self
    }

    pub fn write_header(&mut self) -> std::result::Result<(), csv::Error> {
        let mut head = vec!["replica_id".to_string(), "t_macro".into(), "energy".into(), "volume".into()];
        head.extend(self.probes.iter().map(|(n, _)| n.clone()));
        self.out.write_record(&head)
    }

    pub fn finish(mut self) -> std::result::Result<W, csv::Error> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        self.out.into_inner().map_err(|e| csv::Error::from(e.into_error()))
    }
}

impl<W: Write> Observer for DiagnosticsWriter<W> {
    fn observe(&mut self, state: &ChainState) {
        let mut row = vec![
            self.replica_id.to_string(),
            format!("{:e}", state.t_macro),
            format!("{:e}", state.energy()),
            format!("{:e}", state.volume()),
        ];
        row.extend(self.probes.iter().map(|(_, f)| format!("{:e}", f(state))));
        if let Err(e) = self.out.write_record(&row) {
            self.error.get_or_insert(e);
        }
    }
}

/// Header of a binary snapshot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub n: u64,
    pub lambda: f64,
    pub a: f64,
    pub beta: f64,
    pub t_macro: f64,
    pub sites: u64,
}

/// Little-endian layout: n, λ, a, β, t_macro, site count, then the field.
pub fn write_snapshot(mut w: impl Write, state: &ChainState, params: &ModelParams) -> std::io::Result<()> {
    w.write_all(&(params.n as u64).to_le_bytes())?;
    for v in [params.lambda, params.a, params.beta, state.t_macro] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&(state.len() as u64).to_le_bytes())?;
    for v in &state.omega {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot(mut r: impl Read) -> std::io::Result<(SnapshotHeader, ChainState)> {
    let mut word = [0u8; 8];
    let mut next = |r: &mut dyn Read| -> std::io::Result<[u8; 8]> {
        r.read_exact(&mut word)?;
        Ok(word)
    };
    let n = u64::from_le_bytes(next(&mut r)?);
    let lambda = f64::from_le_bytes(next(&mut r)?);
    let a = f64::from_le_bytes(next(&mut r)?);
    let beta = f64::from_le_bytes(next(&mut r)?);
    let t_macro = f64::from_le_bytes(next(&mut r)?);
    let sites = u64::from_le_bytes(next(&mut r)?);
    let omega = (0..sites)
        .map(|_| next(&mut r).map(f64::from_le_bytes))
        .collect::<std::io::Result<Vec<_>>>()?;
    let header = SnapshotHeader { n, lambda, a, beta, t_macro, sites };
    Ok((header, ChainState { omega, t_macro, substep: 0 }))
}
