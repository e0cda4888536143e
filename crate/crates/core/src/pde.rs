//! Auxiliary half-plane fields f and g, built mode by mode from their
//! Fourier representation in u.
//!
//! Each mode of f is F_k(v) = F_k(0)·e^{−c_k v} with c_k = √((a + iπk)/(3λ)),
//! which solves 6λ∂ᵥᵥf − ∂ᵤf − 2af = 0 on v > 0 with 12λ∂ᵥf(u, 0) = φ′(u).
//! The field g shares the profile and satisfies 24λ∂ᵥg(·,0) = 4(af − λ∂ᵥᵥf)(·,0).

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{self, LevySymbolParams};
use crate::quadrature::{self, Tolerance};
use crate::spectral::{Domain, SpectrumField};
use crate::testfn::TestFunction;
use crate::util::Sum;

/// c_k = √((a + iπk)/(3λ)), principal branch.
pub fn decay_rate(k: f64, p: &LevySymbolParams) -> Complex64 {
    (Complex64::new(p.a, PI * k) / (3.0 * p.lambda)).sqrt()
}

/// F_k(0) for a test function with transform φ̂(k).
pub fn f_amplitude(k: f64, phi_hat: Complex64, p: &LevySymbolParams) -> Complex64 {
    let root = Complex64::new(p.a, PI * k).sqrt();
    -Complex64::new(0.0, 2.0 * PI * k) * phi_hat / (root * 4.0 * (3.0 * p.lambda).sqrt())
}

/// G_k(0) fixed by G_k′(0) = ((2a − iπk)/(18λ))·F_k(0).
pub fn g_amplitude(k: f64, f0: Complex64, p: &LevySymbolParams) -> Complex64 {
    -Complex64::new(2.0 * p.a, -PI * k) / (18.0 * p.lambda) * f0 / decay_rate(k, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdeGrids {
    /// u ∈ [−U, U), periodic of length 2U.
    pub half_width: f64,
    pub m: usize,
    /// v ∈ [0, V] at p points, both ends included.
    pub v_max: f64,
    pub p: usize,
}

impl PdeGrids {
    /// U = 12 widths of φ, m = 2¹², V = 12 decay lengths of the slowest mode, p = 2⁹.
    pub fn default_for(phi: &TestFunction, params: &LevySymbolParams) -> Self {
        PdeGrids {
            half_width: 12.0 * phi.width() + phi.center().abs(),
            m: 4096,
            v_max: 12.0 * (3.0 * params.lambda / params.a).sqrt(),
            p: 512,
        }
    }

    /// Halves both spacings; the v-grid nests.
    pub fn refined(&self) -> Self {
        PdeGrids { m: 2 * self.m, p: 2 * self.p - 1, ..*self }
    }

    pub fn u_domain(&self) -> Domain {
        Domain::Line { half_width: self.half_width, m: self.m }
    }

    pub fn h_u(&self) -> f64 {
        2.0 * self.half_width / self.m as f64
    }

    pub fn h_v(&self) -> f64 {
        self.v_max / (self.p - 1) as f64
    }

    pub fn v_grid(&self) -> Vec<f64> {
        let h = self.h_v();
        (0..self.p).map(|j| h * j as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 16 || self.p < 4 || !(self.half_width > 0.0) || !(self.v_max > 0.0) {
            return Err(Error::InvalidParam(format!("degenerate grids {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HalfPlaneField {
    pub grids: PdeGrids,
    pub params: LevySymbolParams,
    /// Mode amplitudes at v = 0 in FFT slot order.
    pub amplitude: Vec<Complex64>,
    /// Values row by row: values[iv·m + iu] = f(u_iu, v_iv).
    pub values: Vec<f64>,
    /// ∂ᵤf(·, 0).
    pub du0: Vec<f64>,
    /// ∂ᵥf(·, 0⁺) from the exact exponential profile.
    pub dv0: Vec<f64>,
}

impl HalfPlaneField {
    fn from_amplitudes(grids: PdeGrids, params: LevySymbolParams, amplitude: Vec<Complex64>) -> Self {
        let domain = grids.u_domain();
        let ks = domain.frequencies();
        let rates: Vec<Complex64> = ks.iter().map(|&k| decay_rate(k, &params)).collect();
        let ifft = FftPlanner::new().plan_fft_inverse(grids.m);
        let slice = |coeffs: &dyn Fn(usize) -> Complex64| -> Vec<f64> {
            let u0 = domain.origin();
            let scale = 1.0 / domain.extent();
            let mut buf: Vec<Complex64> = (0..grids.m)
                .map(|j| coeffs(j) * Complex64::from_polar(scale, 2.0 * PI * ks[j] * u0))
                .collect();
            ifft.process(&mut buf);
            buf.into_iter().map(|c| c.re).collect()
        };
        let mut values = Vec::with_capacity(grids.m * grids.p);
        for v in grids.v_grid() {
            values.extend(slice(&|j| amplitude[j] * (-rates[j] * v).exp()));
        }
        let du0 = slice(&|j| amplitude[j] * Complex64::new(0.0, 2.0 * PI * ks[j]));
        let dv0 = slice(&|j| -amplitude[j] * rates[j]);
        HalfPlaneField { grids, params, amplitude, values, du0, dv0 }
    }

    pub fn u_grid(&self) -> Vec<f64> {
        self.grids.u_domain().grid()
    }

    pub fn row(&self, iv: usize) -> &[f64] {
        &self.values[iv * self.grids.m..(iv + 1) * self.grids.m]
    }

    pub fn at(&self, iv: usize, iu: usize) -> f64 {
        self.values[iv * self.grids.m + iu]
    }

    /// F_k(v) as a spectrum on the u-domain.
    pub fn slice(&self, v: f64) -> SpectrumField {
        let domain = self.grids.u_domain();
        let coeffs = domain
            .frequencies()
            .into_iter()
            .zip(&self.amplitude)
            .map(|(k, amp)| amp * (-decay_rate(k, &self.params) * v).exp())
            .collect();
        SpectrumField { domain, coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude.iter().all(|c| c.norm() == 0.0)
    }

    /// CSV rows (u, v, value), every `stride`-th point in each direction.
    pub fn write_csv(&self, path: &Path, stride: usize) -> Result<()> {
        let stride = stride.max(1);
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(["u", "v", "value"]).map_err(|e| Error::csv(path, e))?;
        let us = self.u_grid();
        for (iv, v) in self.grids.v_grid().iter().enumerate().step_by(stride) {
            for iu in (0..self.grids.m).step_by(stride) {
                w.write_record([format!("{}", us[iu]), format!("{v}"), format!("{}", self.at(iv, iu))])
                    .map_err(|e| Error::csv(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Little-endian slab: m, p (u64), U, V, λ, a (f64), then values row by row.
    pub fn write_binary(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(&(self.grids.m as u64).to_le_bytes())?;
        w.write_all(&(self.grids.p as u64).to_le_bytes())?;
        for x in [self.grids.half_width, self.grids.v_max, self.params.lambda, self.params.a] {
            w.write_all(&x.to_le_bytes())?;
        }
        for x in &self.values {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Rejects grids that do not resolve φ or do not let every mode decay by 10
/// lengths before V.
fn check_resolution(phi: &TestFunction, grids: &PdeGrids, params: &LevySymbolParams) -> Result<()> {
    grids.validate()?;
    let domain = grids.u_domain();
    let ks = domain.frequencies();
    let peak = ks.iter().map(|&k| phi.fourier(k).norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(());
    }
    let nyquist = grids.m as f64 / (2.0 * domain.extent());
    for &k in &ks {
        let mag = phi.fourier(k).norm();
        if k.abs() >= 0.5 * nyquist && mag > 1e-12 * peak {
            return Err(Error::Unresolved { k, reason: format!("|φ̂| = {mag:.3e} in the top octave") });
        }
        if mag > 1e-14 * peak && k != 0.0 && decay_rate(k, params).re * grids.v_max < 10.0 {
            return Err(Error::Unresolved { k, reason: format!("V = {} is under 10 decay lengths", grids.v_max) });
        }
    }
    let edge = phi.value(-grids.half_width).abs().max(phi.value(grids.half_width - grids.h_u()).abs());
    let top = domain.grid().iter().map(|&u| phi.value(u).abs()).fold(0.0, f64::max);
    if edge > 1e-12 * top {
        return Err(Error::Unresolved { k: 0.0, reason: format!("φ = {edge:.3e} at the window edge") });
    }
    Ok(())
}

pub fn solve_f(phi: &TestFunction, params: &LevySymbolParams, grids: PdeGrids) -> Result<HalfPlaneField> {
    params.validate()?;
    check_resolution(phi, &grids, params)?;
    let amplitude = grids
        .u_domain()
        .frequencies()
        .into_iter()
        .map(|k| f_amplitude(k, phi.fourier(k), params))
        .collect();
    Ok(HalfPlaneField::from_amplitudes(grids, *params, amplitude))
}

pub fn solve_g(f: &HalfPlaneField, params: &LevySymbolParams) -> Result<HalfPlaneField> {
    params.validate()?;
    if *params != f.params {
        return Err(Error::InvalidParam("g must use the parameters f was built with".into()));
    }
    let amplitude = f
        .grids
        .u_domain()
        .frequencies()
        .into_iter()
        .zip(&f.amplitude)
        .map(|(k, &f0)| g_amplitude(k, f0, params))
        .collect();
    Ok(HalfPlaneField::from_amplitudes(f.grids, *params, amplitude))
}

fn discrete_l2(xs: impl IntoIterator<Item = f64>, cell: f64) -> f64 {
    (crate::util::sum(xs.into_iter().map(|x| x * x)) * cell).sqrt()
}

/// Discrete L² of 6λ∂ᵥᵥh − ∂ᵤh − 2ah over interior v-nodes, centered differences.
pub fn interior_residual(h: &HalfPlaneField) -> f64 {
    let PdeGrids { m, p, .. } = h.grids;
    let (hu, hv) = (h.grids.h_u(), h.grids.h_v());
    let (lambda, a) = (h.params.lambda, h.params.a);
    let mut acc = Sum::default();
    for iv in 1..p - 1 {
        let (below, row, above) = (h.row(iv - 1), h.row(iv), h.row(iv + 1));
        for iu in 0..m {
            let du = (row[(iu + 1) % m] - row[(iu + m - 1) % m]) / (2.0 * hu);
            let dvv = (above[iu] - 2.0 * row[iu] + below[iu]) / (hv * hv);
            let r = 6.0 * lambda * dvv - du - 2.0 * a * row[iu];
            acc.add(r * r);
        }
    }
    (acc.value() * hu * hv).sqrt()
}

/// One-sided second-order ∂ᵥ at v = 0.
fn dv_at_zero(h: &HalfPlaneField, iu: usize) -> f64 {
    (-3.0 * h.at(0, iu) + 4.0 * h.at(1, iu) - h.at(2, iu)) / (2.0 * h.grids.h_v())
}

/// One-sided second-order ∂ᵥᵥ at v = 0.
fn dvv_at_zero(h: &HalfPlaneField, iu: usize) -> f64 {
    let hv = h.grids.h_v();
    (2.0 * h.at(0, iu) - 5.0 * h.at(1, iu) + 4.0 * h.at(2, iu) - h.at(3, iu)) / (hv * hv)
}

/// Discrete L² of 12λ∂ᵥf(·,0) − φ′ with ∂ᵥ from one-sided differences.
pub fn boundary_residual_f(f: &HalfPlaneField, phi: &TestFunction) -> f64 {
    let us = f.u_grid();
    let r = (0..f.grids.m).map(|iu| 12.0 * f.params.lambda * dv_at_zero(f, iu) - phi.derivative(us[iu]));
    discrete_l2(r, f.grids.h_u())
}

/// Same identity with the exact one-sided trace ∂ᵥf(·,0⁺).
pub fn boundary_residual_f_exact(f: &HalfPlaneField, phi: &TestFunction) -> f64 {
    let us = f.u_grid();
    let r = f.dv0.iter().zip(&us).map(|(dv, &u)| 12.0 * f.params.lambda * dv - phi.derivative(u));
    discrete_l2(r, f.grids.h_u())
}

/// Discrete L² of 24λ∂ᵥg(·,0) − 4(af − λ∂ᵥᵥf)(·,0), all by one-sided differences.
pub fn boundary_residual_g(f: &HalfPlaneField, g: &HalfPlaneField) -> f64 {
    let (lambda, a) = (f.params.lambda, f.params.a);
    let r = (0..f.grids.m).map(|iu| {
        24.0 * lambda * dv_at_zero(g, iu) - 4.0 * (a * f.at(0, iu) - lambda * dvv_at_zero(f, iu))
    });
    discrete_l2(r, f.grids.h_u())
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Residuals {
    pub m: usize,
    pub p: usize,
    pub h_u: f64,
    pub h_v: f64,
    pub interior_f: f64,
    pub boundary_f: f64,
    pub interior_g: f64,
    pub boundary_g: f64,
}

pub fn residuals(phi: &TestFunction, params: &LevySymbolParams, grids: PdeGrids) -> Result<Residuals> {
    let f = solve_f(phi, params, grids)?;
    let g = solve_g(&f, params)?;
    Ok(Residuals {
        m: grids.m,
        p: grids.p,
        h_u: grids.h_u(),
        h_v: grids.h_v(),
        interior_f: interior_residual(&f),
        boundary_f: boundary_residual_f(&f, phi),
        interior_g: interior_residual(&g),
        boundary_g: boundary_residual_g(&f, &g),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RefinementStudy {
    pub levels: Vec<Residuals>,
    /// log₂ of successive residual ratios, per residual, per halving.
    pub orders: Vec<[f64; 4]>,
}

impl RefinementStudy {
    /// Smallest observed order across residuals and halvings.
    pub fn min_order(&self) -> f64 {
        self.orders.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Residuals on `levels` successively halved grids starting at `base`.
pub fn refinement_study(
    phi: &TestFunction,
    params: &LevySymbolParams,
    base: PdeGrids,
    levels: usize,
) -> Result<RefinementStudy> {
    let mut grids = base;
    let mut out = Vec::with_capacity(levels);
    for _ in 0..levels {
        out.push(residuals(phi, params, grids)?);
        grids = grids.refined();
    }
    let orders = out
        .windows(2)
        .map(|w| {
            let o = |a: f64, b: f64| (a / b).log2();
            [
                o(w[0].interior_f, w[1].interior_f),
                o(w[0].boundary_f, w[1].boundary_f),
                o(w[0].interior_g, w[1].interior_g),
                o(w[0].boundary_g, w[1].boundary_g),
            ]
        })
        .collect();
    Ok(RefinementStudy { levels: out, orders })
}

/// Discrete L² distance between −2∂ᵤf(·,0) and the inverse transform of Ψₐφ̂,
/// where φ̂ comes from the sampled φ.
pub fn generator_consistency(phi: &TestFunction, f: &HalfPlaneField, params: &LevySymbolParams) -> f64 {
    let domain = f.grids.u_domain();
    let samples: Vec<f64> = domain.grid().iter().map(|&u| phi.value(u)).collect();
    let spec = SpectrumField::from_samples(domain, &samples).map(|k, c| c * levy::symbol(k, params));
    let l_phi = spec.samples();
    discrete_l2(l_phi.iter().zip(&f.du0).map(|(l, du)| -2.0 * du - l), f.grids.h_u())
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EnergyFunctional {
    /// ∫∫ 8af² + 24λ(∂ᵥf)² mode by mode in closed form.
    pub lhs: f64,
    /// Same integral from the grid: end-corrected trapezoid in v plus the exact tail.
    pub lhs_grid: f64,
    /// ∫ |φ̂(k)|²(−symmetric part) dk.
    pub rhs: f64,
}

impl EnergyFunctional {
    pub fn relative_gap(&self) -> f64 {
        if self.rhs == 0.0 { (self.lhs - self.rhs).abs() } else { ((self.lhs - self.rhs) / self.rhs).abs() }
    }

    pub fn relative_gap_grid(&self) -> f64 {
        if self.rhs == 0.0 { (self.lhs_grid - self.rhs).abs() } else { ((self.lhs_grid - self.rhs) / self.rhs).abs() }
    }
}

/// ∫₀^∞ (8a|F|² + 24λ|∂ᵥF|²) dv for one mode.
fn mode_energy(k: f64, phi_hat: Complex64, p: &LevySymbolParams) -> f64 {
    if k == 0.0 {
        return 0.0;
    }
    let f0 = f_amplitude(k, phi_hat, p);
    let c = decay_rate(k, p);
    f0.norm_sqr() * (8.0 * p.a + 24.0 * p.lambda * c.norm_sqr()) / (2.0 * c.re)
}

/// Integrates a real spectral density over k, or sums it over the torus
/// frequencies j/L for a trigonometric sum.
fn spectral_integral(phi: &TestFunction, density: impl Fn(f64) -> f64) -> Result<f64> {
    if let TestFunction::TrigSum { period, cos, sin } = phi {
        let top = cos.len().max(sin.len()) as i64;
        return Ok(crate::util::sum((-top..=top).map(|j| density(j as f64 / period))) / period);
    }
    let reach = 10.0 / phi.width() + 1.0;
    let tol = Tolerance { abs: 1e-15, rel: 1e-13, max_intervals: 20_000 };
    let est = quadrature::integrate(|k| Complex64::new(density(k), 0.0), -reach, reach, 64, tol)?;
    Ok(est.value.re)
}

pub fn energy_functional(f: &HalfPlaneField, params: &LevySymbolParams, phi: &TestFunction) -> Result<EnergyFunctional> {
    let rhs = spectral_integral(phi, |k| -phi.fourier(k).norm_sqr() * levy::symmetric_part(k, params))?;
    let lhs = spectral_integral(phi, |k| mode_energy(k, phi.fourier(k), params))?;
    Ok(EnergyFunctional { lhs, rhs, lhs_grid: grid_energy(f) })
}

/// (∫∫ f², ∫∫ (∂ᵥf)²) from the grid: per-slice u-integrals (Parseval for
/// ∂ᵥf), trapezoid in v with the Euler–Maclaurin end correction, plus the
/// exact tail past V.
fn grid_norms(f: &HalfPlaneField) -> (f64, f64) {
    let grids = f.grids;
    let domain = grids.u_domain();
    let rates: Vec<Complex64> = domain.frequencies().iter().map(|&k| decay_rate(k, &f.params)).collect();
    let hu = grids.h_u();
    let mut l2 = Vec::with_capacity(grids.p);
    let mut dv = Vec::with_capacity(grids.p);
    for (iv, v) in grids.v_grid().into_iter().enumerate() {
        l2.push(crate::util::sum(f.row(iv).iter().map(|x| x * x)) * hu);
        let s = crate::util::sum(f.amplitude.iter().zip(&rates).map(|(amp, c)| (amp * c * (-c * v).exp()).norm_sqr()));
        dv.push(s / domain.extent());
    }
    let hv = grids.h_v();
    let integrate = |g: &[f64]| {
        let p = g.len();
        let mut trap = Sum::default();
        for (i, x) in g.iter().enumerate() {
            trap.add(if i == 0 || i == p - 1 { 0.5 * x } else { *x });
        }
        let slope0 = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * hv);
        let slope_end = (3.0 * g[p - 1] - 4.0 * g[p - 2] + g[p - 3]) / (2.0 * hv);
        trap.value() * hv - hv * hv / 12.0 * (slope_end - slope0)
    };
    let (mut tail_l2, mut tail_dv) = (Sum::default(), Sum::default());
    for (amp, c) in f.amplitude.iter().zip(&rates) {
        if c.re > 0.0 {
            let t = amp.norm_sqr() * (-2.0 * c.re * grids.v_max).exp() / (2.0 * c.re);
            tail_l2.add(t);
            tail_dv.add(t * c.norm_sqr());
        }
    }
    (
        integrate(&l2) + tail_l2.value() / domain.extent(),
        integrate(&dv) + tail_dv.value() / domain.extent(),
    )
}

fn grid_energy(f: &HalfPlaneField) -> f64 {
    let (l2, dv) = grid_norms(f);
    8.0 * f.params.a * l2 + 24.0 * f.params.lambda * dv
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Integrability {
    /// ∫∫ f² du dv.
    pub l2: f64,
    /// ∫∫ (∂ᵥf)² du dv.
    pub dv_l2: f64,
}

pub fn integrability(f: &HalfPlaneField) -> Integrability {
    let (l2, dv_l2) = grid_norms(f);
    Integrability { l2, dv_l2 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> LevySymbolParams {
        LevySymbolParams::new(1.0, 1.0).unwrap()
    }

    fn gauss() -> TestFunction {
        TestFunction::gaussian(0.0, 1.0)
    }

    #[test]
    fn zero_test_function_gives_zero_fields() {
        let p = unit();
        let phi = TestFunction::zero();
        let grids = PdeGrids::default_for(&gauss(), &p);
        let grids = PdeGrids { m: 256, p: 64, ..grids };
        let f = solve_f(&phi, &p, grids).unwrap();
        assert!(f.values.iter().all(|x| *x == 0.0));
        let g = solve_g(&f, &p).unwrap();
        assert!(g.values.iter().all(|x| *x == 0.0));
        assert_eq!(generator_consistency(&phi, &f, &p), 0.0);
    }

    #[test]
    fn mode_profiles_solve_the_system() {
        let p = LevySymbolParams::new(0.7, 2.1).unwrap();
        for k in [-3.0, -0.4, 0.25, 1.7] {
            let c = decay_rate(k, &p);
            let f0 = f_amplitude(k, Complex64::new(0.3, -0.2), &p);
            // 6λc² − 2iπk − 2a = 0
            let interior = 6.0 * p.lambda * c * c - Complex64::new(2.0 * p.a, 2.0 * PI * k);
            assert!(interior.norm() < 1e-13);
            // 12λ(−c)F(0) = 2iπk φ̂
            let bc = -12.0 * p.lambda * c * f0 - Complex64::new(0.0, 2.0 * PI * k) * Complex64::new(0.3, -0.2);
            assert!(bc.norm() < 1e-13);
            let g0 = g_amplitude(k, f0, &p);
            let gbc = 24.0 * p.lambda * (-c * g0) - 4.0 * (p.a * f0 - p.lambda * c * c * f0);
            assert!(gbc.norm() < 1e-13);
            // −2(2iπk)F(0) = Ψ φ̂
            let gen = -2.0 * Complex64::new(0.0, 2.0 * PI * k) * f0 - levy::symbol(k, &p) * Complex64::new(0.3, -0.2);
            assert!(gen.norm() < 1e-13);
        }
    }

    #[test]
    fn unresolved_grids_are_reported() {
        let p = unit();
        let coarse = PdeGrids { half_width: 12.0, m: 64, v_max: 20.0, p: 64 };
        assert!(matches!(solve_f(&gauss(), &p, coarse), Err(Error::Unresolved { .. })));
        let short = PdeGrids { half_width: 12.0, m: 1024, v_max: 2.0, p: 64 };
        assert!(matches!(solve_f(&gauss(), &p, short), Err(Error::Unresolved { .. })));
    }

    #[test]
    fn boundary_trace_is_exact() {
        let p = unit();
        let f = solve_f(&gauss(), &p, PdeGrids::default_for(&gauss(), &p)).unwrap();
        assert!(boundary_residual_f_exact(&f, &gauss()) < 1e-10);
    }

    #[test]
    fn translation_equivariance() {
        let p = unit();
        let grids = PdeGrids { half_width: 16.0, m: 1024, v_max: 21.0, p: 8 };
        let f = solve_f(&gauss(), &p, grids).unwrap();
        let shift = 32;
        let u0 = shift as f64 * grids.h_u();
        let fs = solve_f(&gauss().shifted(u0), &p, grids).unwrap();
        for iu in 0..grids.m {
            assert!((fs.du0[(iu + shift) % grids.m] - f.du0[iu]).abs() < 1e-13);
        }
    }

    #[test]
    fn energy_scales_quadratically() {
        let p = unit();
        let grids = PdeGrids { half_width: 12.0, m: 512, v_max: 21.0, p: 128 };
        let f1 = solve_f(&gauss(), &p, grids).unwrap();
        let f2 = solve_f(&gauss().scaled(2.0), &p, grids).unwrap();
        let e1 = energy_functional(&f1, &p, &gauss()).unwrap();
        let e2 = energy_functional(&f2, &p, &gauss().scaled(2.0)).unwrap();
        assert!((e2.lhs - 4.0 * e1.lhs).abs() < 1e-12 * e2.lhs);
        assert!((e2.rhs - 4.0 * e1.rhs).abs() < 1e-12 * e2.rhs);
    }
}
