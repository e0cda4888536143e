//! Fluctuation fields, energy correlations, quadratic variations and the
//! replacement diagnostic, evaluated on chain states.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainState, Observer};
use crate::kernel::CorrelationKernel;
use crate::quadform::{self, BandedForm, QuadForm};
use crate::stats::Moments;
use crate::util::Sum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Energy,
    Correlation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub value: f64,
    pub t_macro: f64,
    pub kind: FieldKind,
    pub test_id: String,
}

/// Prefactor of the correlation field: n⁻¹ by default, n^{−3/4} on request.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationScaling {
    #[default]
    InverseN,
    InverseN34,
}

impl CorrelationScaling {
    pub fn factor(&self, n: usize) -> f64 {
        match self {
            CorrelationScaling::InverseN => 1.0 / n as f64,
            CorrelationScaling::InverseN34 => (n as f64).powf(-0.75),
        }
    }
}

/// n^{−1/2} Σₓ (ωₓ² − 1/β) φ(x/n), with `weights` the sampled φ(x/n).
pub fn energy_field(omega: &[f64], weights: &[f64], beta: f64, n: usize) -> f64 {
    let inv = 1.0 / beta;
    let s = crate::util::sum(omega.iter().zip(weights).map(|(w, p)| (w * w - inv) * p));
    s / (n as f64).sqrt()
}

/// prefactor · Σ_{x,y} (ωₓω_y − δ_{x,y}/β) f_{x,y}ⁿ.
pub fn correlation_field(omega: &[f64], kernel: &CorrelationKernel, beta: f64, scaling: CorrelationScaling) -> f64 {
    let f = kernel.form.eval(omega) - kernel.form.trace() / beta;
    scaling.factor(kernel.n) * f
}

/// Σ_z [2λ(𝒳_zF)² + 2γ(𝒴_zF)²] for a quadratic F with gradient 2g, g = Qω.
pub fn carre_du_champ(omega: &[f64], g: &[f64], lambda: f64, gamma: f64) -> f64 {
    let n = omega.len();
    let mut acc = Sum::default();
    for z in 0..n {
        let (zm, zp) = ((z + n - 1) % n, (z + 1) % n);
        let xf = 2.0 * ((omega[zp] - omega[z]) * g[zm] + (omega[zm] - omega[zp]) * g[z] + (omega[z] - omega[zm]) * g[zp]);
        let yf = 2.0 * (omega[zp] * g[z] - omega[z] * g[zp]);
        acc.add(2.0 * lambda * xf * xf + 2.0 * gamma * yf * yf);
    }
    acc.value()
}

/// 𝒳_zF for F = Σ ω_xω_y f_{x,y} written as the three-site terms plus the sum
/// over the remaining sites.
pub fn x_field_grouped(omega: &[f64], kernel: &CorrelationKernel, z: usize) -> f64 {
    let n = omega.len();
    let (zm, zp) = ((z + n - 1) % n, (z + 1) % n);
    let f = |x: usize, y: usize| kernel.get(x, y);
    let w = omega;
    let mut s = 2.0 * w[zp] * w[zm] * (-f(zp, zp) + f(zm, zm) - f(zm, z) + f(z, zp))
        + 2.0 * w[z] * w[zm] * (f(z, z) - f(zm, zm) - f(z, zp) + f(zm, zp))
        + 2.0 * w[z] * w[zp] * (-f(z, z) + f(zp, zp) - f(zm, zp) + f(zm, z))
        + 2.0
            * (w[z] * w[z] * (f(z, zp) - f(zm, z))
                + w[zp] * w[zp] * (f(zm, zp) - f(z, zp))
                + w[zm] * w[zm] * (f(zm, z) - f(zm, zp)));
    for y in (0..n).filter(|&y| y != zm && y != z && y != zp) {
        s += 2.0
            * w[y]
            * (w[z] * (f(zp, y) - f(zm, y)) + w[zp] * (f(zm, y) - f(z, y)) + w[zm] * (f(z, y) - f(zp, y)));
    }
    s
}

/// Integrand of ⟨ℳ^ℰ⟩: √n Σ_z [2λ(𝒳_zF)² + 2γ(𝒴_zF)²] with F = Σ ωₓ² φ(x/n).
pub fn energy_qv_rate(omega: &[f64], weights: &[f64], lambda: f64, gamma: f64, n: usize) -> f64 {
    let g: Vec<f64> = omega.iter().zip(weights).map(|(w, p)| w * p).collect();
    (n as f64).sqrt() * carre_du_champ(omega, &g, lambda, gamma)
}

/// Integrand of ⟨ℳ^𝒞⟩: n^{3/2}·c² Σ_z [2λ(𝒳_zF)² + 2γ(𝒴_zF)²], c the field prefactor.
pub fn correlation_qv_rate(
    omega: &[f64],
    kernel: &CorrelationKernel,
    lambda: f64,
    gamma: f64,
    scaling: CorrelationScaling,
    scratch: &mut Vec<f64>,
) -> f64 {
    scratch.resize(omega.len(), 0.0);
    kernel.apply(omega, scratch);
    let c = scaling.factor(kernel.n);
    (kernel.n as f64).powf(1.5) * c * c * carre_du_champ(omega, scratch, lambda, gamma)
}

/// E_β of Σ_z [2λ(𝒳_zF)² + 2γ(𝒴_zF)²] for F = ωᵀQω, with Q given by
/// `get` and vanishing beyond minimal-image distance `width`.
///
/// With P = QB_z, 𝒳_zF = ωᵀ(P + Pᵀ)ω and a centered Gaussian vector of
/// covariance β⁻¹I gives E[(ωᵀMω)²] = β⁻²((tr M)² + 2 tr M²).
pub fn gibbs_mean_carre_du_champ(
    sites: usize,
    width: usize,
    get: impl Fn(usize, usize) -> f64,
    lambda: f64,
    gamma: f64,
    beta: f64,
) -> f64 {
    let n = sites;
    let w = |i: i64| i.rem_euclid(n as i64) as usize;
    let reach = (width + 3) as i64;
    let rows: Vec<i64> = if 2 * reach + 1 >= n as i64 { (0..n as i64).collect() } else { (-reach..=reach).collect() };
    let relative = 2 * reach + 1 < n as i64;
    // column c of P as a sparse combination Σ coeff·Q[:, col]
    let column = |terms: &[(i64, f64)], row: usize| -> f64 { terms.iter().map(|&(c, s)| s * get(row, w(c))).sum() };
    let moment = |cols: &[(i64, Vec<(i64, f64)>)]| -> f64 {
        let mut tr = 0.0;
        let mut tr_pp = 0.0;
        let mut fro = 0.0;
        for (c, terms) in cols {
            tr += column(terms, w(*c));
            for (d, terms_d) in cols {
                tr_pp += column(terms, w(*d)) * column(terms_d, w(*c));
            }
            for &r in &rows {
                let v = column(terms, w(if relative { c + r } else { r }));
                fro += v * v;
            }
        }
        let inv2 = 1.0 / (beta * beta);
        inv2 * (4.0 * tr * tr + 2.0 * (2.0 * fro + 2.0 * tr_pp))
    };
    let mut acc = Sum::default();
    for z in 0..n as i64 {
        if lambda != 0.0 {
            let cols = [
                (z - 1, vec![(z, 1.0), (z + 1, -1.0)]),
                (z, vec![(z + 1, 1.0), (z - 1, -1.0)]),
                (z + 1, vec![(z - 1, 1.0), (z, -1.0)]),
            ];
            acc.add(2.0 * lambda * moment(&cols));
        }
        if gamma != 0.0 {
            let cols = [(z, vec![(z + 1, -1.0)]), (z + 1, vec![(z, 1.0)])];
            acc.add(2.0 * gamma * moment(&cols));
        }
    }
    acc.value()
}

/// E_β of the ⟨ℳ^ℰ⟩ integrand.
pub fn energy_qv_gibbs_mean(weights: &[f64], lambda: f64, gamma: f64, beta: f64, n: usize) -> f64 {
    let get = |x: usize, y: usize| if x == y { weights[x] } else { 0.0 };
    (n as f64).sqrt() * gibbs_mean_carre_du_champ(weights.len(), 0, get, lambda, gamma, beta)
}

/// E_β of the ⟨ℳ^𝒞⟩ integrand.
pub fn correlation_qv_gibbs_mean(
    kernel: &CorrelationKernel,
    lambda: f64,
    gamma: f64,
    beta: f64,
    scaling: CorrelationScaling,
) -> f64 {
    let c = scaling.factor(kernel.n);
    let cdc = gibbs_mean_carre_du_champ(kernel.sites(), kernel.width(), |x, y| kernel.get(x, y), lambda, gamma, beta);
    (kernel.n as f64).powf(1.5) * c * c * cdc
}

/// (β²/2)(1/N) Σ_y (ω²_{y+x}(t) − β⁻¹)(ω²_y(0) − β⁻¹) for every lag x, by FFT.
pub fn energy_correlation_profile(omega0: &[f64], omega_t: &[f64], beta: f64) -> Vec<f64> {
    let n = omega0.len();
    let inv = 1.0 / beta;
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv_fft = planner.plan_fft_inverse(n);
    let mut a: Vec<Complex64> = omega_t.iter().map(|w| Complex64::new(w * w - inv, 0.0)).collect();
    let mut b: Vec<Complex64> = omega0.iter().map(|w| Complex64::new(w * w - inv, 0.0)).collect();
    fwd.process(&mut a);
    fwd.process(&mut b);
    let mut c: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y.conj()).collect();
    inv_fft.process(&mut c);
    let scale = 0.5 * beta * beta / (n as f64 * n as f64);
    c.into_iter().map(|z| z.re * scale).collect()
}

/// Per-lag ensemble of translation-averaged energy correlations at one t.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyCorrelation {
    pub t_macro: f64,
    pub lags: Vec<Moments>,
    /// Σₓ of each replica's profile.
    pub total: Moments,
}

impl EnergyCorrelation {
    pub fn push(&mut self, profile: &[f64]) {
        if self.lags.is_empty() {
            self.lags = vec![Moments::default(); profile.len()];
        }
        for (m, v) in self.lags.iter_mut().zip(profile) {
            m.push(*v);
        }
        self.total.push(crate::util::sum(profile.iter().copied()));
    }

    pub fn merge(&mut self, other: &EnergyCorrelation) {
        if self.lags.is_empty() {
            *self = other.clone();
            return;
        }
        for (m, o) in self.lags.iter_mut().zip(&other.lags) {
            m.merge(o);
        }
        self.total.merge(&other.total);
    }
}

/// Sₙ(t, x) with its standard error, x taken by minimal image.
pub fn energy_correlation(ens: &EnergyCorrelation, x: i64) -> (f64, f64) {
    let n = ens.lags.len() as i64;
    let m = &ens.lags[x.rem_euclid(n) as usize];
    (m.mean, m.stderr())
}

/// n^{−1/2} Σₓ ψ(x)(ωₓ − ω_{x−1})ω_{x+1}.
pub fn replacement_integrand(omega: &[f64], psi: &[f64], n: usize) -> f64 {
    let len = omega.len();
    let s = crate::util::sum(
        (0..len).map(|x| psi[x] * (omega[x] - omega[(x + len - 1) % len]) * omega[(x + 1) % len]),
    );
    s / (n as f64).sqrt()
}

/// The variational bound on E[(∫₀ᵗ Ψ ds)²]: 24t/n^{3/2}·⟨Ψ, (−γ𝒮₂)⁻¹Ψ⟩, where the
/// explicit inverse gives ⟨Ψ, (−γ𝒮₂)⁻¹Ψ⟩ = (5/12)β⁻² Σψ² /(γn).
pub fn replacement_bound(psi: &[f64], t: f64, gamma: f64, beta: f64, n: usize) -> f64 {
    let norm = 5.0 / 12.0 / (beta * beta) * psi.iter().map(|p| p * p).sum::<f64>() / (gamma * n as f64);
    24.0 * t / (n as f64).powf(1.5) * norm
}

/// 𝒮₂ on quadratic forms: K₂(Q) − 4Q.
pub fn s2_form(q: &QuadForm) -> QuadForm {
    quadform::k2(q).plus(&q.scale(-4.0))
}

/// max over x of |𝒮₂(¼ω_{x−1}ω_{x+1} − ⅙ωₓω_{x+1}) − (ωₓ − ω_{x−1})ω_{x+1}| at ω.
pub fn s2_inverse_residual(omega: &[f64]) -> f64 {
    let n = omega.len();
    let mut worst: f64 = 0.0;
    for x in 0..n {
        let (xm, xp) = ((x + n - 1) % n, (x + 1) % n);
        let h = QuadForm::from_fn(n, |a, b| {
            let pair = |i: usize, j: usize| (a == i && b == j) || (a == j && b == i);
            0.5 * (if pair(xm, xp) { 0.25 } else { 0.0 } - if pair(x, xp) { 1.0 / 6.0 } else { 0.0 })
        });
        let lhs = s2_form(&h).eval(omega);
        let rhs = (omega[x] - omega[xm]) * omega[xp];
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

/// Trapezoid rule in macro time over observed values of `f`.
pub struct TimeIntegral<F: FnMut(&ChainState) -> f64> {
    f: F,
    fine: bool,
    last: Option<(f64, f64)>,
    pub integral: f64,
    /// (t, ∫₀ᵗ) after each observation.
    pub path: Vec<(f64, f64)>,
    record_path: bool,
}

impl<F: FnMut(&ChainState) -> f64> TimeIntegral<F> {
    /// `every_substep` integrates on the sub-step grid instead of the macro grid.
    pub fn new(f: F, every_substep: bool) -> Self {
        TimeIntegral { f, fine: every_substep, last: None, integral: 0.0, path: Vec::new(), record_path: false }
    }

    /// Keeps only the macro-step points of the running integral.
    pub fn with_path(mut self) -> Self {
        self.record_path = true;
        self
    }
}

impl<F: FnMut(&ChainState) -> f64> Observer for TimeIntegral<F> {
    fn observe(&mut self, state: &ChainState) {
        let v = (self.f)(state);
        if let Some((t0, v0)) = self.last {
            self.integral += 0.5 * (state.t_macro - t0) * (v + v0);
        }
        self.last = Some((state.t_macro, v));
        if self.record_path {
            self.path.push((state.t_macro, self.integral));
        }
    }

    fn every_substep(&self) -> bool {
        self.fine
    }
}

/// ℳₜ = F(t) − F(0) − ∫₀ᵗ n^{3/2}𝔏F ds for F = ωᵀQω − c, the drift integrated by
/// the trapezoid rule on the sub-step grid.
pub struct MartingaleResidual {
    form: BandedForm,
    drift: BandedForm,
    last: Option<(f64, f64)>,
    initial: Option<f64>,
    integral: f64,
    macro_dt: f64,
    /// (t, ℳₜ) at every macro time.
    pub series: Vec<(f64, f64)>,
}

impl MartingaleResidual {
    /// `form` holds the observable with its prefactor; λ, γ are the active noise
    /// intensities and `time_scale` the acceleration n^{3/2}.
    pub fn new(form: BandedForm, lambda: f64, gamma: f64, time_scale: f64, macro_dt: f64) -> Self {
        let g = form.generator(lambda, gamma);
        let drift = BandedForm {
            sites: g.sites,
            bands: g.bands.iter().map(|b| b.iter().map(|v| v * time_scale).collect()).collect(),
        };
        MartingaleResidual { form, drift, last: None, initial: None, integral: 0.0, macro_dt, series: Vec::new() }
    }
}

impl Observer for MartingaleResidual {
    fn observe(&mut self, state: &ChainState) {
        let d = self.drift.eval(&state.omega);
        if let Some((t0, d0)) = self.last {
            self.integral += 0.5 * (state.t_macro - t0) * (d + d0);
        }
        self.last = Some((state.t_macro, d));
        let f = self.form.eval(&state.omega);
        let f0 = *self.initial.get_or_insert(f);
        let k = (state.t_macro / self.macro_dt).round();
        if (state.t_macro - k * self.macro_dt).abs() <= 1e-9 * self.macro_dt {
            self.series.push((state.t_macro, f - f0 - self.integral));
        }
    }

    fn every_substep(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelKind;
    use crate::levy::LevySymbolParams;
    use crate::testfn::TestFunction;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn energy_field_of_empty_state() {
        let n = 64;
        let w = 10;
        let weights: Vec<f64> = (0..n).map(|x| if x < w { 1.0 } else { 0.0 }).collect();
        let v = energy_field(&vec![0.0; n], &weights, 1.0, n);
        assert!((v + w as f64 / (n as f64).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn grouped_x_derivative_matches_gradient_form() {
        let p = LevySymbolParams::new(1.0, 1.0).unwrap();
        let phi = TestFunction::gaussian(0.5, 0.2);
        let k = CorrelationKernel::build(&phi, &p, 16, 1, KernelKind::F).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = k.sites();
        let omega: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut g = vec![0.0; n];
        k.apply(&omega, &mut g);
        for z in 0..n {
            let (zm, zp) = ((z + n - 1) % n, (z + 1) % n);
            let grad = 2.0 * ((omega[zp] - omega[z]) * g[zm] + (omega[zm] - omega[zp]) * g[z] + (omega[z] - omega[zm]) * g[zp]);
            assert!((x_field_grouped(&omega, &k, z) - grad).abs() < 1e-12);
        }
    }

    #[test]
    fn gibbs_means_match_sampling() {
        let p = LevySymbolParams::new(1.0, 1.0).unwrap();
        let phi = TestFunction::gaussian(0.5, 0.2);
        let n = 16;
        let k = CorrelationKernel::build(&phi, &p, n, 1, KernelKind::F).unwrap();
        let weights = crate::kernel::site_weights(&phi, n, 1);
        let beta = 2.0;
        let (lam, gam) = (0.8, 0.3);
        let exact_c = correlation_qv_gibbs_mean(&k, lam, gam, beta, CorrelationScaling::InverseN);
        let exact_e = energy_qv_gibbs_mean(&weights, lam, gam, beta, n);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (mut mc, mut me) = (Moments::default(), Moments::default());
        let mut scratch = Vec::new();
        for _ in 0..40000 {
            let omega: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal) / beta.sqrt()).collect();
            mc.push(correlation_qv_rate(&omega, &k, lam, gam, CorrelationScaling::InverseN, &mut scratch));
            me.push(energy_qv_rate(&omega, &weights, lam, gam, n));
        }
        assert!((mc.mean - exact_c).abs() < 4.0 * mc.stderr(), "{} vs {exact_c} ± {}", mc.mean, mc.stderr());
        assert!((me.mean - exact_e).abs() < 4.0 * me.stderr(), "{} vs {exact_e} ± {}", me.mean, me.stderr());
    }

    #[test]
    fn gibbs_mean_matches_dense_formula() {
        // brute force E[(ωᵀMω)²] through the dense 𝒳_z matrices
        let n = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let raw: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q = QuadForm::from_fn(n, |x, y| raw[x * n + y]);
        let beta = 1.5;
        let want = {
            let mut acc = 0.0;
            for z in 0..n as i64 {
                for (weight, vf) in [(2.0 * 0.7, 0usize), (2.0 * 0.2, 1usize)] {
                    let mut m = vec![0.0; n * n];
                    // M = QB + BᵀQ with B the dense field matrix
                    let mut b = vec![0.0; n * n];
                    if vf == 0 {
                        for i in 0..3 {
                            for j in 0..3 {
                                let (r, c) = ((z - 1 + i as i64).rem_euclid(n as i64) as usize, (z - 1 + j as i64).rem_euclid(n as i64) as usize);
                                b[r * n + c] += quadform::X_FIELD[i][j];
                            }
                        }
                    } else {
                        for i in 0..2 {
                            for j in 0..2 {
                                let (r, c) = ((z + i as i64).rem_euclid(n as i64) as usize, (z + j as i64).rem_euclid(n as i64) as usize);
                                b[r * n + c] += quadform::Y_FIELD[i][j];
                            }
                        }
                    }
                    for r in 0..n {
                        for c in 0..n {
                            let mut s = 0.0;
                            for k in 0..n {
                                s += q.get(r as i64, k as i64) * b[k * n + c] + b[k * n + r] * q.get(k as i64, c as i64);
                            }
                            m[r * n + c] = s;
                        }
                    }
                    let tr: f64 = (0..n).map(|i| m[i * n + i]).sum();
                    let tr2: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| m[i * n + j] * m[j * n + i]).sum();
                    acc += weight * (tr * tr + 2.0 * tr2) / (beta * beta);
                }
            }
            acc
        };
        let got = gibbs_mean_carre_du_champ(n, n / 2, |x, y| q.get(x as i64, y as i64), 0.7, 0.2, beta);
        assert!((got - want).abs() < 1e-10 * want.abs(), "{got} vs {want}");
    }

    #[test]
    fn s2_inverse_identity_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [6usize, 9, 16] {
            let omega: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            assert!(s2_inverse_residual(&omega) < 1e-12);
        }
    }

    #[test]
    fn correlation_profile_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 12;
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let beta = 1.3;
        let prof = energy_correlation_profile(&a, &b, beta);
        for x in 0..n {
            let direct: f64 = (0..n)
                .map(|y| (b[(y + x) % n].powi(2) - 1.0 / beta) * (a[y].powi(2) - 1.0 / beta))
                .sum::<f64>()
                * 0.5
                * beta
                * beta
                / n as f64;
            assert!((prof[x] - direct).abs() < 1e-13);
        }
    }
}
