//! The interpolating Lévy operator through its symbol
//! Ψₐ(k) = (2iπk)² / (2√(3λ)·√(a + iπk)), principal square root.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};
use crate::spectral::SpectrumField;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevySymbolParams {
    pub lambda: f64,
    pub a: f64,
}

impl LevySymbolParams {
    pub fn new(lambda: f64, a: f64) -> Result<Self> {
        let p = LevySymbolParams { lambda, a };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite() && self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "lambda = {}, a = {} must both be positive",
                self.lambda, self.a
            )));
        }
        Ok(())
    }
}

pub fn symbol(k: f64, p: &LevySymbolParams) -> Complex64 {
    if k == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let root = Complex64::new(p.a, PI * k).sqrt();
    Complex64::new(-4.0 * PI * PI * k * k / (2.0 * (3.0 * p.lambda).sqrt()), 0.0) / root
}

/// Multiplier of the symmetric part, in the closed form
/// −(4π²k²/(2√(6λ)))·√(a + |a+iπk|)/|a+iπk|.
pub fn symmetric_part(k: f64, p: &LevySymbolParams) -> f64 {
    if k == 0.0 {
        return 0.0;
    }
    let modulus = p.a.hypot(PI * k);
    -(4.0 * PI * PI * k * k / (2.0 * (6.0 * p.lambda).sqrt())) * (p.a + modulus).sqrt() / modulus
}

/// Multiplies by e^{tΨₐ(k)}.
pub fn propagate(spec: &SpectrumField, t: f64, p: &LevySymbolParams) -> Result<SpectrumField> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParam(format!("propagation time {t}")));
    }
    Ok(spec.map(|k, c| c * (symbol(k, p) * t).exp()))
}

/// Multiplies by e^{tΨₐ(−k)}, the semigroup of the adjoint operator.
pub fn propagate_adjoint(spec: &SpectrumField, t: f64, p: &LevySymbolParams) -> Result<SpectrumField> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParam(format!("propagation time {t}")));
    }
    Ok(spec.map(|k, c| c * (symbol(-k, p) * t).exp()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevyMeasureParams {
    pub symbol: LevySymbolParams,
    /// Absolute/relative target for the quadrature.
    pub tolerance: f64,
    /// y below `split` is integrated in s = √y.
    pub split: f64,
}

impl LevyMeasureParams {
    pub fn new(symbol: LevySymbolParams) -> Self {
        LevyMeasureParams { symbol, tolerance: 1e-11, split: 1.0 / symbol.a.max(1e-3) }
    }
}

/// Density of the (positive) jump measure on (0, ∞).
pub fn levy_density(y: f64, p: &LevySymbolParams) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::InvalidParam(format!("jump size y = {y} must be positive")));
    }
    let ay = p.a * y;
    let pre = 4.0 * p.a.powf(2.5) / (6.0 * p.lambda * PI).sqrt();
    let bracket = 3.0 / (16.0 * ay.powf(2.5)) + 1.0 / (2.0 * ay.powf(1.5)) + 1.0 / ay.sqrt();
    Ok(pre * (-2.0 * p.a * y).exp() * bracket)
}

/// Second derivative of the Γ(½, 1) density, e^{−x}x^{−1/2}(1 + 1/x + 3/(4x²))/√π.
pub fn gamma_half_second_derivative(x: f64) -> f64 {
    (-x).exp() / (PI * x).sqrt() * (1.0 + 1.0 / x + 0.75 / (x * x))
}

/// The same density written as (4a^{5/2}/√(3λ))·f_X''(2ay).
pub fn levy_density_gamma_form(y: f64, p: &LevySymbolParams) -> f64 {
    4.0 * p.a.powf(2.5) / (3.0 * p.lambda).sqrt() * gamma_half_second_derivative(2.0 * p.a * y)
}

/// e^{−iθ} − 1 + iθ without cancellation: (cos θ − 1) + i(θ − sin θ).
pub fn compensated_exponential(theta: f64) -> Complex64 {
    let half = (0.5 * theta).sin();
    let re = -2.0 * half * half;
    let im = if theta.abs() < 0.5 {
        // θ − sin θ = θ³/3! − θ⁵/5! + …
        let t2 = theta * theta;
        let mut term = theta * t2 / 6.0;
        let mut acc = 0.0;
        let mut j = 3.0;
        while term.abs() > 1e-18 * theta.abs().max(1e-300) * t2 {
            acc += term;
            term *= -t2 / ((j + 1.0) * (j + 2.0));
            j += 2.0;
        }
        acc
    } else {
        theta - theta.sin()
    };
    Complex64::new(re, im)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LkCheck {
    pub k: f64,
    pub integral: Complex64,
    pub symbol: Complex64,
    pub residual: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// ∫₀^∞ g(y) dy for a density with a y^{−5/2} singularity: s = √y on
/// [0, split], then panels of about one oscillation up to where e^{−2ay} is
/// negligible.
fn jump_integral(
    mut g: impl FnMut(f64) -> Complex64,
    a: f64,
    k: f64,
    split: f64,
    tol: f64,
) -> Result<quadrature::Estimate> {
    let tolerance = Tolerance { abs: tol, rel: tol, max_intervals: 50_000 };
    let near = quadrature::integrate(|s| g(s * s) * (2.0 * s), 0.0, split.sqrt(), 8, tolerance)?;
    // e^{−2ay}·(1 + 2π|k|y) below 1e-18 relative
    let mut y_max = split;
    while (-2.0 * a * y_max).exp() * (1.0 + 2.0 * PI * k.abs() * y_max) * (a * y_max).powf(-0.5) > 1e-18 {
        y_max *= 1.5;
    }
    let panels = ((y_max - split) * (2.0 * k.abs() + a)).ceil().max(4.0) as usize;
    let far = quadrature::integrate(&mut g, split, y_max, panels.min(20_000), tolerance)?;
    Ok(quadrature::Estimate {
        value: near.value + far.value,
        error: near.error + far.error,
        evaluations: near.evaluations + far.evaluations,
    })
}

/// Compares ∫₀^∞ (e^{−2iπky} − 1 + 2iπky)·density(y) dy with Ψₐ(k).
pub fn lk_check(k: f64, p: &LevyMeasureParams) -> Result<LkCheck> {
    p.symbol.validate()?;
    let psi = symbol(k, &p.symbol);
    if k == 0.0 {
        return Ok(LkCheck {
            k,
            integral: Complex64::new(0.0, 0.0),
            symbol: psi,
            residual: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let sym = p.symbol;
    let integrand = |y: f64| {
        if y <= 0.0 {
            // limit of (θ²/2)·density·2s as s → 0 is finite; the s-weight handles it
            return Complex64::new(0.0, 0.0);
        }
        compensated_exponential(2.0 * PI * k * y) * levy_density(y, &sym).unwrap_or(0.0)
    };
    let est = jump_integral(integrand, sym.a, k, p.split, p.tolerance)?;
    Ok(LkCheck {
        k,
        integral: est.value,
        symbol: psi,
        residual: (est.value - psi).norm(),
        error_estimate: est.error,
        evaluations: est.evaluations,
    })
}

/// H(t) = t²/√(1 − it).
pub fn lemma_h(t: f64) -> Complex64 {
    Complex64::new(t * t, 0.0) / Complex64::new(1.0, -t).sqrt()
}

/// H(t) through the jump integral: −∫₀^∞ (e^{itx} − 1 − itx) f_X''(x) dx.
/// The compensated integral against the positive f_X'' equals −t²/√(1 − it).
pub fn lemma_h_quadrature(t: f64, tol: f64) -> Result<Complex64> {
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let integrand = |x: f64| {
        if x <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        compensated_exponential(-t * x) * gamma_half_second_derivative(x)
    };
    // x = 2ay with a = ½ maps the Γ(½,1) density onto the jump-integral layout
    let est = jump_integral(integrand, 0.5, t / (2.0 * PI), 1.0, tol)?;
    Ok(-est.value)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CrossoverRow {
    pub k: f64,
    pub a: f64,
    /// |√a·Ψₐ(k) − (−2π²k²/√(3λ))| relative to the limit.
    pub diffusive_error: f64,
    /// |Ψₐ(k) − Ψ₀(k)| relative to Ψ₀(k), Ψ₀ the skewed 3/2-stable symbol.
    pub stable_error: f64,
}

/// Symbol of the a → 0 limit, −4π²k²/(2√(3λ)·√(iπk)).
pub fn stable_symbol(k: f64, lambda: f64) -> Complex64 {
    if k == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(-4.0 * PI * PI * k * k / (2.0 * (3.0 * lambda).sqrt()), 0.0) / Complex64::new(0.0, PI * k).sqrt()
}

/// Limit of √a·Ψₐ(k) as a → ∞.
pub fn diffusive_symbol(k: f64, lambda: f64) -> f64 {
    -2.0 * PI * PI * k * k / (3.0 * lambda).sqrt()
}

pub fn crossover_limits(p: &LevySymbolParams, k_grid: &[f64]) -> Vec<CrossoverRow> {
    k_grid
        .iter()
        .filter(|k| **k != 0.0)
        .map(|&k| {
            let psi = symbol(k, p);
            let d = diffusive_symbol(k, p.lambda);
            let s = stable_symbol(k, p.lambda);
            CrossoverRow {
                k,
                a: p.a,
                diffusive_error: (psi * p.a.sqrt() - d).norm() / d.abs(),
                stable_error: (psi - s).norm() / s.norm(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lambda: f64, a: f64) -> LevySymbolParams {
        LevySymbolParams::new(lambda, a).unwrap()
    }

    #[test]
    fn symbol_basics() {
        let q = p(1.0, 1.0);
        assert_eq!(symbol(0.0, &q), Complex64::new(0.0, 0.0));
        for k in [0.3, 1.0, 7.0] {
            assert!((symbol(-k, &q) - symbol(k, &q).conj()).norm() < 1e-14);
            assert!(symbol(k, &q).re < 0.0);
        }
    }

    #[test]
    fn symmetric_part_is_real_part() {
        let q = p(0.7, 2.3);
        for i in 0..100 {
            let k = -20.0 + 0.4037 * i as f64;
            let want = symbol(k, &q).re;
            assert!((symmetric_part(k, &q) - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn density_forms_agree() {
        let q = p(1.3, 0.6);
        for y in [0.1, 1.0, 10.0] {
            let a = levy_density(y, &q).unwrap();
            let b = levy_density_gamma_form(y, &q);
            assert!((a - b).abs() <= 1e-12 * a);
        }
        assert!(levy_density(0.0, &q).is_err());
    }

    #[test]
    fn density_small_jump_asymptote() {
        let q = p(1.0, 2.0);
        let limit = 3.0 / (4.0 * (6.0 * PI).sqrt());
        let at = |y: f64| levy_density(y, &q).unwrap() * y.powf(2.5);
        // leading correction is O(y), so Richardson on y = 1e-6, 1e-8 is exact to rounding
        let (a, b) = (at(1e-6), at(1e-8));
        let extrapolated = b + (b - a) * 1e-8 / (1e-6 - 1e-8);
        assert!((extrapolated - limit).abs() < 1e-9);
    }

    #[test]
    fn lk_matches_symbol() {
        for (k, a) in [(0.5, 1.0), (1.0, 1.0), (2.0, 1.0)] {
            let r = lk_check(k, &LevyMeasureParams::new(p(1.0, a))).unwrap();
            assert!(r.residual < 1e-6, "k={k}: {:?}", r);
        }
        assert_eq!(lk_check(0.0, &LevyMeasureParams::new(p(1.0, 1.0))).unwrap().residual, 0.0);
    }

    #[test]
    fn lemma_h_value() {
        let want = Complex64::from_polar(2f64.powf(-0.25), PI / 8.0);
        assert!((lemma_h(1.0) - want).norm() < 1e-15);
        assert!((want - Complex64::new(0.77689, 0.32180)).norm() < 1e-5);
        let q = lemma_h_quadrature(1.0, 1e-11).unwrap();
        assert!((q - want).norm() < 1e-6, "{q}");
    }

    #[test]
    fn compensated_exponential_matches_direct_form() {
        for th in [1e-3, 0.2, 0.49, 0.51, 3.0, -2.0] {
            let direct = Complex64::new(0.0, -th).exp() - 1.0 + Complex64::new(0.0, th);
            assert!((compensated_exponential(th) - direct).norm() < 1e-13);
        }
        let tiny = compensated_exponential(1e-6);
        assert!((tiny.re + 0.5e-12).abs() < 1e-24 && (tiny.im - 1e-18 / 6.0).abs() < 1e-30);
    }

    #[test]
    fn crossover_limits_reach_targets() {
        let rows = crossover_limits(&p(1.0, 1e4), &[-2.0, -1.0, 0.5, 1.0, 2.0]);
        assert!(rows.iter().all(|r| r.diffusive_error <= 2e-2));
        let small = crossover_limits(&p(1.0, 1e-6), &[1.0]);
        assert!(small[0].stable_error <= 1e-3);
    }
}
