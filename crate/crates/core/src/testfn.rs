//! Closed-form test functions with exact Fourier transforms.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// amplitude · exp(−π((u − center)/width)²)
    Gaussian { center: f64, width: f64, amplitude: f64 },
    /// Σⱼ coeffs[j] · Hⱼ(√(2π)s) e^{−πs²} with s = (u − center)/width.
    /// These Hermite functions are eigenfunctions of the Fourier transform.
    HermiteDamped { center: f64, width: f64, coeffs: Vec<f64> },
    /// Σ (cos[j] cos(2πju/L) + sin[j] sin(2πju/L)) on a torus of length L.
    TrigSum { period: f64, cos: Vec<f64>, sin: Vec<f64> },
}

/// Physicists' Hermite polynomials H₀..H_deg at x, and their derivatives.
fn hermite(deg: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut h = vec![1.0; deg + 1];
    if deg >= 1 {
        h[1] = 2.0 * x;
    }
    for j in 1..deg {
        h[j + 1] = 2.0 * x * h[j] - 2.0 * j as f64 * h[j - 1];
    }
    let dh = (0..=deg).map(|j| if j == 0 { 0.0 } else { 2.0 * j as f64 * h[j - 1] }).collect();
    (h, dh)
}

const ALPHA: f64 = 2.506_628_274_631_000_7; // √(2π)

impl TestFunction {
    pub fn gaussian(center: f64, width: f64) -> Self {
        TestFunction::Gaussian { center, width, amplitude: 1.0 }
    }

    pub fn zero() -> Self {
        TestFunction::Gaussian { center: 0.0, width: 1.0, amplitude: 0.0 }
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self.clone() {
            TestFunction::Gaussian { center, width, amplitude } => {
                TestFunction::Gaussian { center, width, amplitude: s * amplitude }
            }
            TestFunction::HermiteDamped { center, width, coeffs } => {
                TestFunction::HermiteDamped { center, width, coeffs: coeffs.iter().map(|c| s * c).collect() }
            }
            TestFunction::TrigSum { period, cos, sin } => TestFunction::TrigSum {
                period,
                cos: cos.iter().map(|c| s * c).collect(),
                sin: sin.iter().map(|c| s * c).collect(),
            },
        }
    }

    pub fn shifted(&self, du: f64) -> Self {
        match self.clone() {
            TestFunction::Gaussian { center, width, amplitude } => {
                TestFunction::Gaussian { center: center + du, width, amplitude }
            }
            TestFunction::HermiteDamped { center, width, coeffs } => {
                TestFunction::HermiteDamped { center: center + du, width, coeffs }
            }
            TestFunction::TrigSum { period, cos, sin } => {
                // rotate each harmonic by the phase 2πj·du/L
                let mut c2 = cos.clone();
                let mut s2 = sin.clone();
                for j in 0..cos.len().max(sin.len()) {
                    let (a, b) = (cos.get(j).copied().unwrap_or(0.0), sin.get(j).copied().unwrap_or(0.0));
                    let th = 2.0 * PI * j as f64 * du / period;
                    if j < c2.len() {
                        c2[j] = a * th.cos() - b * th.sin();
                    }
                    if j < s2.len() {
                        s2[j] = b * th.cos() + a * th.sin();
                    }
                }
                TestFunction::TrigSum { period, cos: c2, sin: s2 }
            }
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        match self {
            TestFunction::Gaussian { center, width, amplitude } => {
                let s = (u - center) / width;
                amplitude * (-PI * s * s).exp()
            }
            TestFunction::HermiteDamped { center, width, coeffs } => {
                if coeffs.is_empty() {
                    return 0.0;
                }
                let s = (u - center) / width;
                let (h, _) = hermite(coeffs.len() - 1, ALPHA * s);
                let poly: f64 = coeffs.iter().zip(&h).map(|(c, h)| c * h).sum();
                poly * (-PI * s * s).exp()
            }
            TestFunction::TrigSum { period, cos, sin } => {
                let th = 2.0 * PI * u / period;
                let c: f64 = cos.iter().enumerate().map(|(j, a)| a * (j as f64 * th).cos()).sum();
                let s: f64 = sin.iter().enumerate().map(|(j, b)| b * (j as f64 * th).sin()).sum();
                c + s
            }
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            TestFunction::Gaussian { center, width, .. } => {
                let s = (u - center) / width;
                -2.0 * PI * s / width * self.value(u)
            }
            TestFunction::HermiteDamped { center, width, coeffs } => {
                if coeffs.is_empty() {
                    return 0.0;
                }
                let s = (u - center) / width;
                let (h, dh) = hermite(coeffs.len() - 1, ALPHA * s);
                let e = (-PI * s * s).exp();
                let d: f64 = coeffs
                    .iter()
                    .zip(h.iter().zip(&dh))
                    .map(|(c, (h, dh))| c * (ALPHA * dh - 2.0 * PI * s * h))
                    .sum();
                d * e / width
            }
            TestFunction::TrigSum { period, cos, sin } => {
                let w = 2.0 * PI / period;
                let th = w * u;
                let c: f64 = cos.iter().enumerate().map(|(j, a)| -a * j as f64 * w * (j as f64 * th).sin()).sum();
                let s: f64 = sin.iter().enumerate().map(|(j, b)| b * j as f64 * w * (j as f64 * th).cos()).sum();
                c + s
            }
        }
    }

    /// φ̂(k) = ∫ e^{−2iπuk} φ(u) du. For a trigonometric sum this is the torus
    /// coefficient ∫₀ᴸ, nonzero only at k ∈ ℤ/L.
    pub fn fourier(&self, k: f64) -> Complex64 {
        match self {
            TestFunction::Gaussian { center, width, amplitude } => {
                let mag = amplitude * width * (-PI * width * width * k * k).exp();
                Complex64::from_polar(mag, -2.0 * PI * k * center)
            }
            TestFunction::HermiteDamped { center, width, coeffs } => {
                if coeffs.is_empty() {
                    return Complex64::new(0.0, 0.0);
                }
                let q = width * k;
                let (h, _) = hermite(coeffs.len() - 1, ALPHA * q);
                let e = (-PI * q * q).exp();
                let mut acc = Complex64::new(0.0, 0.0);
                let mut phase = Complex64::new(1.0, 0.0);
                for (c, h) in coeffs.iter().zip(&h) {
                    acc += phase * (c * h * e);
                    phase *= Complex64::new(0.0, -1.0);
                }
                acc * Complex64::from_polar(*width, -2.0 * PI * k * center)
            }
            TestFunction::TrigSum { period, cos, sin } => {
                let x = k * period;
                let j = x.round();
                if (x - j).abs() > 1e-9 {
                    return Complex64::new(0.0, 0.0);
                }
                let ja = j.abs() as usize;
                let a = cos.get(ja).copied().unwrap_or(0.0);
                let b = sin.get(ja).copied().unwrap_or(0.0);
                if ja == 0 {
                    Complex64::new(period * a, 0.0)
                } else {
                    Complex64::new(0.5 * period * a, -0.5 * period * b * j.signum())
                }
            }
        }
    }

    /// Σₘ φ(u + mL); a trigonometric sum must share the period.
    pub fn periodized(&self, u: f64, period: f64) -> f64 {
        match self {
            TestFunction::TrigSum { .. } => self.value(u),
            _ => {
                let c = self.center();
                let reach = 12.0 * self.width();
                let base = (u - c) / period;
                let lo = (base - reach / period - 1.0).floor() as i64;
                let hi = (base + reach / period + 1.0).ceil() as i64;
                (-hi..=-lo).map(|m| self.value(u + m as f64 * period)).sum()
            }
        }
    }

    pub fn center(&self) -> f64 {
        match self {
            TestFunction::Gaussian { center, .. } | TestFunction::HermiteDamped { center, .. } => *center,
            TestFunction::TrigSum { .. } => 0.0,
        }
    }

    /// Length scale: the Gaussian width, widened with the Hermite degree.
    pub fn width(&self) -> f64 {
        match self {
            TestFunction::Gaussian { width, .. } => *width,
            TestFunction::HermiteDamped { width, coeffs, .. } => width * (1.0 + (coeffs.len() as f64).sqrt()),
            TestFunction::TrigSum { period, .. } => *period,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            TestFunction::Gaussian { amplitude, .. } => *amplitude == 0.0,
            TestFunction::HermiteDamped { coeffs, .. } => coeffs.iter().all(|c| *c == 0.0),
            TestFunction::TrigSum { cos, sin, .. } => cos.iter().chain(sin).all(|c| *c == 0.0),
        }
    }
}
