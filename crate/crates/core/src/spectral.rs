//! Sampled functions and their Fourier transforms.
//!
//! Coefficients approximate the continuous transform φ̂(k) = ∫ e^{−2iπuk} φ(u) du,
//! so Fourier multipliers act on them directly. On a torus of period L the
//! coefficient at k = j/L is ∫₀ᴸ e^{−2iπuk} φ(u) du and φ(u) = (1/L) Σₖ φ̂(k) e^{2iπku}.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// [0, period) sampled at m points.
    Periodic { period: f64, m: usize },
    /// [−half_width, half_width) sampled at m points; treated as a torus of length 2U.
    Line { half_width: f64, m: usize },
}

impl Domain {
    pub fn len(&self) -> usize {
        match *self {
            Domain::Periodic { m, .. } | Domain::Line { m, .. } => m,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Length of the underlying torus.
    pub fn extent(&self) -> f64 {
        match *self {
            Domain::Periodic { period, .. } => period,
            Domain::Line { half_width, .. } => 2.0 * half_width,
        }
    }

    pub fn origin(&self) -> f64 {
        match *self {
            Domain::Periodic { .. } => 0.0,
            Domain::Line { half_width, .. } => -half_width,
        }
    }

    pub fn spacing(&self) -> f64 {
        self.extent() / self.len() as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let (u0, h) = (self.origin(), self.spacing());
        (0..self.len()).map(|j| u0 + h * j as f64).collect()
    }

    /// Frequency of FFT slot `j`; slots at or above m/2 are negative.
    pub fn frequency(&self, j: usize) -> f64 {
        let m = self.len();
        let signed = if j < m / 2 { j as f64 } else { j as f64 - m as f64 };
        signed / self.extent()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.frequency(j)).collect()
    }

    pub fn refined(&self) -> Domain {
        match *self {
            Domain::Periodic { period, m } => Domain::Periodic { period, m: 2 * m },
            Domain::Line { half_width, m } => Domain::Line { half_width, m: 2 * m },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumField {
    pub domain: Domain,
    pub coeffs: Vec<Complex64>,
}

impl SpectrumField {
    pub fn from_fn(domain: Domain, hat: impl Fn(f64) -> Complex64) -> Self {
        let coeffs = domain.frequencies().into_iter().map(hat).collect();
        SpectrumField { domain, coeffs }
    }

    pub fn from_samples(domain: Domain, samples: &[f64]) -> Self {
        assert_eq!(samples.len(), domain.len());
        let mut buf: Vec<Complex64> = samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        let (h, u0) = (domain.spacing(), domain.origin());
        for (j, c) in buf.iter_mut().enumerate() {
            let k = domain.frequency(j);
            *c *= Complex64::from_polar(h, -2.0 * PI * k * u0);
        }
        SpectrumField { domain, coeffs: buf }
    }

    pub fn complex_samples(&self) -> Vec<Complex64> {
        let (u0, scale) = (self.domain.origin(), 1.0 / self.domain.extent());
        let mut buf: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * Complex64::from_polar(scale, 2.0 * PI * self.domain.frequency(j) * u0))
            .collect();
        FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
        buf
    }

    /// Real part of the inverse transform on the grid.
    pub fn samples(&self) -> Vec<f64> {
        self.complex_samples().into_iter().map(|c| c.re).collect()
    }

    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| f(self.domain.frequency(j), c))
            .collect();
        SpectrumField { domain: self.domain, coeffs }
    }

    /// Multiplication by 2iπk; the unpaired Nyquist slot is zeroed.
    pub fn derivative(&self) -> Self {
        let m = self.domain.len();
        let mut d = self.map(|k, c| c * Complex64::new(0.0, 2.0 * PI * k));
        if m % 2 == 0 {
            d.coeffs[m / 2] = Complex64::new(0.0, 0.0);
        }
        d
    }

    pub fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        let m = self.coeffs.len();
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
        (1..m).all(|j| (self.coeffs[m - j] - self.coeffs[j].conj()).norm() <= tol * scale)
            && self.coeffs[0].im.abs() <= tol * scale
    }

    /// ∫ φ ψ̄ through Parseval.
    pub fn inner(&self, other: &SpectrumField) -> Complex64 {
        let mut acc = crate::util::ComplexSum::default();
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            acc.add(a * b.conj());
        }
        acc.value() / self.domain.extent()
    }
}
