//! The two-scale kernel f_{x,y}ⁿ = f((x+y)/2n, |y−x|/√n) on a ring of N = L·n
//! sites, with x, y paired by minimal image.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::LevySymbolParams;
use crate::pde;
use crate::quadform::BandedForm;
use crate::testfn::TestFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// The field f solving the boundary problem with data φ.
    F,
    /// The companion field g built from f.
    G,
    /// ∂ᵥf, used by the limiting quadratic variation.
    DvF,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrelationKernel {
    pub n: usize,
    pub period: usize,
    pub kind: KernelKind,
    /// q_{x,x+d} = f_{x,x+d}ⁿ for 0 ≤ d ≤ D.
    pub form: BandedForm,
}

/// Half-width D = min(N/2 − 3, ⌈12√n·ℓ⌉) with ℓ = √(3λ/a) the slowest v-decay length.
pub fn default_width(n: usize, period: usize, params: &LevySymbolParams) -> usize {
    let sites = n * period;
    let ell = (3.0 * params.lambda / params.a).sqrt();
    let reach = (12.0 * (n as f64).sqrt() * ell).ceil() as usize;
    reach.min(sites / 2 - 3)
}

impl CorrelationKernel {
    /// Samples the torus-periodic field at u = i/(2n), i < 2N, and v = d/√n
    /// by a length-2N inverse DFT of the mode amplitudes at k = j/L.
    pub fn build(
        phi: &TestFunction,
        params: &LevySymbolParams,
        n: usize,
        period: usize,
        kind: KernelKind,
    ) -> Result<Self> {
        params.validate()?;
        let sites = n * period;
        if sites < 8 {
            return Err(Error::InvalidParam(format!("ring of {sites} sites is too small")));
        }
        let width = default_width(n, period, params);
        let len = 2 * sites;
        let l = period as f64;
        let ks: Vec<f64> = (0..len)
            .map(|j| if j < len / 2 { j as f64 / l } else { (j as f64 - len as f64) / l })
            .collect();
        let amp0: Vec<Complex64> = ks
            .iter()
            .map(|&k| {
                let f0 = pde::f_amplitude(k, phi.fourier(k), params);
                match kind {
                    KernelKind::F => f0,
                    KernelKind::G => pde::g_amplitude(k, f0, params),
                    KernelKind::DvF => -f0 * pde::decay_rate(k, params),
                }
            })
            .collect();
        let rates: Vec<Complex64> = ks.iter().map(|&k| pde::decay_rate(k, params)).collect();
        let ifft = FftPlanner::new().plan_fft_inverse(len);
        let mut form = BandedForm::new(sites, width);
        let root_n = (n as f64).sqrt();
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for d in 0..=width {
            let v = d as f64 / root_n;
            for j in 0..len {
                buf[j] = amp0[j] * (-rates[j] * v).exp() / l;
            }
            ifft.process(&mut buf);
            // row i of the inverse DFT is the value at u = i·L/(2N) = i/(2n)
            for x in 0..sites {
                form.bands[d][x] = buf[(2 * x + d) % len].re;
            }
        }
        Ok(CorrelationKernel { n, period, kind, form })
    }

    pub fn sites(&self) -> usize {
        self.form.sites
    }

    pub fn width(&self) -> usize {
        self.form.width()
    }

    /// f_{x,y}ⁿ with the minimal-image rule; zero beyond the band.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        let n = self.sites();
        let fwd = (y + n - x) % n;
        let (lo, d) = if fwd <= n / 2 { (x, fwd) } else { (y, n - fwd) };
        if d < self.form.bands.len() {
            self.form.bands[d][lo]
        } else {
            0.0
        }
    }

    /// g = Qω, the gradient of ωᵀQω up to the factor 2.
    pub fn apply(&self, omega: &[f64], out: &mut [f64]) {
        let n = self.sites();
        for (x, o) in out.iter_mut().enumerate() {
            *o = self.form.bands[0][x] * omega[x];
        }
        for (d, band) in self.form.bands.iter().enumerate().skip(1) {
            for x in 0..n {
                let y = (x + d) % n;
                out[x] += band[x] * omega[y];
                out[y] += band[x] * omega[x];
            }
        }
    }

    /// Σ_{x,y} (f_{x,y}ⁿ)².
    pub fn frobenius_sq(&self) -> f64 {
        self.form.frobenius_sq()
    }
}

/// φ(x/n) on a ring of N = L·n sites, periodized with period L.
pub fn site_weights(phi: &TestFunction, n: usize, period: usize) -> Vec<f64> {
    (0..n * period).map(|x| phi.periodized(x as f64 / n as f64, period as f64)).collect()
}

/// Periodized φ′(x/n).
pub fn site_derivatives(phi: &TestFunction, n: usize, period: usize) -> Vec<f64> {
    let l = period as f64;
    (0..n * period)
        .map(|x| {
            let u = x as f64 / n as f64;
            match phi {
                TestFunction::TrigSum { .. } => phi.derivative(u),
                _ => {
                    let reach = (12.0 * phi.width() / l).ceil() as i64 + 1;
                    let base = ((u - phi.center()) / l).round() as i64;
                    (-reach - base..=reach - base).map(|m| phi.derivative(u + m as f64 * l)).sum()
                }
            }
        })
        .collect()
}
