//! Streaming moments, ensemble accumulators and power-law fits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Count, mean and central moments M2..M4, updated and merged with the
/// one-pass pairwise formulas of Pébay.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        let n1 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        let dn = delta / n;
        let dn2 = dn * dn;
        let term1 = delta * dn * n1;
        self.mean += dn;
        self.m4 += term1 * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * self.m2 - 4.0 * dn * self.m3;
        self.m3 += term1 * dn * (n - 2.0) - 3.0 * dn * self.m2;
        self.m2 += term1;
    }

    pub fn merge(&mut self, o: &Moments) {
        if o.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *o;
            return;
        }
        let (na, nb) = (self.count as f64, o.count as f64);
        let n = na + nb;
        let d = o.mean - self.mean;
        let (d2, d3, d4) = (d * d, d * d * d, d * d * d * d);
        let m2 = self.m2 + o.m2 + d2 * na * nb / n;
        let m3 = self.m3 + o.m3 + d3 * na * nb * (na - nb) / (n * n) + 3.0 * d * (na * o.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + o.m4
            + d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * o.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * d * (na * o.m3 - nb * self.m3) / n;
        *self = Moments { count: self.count + o.count, mean: self.mean + d * nb / n, m2, m3, m4 };
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut m = Moments::default();
        xs.iter().for_each(|&x| m.push(x));
        m
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 { f64::NAN } else { self.m2 / (self.count - 1) as f64 }
    }

    pub fn stderr(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }

    /// Standard error of the sample variance, √((μ₄ − σ⁴(n−3)/(n−1))/n).
    pub fn variance_stderr(&self) -> f64 {
        let n = self.count as f64;
        if n < 4.0 {
            return f64::NAN;
        }
        let mu4 = self.m4 / n;
        let s2 = self.variance();
        ((mu4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
    }

    /// E[(X − c)²] around a known center c, with its standard error.
    pub fn second_moment_about(&self, c: f64) -> (f64, f64) {
        let n = self.count as f64;
        let d = self.mean - c;
        let value = self.m2 / n + d * d;
        // Var((X − c)²) = μ₄ + 4dμ₃ + 4d²μ₂ − μ₂²
        let (mu2, mu3, mu4) = (self.m2 / n, self.m3 / n, self.m4 / n);
        let var = mu4 + 4.0 * d * mu3 + 4.0 * d * d * mu2 - mu2 * mu2;
        (value, (var.max(0.0) / n).sqrt())
    }
}

/// Streaming covariance of a pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoMoments {
    pub count: u64,
    pub mean_x: f64,
    pub mean_y: f64,
    cxy: f64,
    m2x: f64,
    m2y: f64,
}

impl CoMoments {
    pub fn push(&mut self, x: f64, y: f64) {
        self.count += 1;
        let n = self.count as f64;
        let dx = x - self.mean_x;
        self.mean_x += dx / n;
        let dy = y - self.mean_y;
        self.mean_y += dy / n;
        self.cxy += dx * (y - self.mean_y);
        self.m2x += dx * (x - self.mean_x);
        self.m2y += dy * (y - self.mean_y);
    }

    pub fn merge(&mut self, o: &CoMoments) {
        if o.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *o;
            return;
        }
        let (na, nb) = (self.count as f64, o.count as f64);
        let n = na + nb;
        let (dx, dy) = (o.mean_x - self.mean_x, o.mean_y - self.mean_y);
        self.cxy += o.cxy + dx * dy * na * nb / n;
        self.m2x += o.m2x + dx * dx * na * nb / n;
        self.m2y += o.m2y + dy * dy * na * nb / n;
        self.mean_x += dx * nb / n;
        self.mean_y += dy * nb / n;
        self.count += o.count;
    }

    pub fn covariance(&self) -> f64 {
        if self.count < 2 { f64::NAN } else { self.cxy / (self.count - 1) as f64 }
    }

    /// Large-sample standard error of the covariance, √((σ²ₓσ²ᵧ + c²)/n).
    pub fn covariance_stderr(&self) -> f64 {
        let n = self.count as f64;
        let (vx, vy) = (self.m2x / (n - 1.0), self.m2y / (n - 1.0));
        let c = self.covariance();
        ((vx * vy + c * c) / n).sqrt()
    }
}

/// Named moment streams, merged across replicas in key order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnsembleAccumulator {
    pub series: BTreeMap<String, Moments>,
    pub pairs: BTreeMap<String, CoMoments>,
}

impl EnsembleAccumulator {
    pub fn push(&mut self, key: impl Into<String>, x: f64) {
        self.series.entry(key.into()).or_default().push(x);
    }

    pub fn push_pair(&mut self, key: impl Into<String>, x: f64, y: f64) {
        self.pairs.entry(key.into()).or_default().push(x, y);
    }

    pub fn merge(&mut self, other: &EnsembleAccumulator) {
        for (k, m) in &other.series {
            self.series.entry(k.clone()).or_default().merge(m);
        }
        for (k, m) in &other.pairs {
            self.pairs.entry(k.clone()).or_default().merge(m);
        }
    }

    pub fn get(&self, key: &str) -> Option<&Moments> {
        self.series.get(key)
    }

    pub fn pair(&self, key: &str) -> Option<&CoMoments> {
        self.pairs.get(key)
    }
}

/// Least-squares fit of log y = intercept + slope·log x.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// 95% interval for the slope from the residual scatter.
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Two-sided 97.5% Student t quantiles for 1..=10 degrees of freedom.
const T975: [f64; 10] = [12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228];

pub fn power_fit(x: &[f64], y: &[f64]) -> Option<PowerFit> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let dof = lx.len().saturating_sub(2);
    let half = if dof == 0 {
        0.0
    } else {
        let t = T975.get(dof - 1).copied().unwrap_or(1.96);
        t * (sse / dof as f64 / sxx).sqrt()
    };
    Some(PowerFit { slope, intercept, r2, ci_low: slope - half, ci_high: slope + half })
}

/// Slope of a least-squares line through the origin, with its standard error.
pub fn slope_through_origin(x: &[f64], y: &[f64], y_err: &[f64]) -> (f64, f64) {
    // weighted by 1/σ² when errors are given
    let w: Vec<f64> = y_err.iter().map(|e| if *e > 0.0 { 1.0 / (e * e) } else { 1.0 }).collect();
    let sxx: f64 = x.iter().zip(&w).map(|(a, w)| w * a * a).sum();
    let sxy: f64 = x.iter().zip(y).zip(&w).map(|((a, b), w)| w * a * b).sum();
    (sxy / sxx, (1.0 / sxx).sqrt())
}
