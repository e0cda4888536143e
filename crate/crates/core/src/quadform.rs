//! Quadratic observables ωᵀQω on the ring and the exact action of the
//! generator 𝒜 + λ𝒮₁ + γ𝒮₂ on them.
//!
//! Because 𝒜, 𝒳_z and 𝒴_z are linear vector fields, the generator maps
//! quadratic forms to quadratic forms with no constant term:
//! 𝔏(Q) = (−A + λS − 4γ)Q + λK₁(Q) + γK₂(Q), where ωᵀK_i(Q)ω = Σ 𝒬_i(ω_x, ω_y) q_{x,y}.

use serde::{Deserialize, Serialize};

/// Symmetric N×N matrix indexed modulo N.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadForm {
    pub sites: usize,
    data: Vec<f64>,
}

#[inline]
fn wrap(i: i64, n: usize) -> usize {
    i.rem_euclid(n as i64) as usize
}

/// 𝒳_z acts on (ω_{z−1}, ω_z, ω_{z+1}) by this matrix.
pub const X_FIELD: [[f64; 3]; 3] = [[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]];
/// 𝒴_z acts on (ω_z, ω_{z+1}) by this matrix.
pub const Y_FIELD: [[f64; 2]; 2] = [[0.0, 1.0], [-1.0, 0.0]];

impl QuadForm {
    pub fn zeros(sites: usize) -> Self {
        QuadForm { sites, data: vec![0.0; sites * sites] }
    }

    /// Symmetrizes f: entry (x, y) is (f(x, y) + f(y, x))/2.
    pub fn from_fn(sites: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut q = QuadForm::zeros(sites);
        for x in 0..sites {
            for y in 0..sites {
                q.data[x * sites + y] = 0.5 * (f(x, y) + f(y, x));
            }
        }
        q
    }

    pub fn diagonal(weights: &[f64]) -> Self {
        let mut q = QuadForm::zeros(weights.len());
        for (x, w) in weights.iter().enumerate() {
            q.data[x * weights.len() + x] = *w;
        }
        q
    }

    #[inline]
    pub fn get(&self, x: i64, y: i64) -> f64 {
        self.data[wrap(x, self.sites) * self.sites + wrap(y, self.sites)]
    }

    fn add_sym(&mut self, x: i64, y: i64, v: f64) {
        let (x, y) = (wrap(x, self.sites), wrap(y, self.sites));
        if x == y {
            self.data[x * self.sites + x] += v;
        } else {
            self.data[x * self.sites + y] += 0.5 * v;
            self.data[y * self.sites + x] += 0.5 * v;
        }
    }

    /// ωᵀQω.
    pub fn eval(&self, omega: &[f64]) -> f64 {
        assert_eq!(omega.len(), self.sites);
        let mut acc = crate::util::Sum::default();
        for (x, wx) in omega.iter().enumerate() {
            let row = &self.data[x * self.sites..(x + 1) * self.sites];
            acc.add(wx * row.iter().zip(omega).map(|(q, w)| q * w).sum::<f64>());
        }
        acc.value()
    }

    pub fn trace(&self) -> f64 {
        (0..self.sites).map(|x| self.data[x * self.sites + x]).sum()
    }

    pub fn map(&self, f: impl Fn(i64, i64) -> f64) -> Self {
        let n = self.sites;
        let mut q = QuadForm::zeros(n);
        for x in 0..n {
            for y in 0..n {
                q.data[x * n + y] = f(x as i64, y as i64);
            }
        }
        q
    }

    pub fn scale(&self, s: f64) -> Self {
        QuadForm { sites: self.sites, data: self.data.iter().map(|v| s * v).collect() }
    }

    pub fn plus(&self, other: &QuadForm) -> Self {
        QuadForm { sites: self.sites, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    /// Largest |x − y| (minimal image) with a nonzero entry.
    pub fn bandwidth(&self) -> usize {
        let n = self.sites;
        let mut d = 0;
        for x in 0..n {
            for y in 0..n {
                if self.data[x * n + y] != 0.0 {
                    let g = x.abs_diff(y);
                    d = d.max(g.min(n - g));
                }
            }
        }
        d
    }

    pub fn max_abs_diff(&self, other: &QuadForm) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// (Aq)_{x,y} = q_{x+1,y} − q_{x−1,y} + q_{x,y+1} − q_{x,y−1}.
pub fn a_op(q: &QuadForm) -> QuadForm {
    q.map(|x, y| q.get(x + 1, y) - q.get(x - 1, y) + q.get(x, y + 1) - q.get(x, y - 1))
}

fn delta6(q: &QuadForm, x: i64, y: i64, on_x: bool) -> f64 {
    let at = |s: i64| if on_x { q.get(x + s, y) } else { q.get(x, y + s) };
    at(-2) + 2.0 * at(-1) - 6.0 * at(0) + 2.0 * at(1) + at(2)
}

/// (Sq)_{x,y} = 6Δ̃ in x plus 6Δ̃ in y.
pub fn s_op(q: &QuadForm) -> QuadForm {
    q.map(|x, y| delta6(q, x, y, true) + delta6(q, x, y, false))
}

/// K₁(Q) = 2Σ_z B̃ᵀ Q_T B̃ on the triple T = (z−1, z, z+1).
pub fn k1(q: &QuadForm) -> QuadForm {
    let mut out = QuadForm::zeros(q.sites);
    for z in 0..q.sites as i64 {
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for (a, row_a) in X_FIELD.iter().enumerate() {
                    for (b, row_b) in X_FIELD.iter().enumerate() {
                        s += row_a[i] * q.get(z - 1 + a as i64, z - 1 + b as i64) * row_b[j];
                    }
                }
                out.add_sym(z - 1 + i as i64, z - 1 + j as i64, 2.0 * s);
            }
        }
    }
    out
}

/// K₂(Q) = 2Σ_z C̃ᵀ Q_P C̃ on the pair P = (z, z+1).
pub fn k2(q: &QuadForm) -> QuadForm {
    let mut out = QuadForm::zeros(q.sites);
    for z in 0..q.sites as i64 {
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for (a, row_a) in Y_FIELD.iter().enumerate() {
                    for (b, row_b) in Y_FIELD.iter().enumerate() {
                        s += row_a[i] * q.get(z + a as i64, z + b as i64) * row_b[j];
                    }
                }
                out.add_sym(z + i as i64, z + j as i64, 2.0 * s);
            }
        }
    }
    out
}

/// 𝔏(Q) for the unaccelerated generator 𝒜 + λ𝒮₁ + γ𝒮₂.
pub fn generator(q: &QuadForm, lambda: f64, gamma: f64) -> QuadForm {
    let (a, s, c1, c2) = (a_op(q), s_op(q), k1(q), k2(q));
    q.map(|x, y| {
        -a.get(x, y) + lambda * s.get(x, y) - 4.0 * gamma * q.get(x, y)
            + lambda * c1.get(x, y)
            + gamma * c2.get(x, y)
    })
}

/// 𝓛ω_x = 2∇̃ω_x + 6λΔ̃ω_x − 2γω_x.
pub fn generator_linear(omega: &[f64], x: usize, lambda: f64, gamma: f64) -> f64 {
    let n = omega.len() as i64;
    let w = |s: i64| omega[wrap(x as i64 + s, n as usize)];
    (w(1) - w(-1)) + lambda * (w(-2) + 2.0 * w(-1) - 6.0 * w(0) + 2.0 * w(1) + w(2)) - 2.0 * gamma * w(0)
}

/// 𝒬₁(ω_x, ω_y) from the case table.
pub fn q1_pair(omega: &[f64], x: i64, y: i64) -> f64 {
    let n = omega.len();
    let w = |i: i64| omega[wrap(i, n)];
    let sq = |a: i64, b: i64| (w(a) - w(b)).powi(2);
    let gap = (y - x).rem_euclid(n as i64);
    let gap = gap.min(n as i64 - gap);
    let lo = if (x + gap).rem_euclid(n as i64) == y.rem_euclid(n as i64) { x } else { y };
    match gap {
        0 => 2.0 * sq(x + 2, x + 1) + 2.0 * sq(x + 1, x - 1) + 2.0 * sq(x - 1, x - 2),
        1 => {
            let x = lo;
            2.0 * sq(x + 1, x) - sq(x + 2, x + 1) - sq(x + 2, x) - sq(x + 1, x - 1) - sq(x, x - 1)
        }
        2 => {
            let x = lo + 1;
            sq(x + 1, x - 1) - sq(x + 1, x) - sq(x, x - 1)
        }
        _ => 0.0,
    }
}

/// 𝒬₂(ω_x, ω_y) from the case table.
pub fn q2_pair(omega: &[f64], x: i64, y: i64) -> f64 {
    let n = omega.len();
    let w = |i: i64| omega[wrap(i, n)];
    let gap = (y - x).rem_euclid(n as i64);
    let gap = gap.min(n as i64 - gap);
    match gap {
        0 => 2.0 * w(x - 1).powi(2) + 2.0 * w(x + 1).powi(2),
        1 => -2.0 * w(x) * w(y),
        _ => 0.0,
    }
}

/// Σ_{x,y} 𝒬₁(ω_x, ω_y) q_{x,y}, written with squared differences.
pub fn car1_differences(omega: &[f64], q: &QuadForm) -> f64 {
    let n = omega.len() as i64;
    let w = |i: i64| omega[wrap(i, n as usize)];
    let mut acc = crate::util::Sum::default();
    for x in 0..n {
        let d2 = (w(x + 1) - w(x - 1)).powi(2);
        let d1 = (w(x + 1) - w(x)).powi(2);
        acc.add(2.0 * d2 * (q.get(x, x) + q.get(x - 1, x + 1) - q.get(x - 1, x) - q.get(x, x + 1)));
        acc.add(2.0 * d1 * (q.get(x - 1, x - 1) + 2.0 * q.get(x, x + 1) + q.get(x + 2, x + 2)));
        acc.add(
            -2.0 * d1 * (q.get(x - 1, x) + q.get(x - 1, x + 1) + q.get(x, x + 2) + q.get(x + 1, x + 2)),
        );
    }
    acc.value()
}

/// Same sum regrouped by ω_x², ω_xω_{x+1} and ω_{x−1}ω_{x+1}.
pub fn car1_sites(omega: &[f64], q: &QuadForm) -> f64 {
    let n = omega.len() as i64;
    let w = |i: i64| omega[wrap(i, n as usize)];
    let mut acc = crate::util::Sum::default();
    for x in 0..n {
        let sq = w(x) * w(x);
        acc.add(
            2.0 * sq
                * (q.get(x - 2, x - 2) + 2.0 * q.get(x - 1, x - 1) + 2.0 * q.get(x + 1, x + 1) + q.get(x + 2, x + 2)),
        );
        acc.add(-4.0 * sq * (q.get(x - 1, x + 1) + q.get(x + 1, x + 2) + q.get(x - 2, x - 1)));
        acc.add(
            -4.0 * w(x)
                * w(x + 1)
                * (q.get(x - 1, x - 1) + 2.0 * q.get(x, x + 1) + q.get(x + 2, x + 2)
                    - q.get(x - 1, x)
                    - q.get(x - 1, x + 1)
                    - q.get(x, x + 2)
                    - q.get(x + 1, x + 2)),
        );
        acc.add(
            -4.0 * w(x + 1) * w(x - 1) * (q.get(x, x) + q.get(x - 1, x + 1) - q.get(x - 1, x) - q.get(x, x + 1)),
        );
    }
    acc.value()
}

/// Σ_{x,y} 𝒬₂(ω_x, ω_y) q_{x,y}.
pub fn car2(omega: &[f64], q: &QuadForm) -> f64 {
    let n = omega.len() as i64;
    let w = |i: i64| omega[wrap(i, n as usize)];
    crate::util::sum((0..n).map(|x| {
        2.0 * (w(x - 1).powi(2) + w(x + 1).powi(2)) * q.get(x, x) - 4.0 * w(x) * w(x + 1) * q.get(x, x + 1)
    }))
}

/// Σ_{x,y} ω_xω_y ((−A + λS − 4γ)q)_{x,y}: the part of 𝓛Σωωq built from 𝓛ω.
pub fn linear_part(omega: &[f64], q: &QuadForm, lambda: f64, gamma: f64) -> f64 {
    let (a, s) = (a_op(q), s_op(q));
    q.map(|x, y| -a.get(x, y) + lambda * s.get(x, y) - 4.0 * gamma * q.get(x, y)).eval(omega)
}

/// Symmetric form stored by diagonal offsets 0..=D with D < N/2:
/// bands[d][x] = Q_{x, x+d}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandedForm {
    pub sites: usize,
    pub bands: Vec<Vec<f64>>,
}

impl BandedForm {
    pub fn new(sites: usize, width: usize) -> Self {
        assert!(2 * width < sites, "band {width} must stay below half the ring {sites}");
        BandedForm { sites, bands: vec![vec![0.0; sites]; width + 1] }
    }

    pub fn width(&self) -> usize {
        self.bands.len() - 1
    }

    pub fn from_dense(q: &QuadForm, width: usize) -> Self {
        let mut b = BandedForm::new(q.sites, width);
        for (d, band) in b.bands.iter_mut().enumerate() {
            for (x, v) in band.iter_mut().enumerate() {
                *v = q.get(x as i64, (x + d) as i64);
            }
        }
        b
    }

    pub fn to_dense(&self) -> QuadForm {
        let n = self.sites;
        QuadForm::from_fn(n, |x, y| {
            let d = (y + n - x) % n;
            if d < self.bands.len() {
                self.bands[d][x]
            } else if n - d < self.bands.len() {
                self.bands[n - d][y]
            } else {
                0.0
            }
        })
    }

    /// ωᵀQω in O(N·D).
    pub fn eval(&self, omega: &[f64]) -> f64 {
        let n = self.sites;
        let mut acc = crate::util::Sum::default();
        for (d, band) in self.bands.iter().enumerate() {
            let factor = if d == 0 { 1.0 } else { 2.0 };
            let s: f64 = (0..n).map(|x| band[x] * omega[x] * omega[(x + d) % n]).sum();
            acc.add(factor * s);
        }
        acc.value()
    }

    pub fn trace(&self) -> f64 {
        self.bands[0].iter().sum()
    }

    /// Σ_{x,y} Q_{x,y}², counting both orientations off the diagonal.
    pub fn frobenius_sq(&self) -> f64 {
        self.bands
            .iter()
            .enumerate()
            .map(|(d, b)| (if d == 0 { 1.0 } else { 2.0 }) * b.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }

    /// 𝔏(Q) as a band two wider.
    pub fn generator(&self, lambda: f64, gamma: f64) -> BandedForm {
        BandedForm::from_dense(&generator(&self.to_dense(), lambda, gamma), self.width() + 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn carre_du_champ_forms_agree_with_the_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [8usize, 11] {
            let omega = random_state(n, &mut rng);
            let raw: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let q = QuadForm::from_fn(n, |x, y| raw[x * n + y]);
            let mut table1 = 0.0;
            let mut table2 = 0.0;
            for x in 0..n as i64 {
                for y in 0..n as i64 {
                    table1 += q1_pair(&omega, x, y) * q.get(x, y);
                    table2 += q2_pair(&omega, x, y) * q.get(x, y);
                }
            }
            assert!((car1_differences(&omega, &q) - table1).abs() < 1e-12);
            assert!((car1_sites(&omega, &q) - table1).abs() < 1e-12);
            assert!((car2(&omega, &q) - table2).abs() < 1e-12);
            assert!((k1(&q).eval(&omega) - table1).abs() < 1e-12);
            assert!((k2(&q).eval(&omega) - table2).abs() < 1e-12);
        }
    }

    #[test]
    fn banded_round_trip_and_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 16;
        let q = QuadForm::from_fn(n, |x, y| {
            let d = x.abs_diff(y).min(n - x.abs_diff(y));
            if d <= 3 { ((x + 2 * y) as f64).sin() + ((y + 2 * x) as f64).sin() } else { 0.0 }
        });
        let b = BandedForm::from_dense(&q, 3);
        assert!(b.to_dense().max_abs_diff(&q) < 1e-15);
        let omega = random_state(n, &mut rng);
        assert!((b.eval(&omega) - q.eval(&omega)).abs() < 1e-12);
        let g = b.generator(0.7, 0.2);
        assert!(g.to_dense().max_abs_diff(&generator(&q, 0.7, 0.2)) < 1e-14);
        assert_eq!(generator(&q, 0.7, 0.2).bandwidth(), 5);
    }

    #[test]
    fn generator_preserves_energy_and_volume_squared_under_a() {
        // 𝓛 Σω² = 0 for every λ, γ: energy is conserved by each part
        let n = 12;
        let id = QuadForm::diagonal(&vec![1.0; n]);
        assert!(generator(&id, 1.3, 0.4).max_abs_diff(&QuadForm::zeros(n)) < 1e-14);
        // (Σω)² is conserved by 𝒜 and 𝒮₁ only
        let ones = QuadForm::from_fn(n, |_, _| 1.0);
        assert!(generator(&ones, 1.3, 0.0).max_abs_diff(&QuadForm::zeros(n)) < 1e-13);
        assert!(generator(&ones, 0.0, 1.0).max_abs_diff(&QuadForm::zeros(n)) > 1.0);
    }
}
