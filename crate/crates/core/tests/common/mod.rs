#![allow(dead_code)]

pub mod poly;

use crossover::estimators;
use crossover::kernel::{CorrelationKernel, KernelKind};
use crossover::quadform::{self, BandedForm, QuadForm};
use poly::{Poly, Ring};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest absolute disagreement between each closed-form expansion and the
/// symbolic computation, over `trials` random states and kernels on a ring of
/// `n` sites.
pub fn algebra_residuals(n: usize, trials: usize, seed: u64) -> Vec<(&'static str, f64)> {
    let ring = Ring { n };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = [
        "q1_pair_table",
        "q2_pair_table",
        "car1_differences",
        "car1_sites",
        "car2",
        "k1_k2_forms",
        "generator_on_quadratics",
        "integration_by_parts",
        "generator_linear",
        "carre_du_champ_of_quadratic",
        "x_field_grouped",
        "s2_form",
        "s2_inverse",
    ];
    let mut worst = vec![0.0f64; names.len()];
    let mut bump = |i: usize, a: f64, b: f64| worst[i] = worst[i].max((a - b).abs());

    // pairwise carrés du champ do not depend on the random draw
    let sites: Vec<Poly> = (0..n).map(|x| ring.site(x)).collect();
    let q1: Vec<Vec<Poly>> = (0..n).map(|x| (0..n).map(|y| ring.carre(1, &sites[x], &sites[y])).collect()).collect();
    let q2: Vec<Vec<Poly>> = (0..n).map(|x| (0..n).map(|y| ring.carre(2, &sites[x], &sites[y])).collect()).collect();

    for _ in 0..trials {
        let omega: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let raw: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q = QuadForm::from_fn(n, |x, y| 0.5 * (raw[x * n + y] + raw[y * n + x]));
        let lambda = rng.gen_range(0.1..2.0);
        let gamma = rng.gen_range(0.1..2.0);

        let mut sum1 = 0.0;
        let mut sum2 = 0.0;
        for x in 0..n {
            for y in 0..n {
                let (b1, b2) = (q1[x][y].eval(&omega), q2[x][y].eval(&omega));
                bump(0, quadform::q1_pair(&omega, x as i64, y as i64), b1);
                bump(1, quadform::q2_pair(&omega, x as i64, y as i64), b2);
                sum1 += b1 * q.get(x as i64, y as i64);
                sum2 += b2 * q.get(x as i64, y as i64);
            }
        }
        bump(2, quadform::car1_differences(&omega, &q), sum1);
        bump(3, quadform::car1_sites(&omega, &q), sum1);
        bump(4, quadform::car2(&omega, &q), sum2);
        bump(5, quadform::k1(&q).eval(&omega), sum1);
        bump(5, quadform::k2(&q).eval(&omega), sum2);

        let f = ring.quadratic(|x, y| q.get(x as i64, y as i64));
        let lf = ring.generator(&f, lambda, gamma).eval(&omega);
        bump(6, quadform::generator(&q, lambda, gamma).eval(&omega), lf);
        let ipp = quadform::linear_part(&omega, &q, lambda, gamma)
            + lambda * quadform::car1_sites(&omega, &q)
            + gamma * quadform::car2(&omega, &q);
        bump(7, ipp, lf);
        for x in 0..n {
            let brute = ring.generator(&sites[x], lambda, gamma).eval(&omega);
            bump(8, quadform::generator_linear(&omega, x, lambda, gamma), brute);
        }

        let g: Vec<f64> = (0..n).map(|x| (0..n).map(|y| q.get(x as i64, y as i64) * omega[y]).sum()).collect();
        let cdc = lambda * ring.carre(1, &f, &f).eval(&omega) + gamma * ring.carre(2, &f, &f).eval(&omega);
        bump(9, estimators::carre_du_champ(&omega, &g, lambda, gamma), cdc);

        // banded kernel of half-width 2 < n/2
        let banded = QuadForm::from_fn(n, |x, y| {
            let d = x.abs_diff(y).min(n - x.abs_diff(y));
            if d <= 2 { q.get(x as i64, y as i64) } else { 0.0 }
        });
        let kernel = CorrelationKernel { n, period: 1, kind: KernelKind::F, form: BandedForm::from_dense(&banded, 2) };
        let fb = ring.quadratic(|x, y| banded.get(x as i64, y as i64));
        for z in 0..n {
            bump(10, estimators::x_field_grouped(&omega, &kernel, z), ring.x(z as i64, &fb).eval(&omega));
        }

        bump(11, estimators::s2_form(&q).eval(&omega), ring.s2(&f).eval(&omega));
        bump(12, estimators::s2_inverse_residual(&omega), 0.0);
        for x in 0..n as i64 {
            let w = |i: i64| ring.site(i.rem_euclid(n as i64) as usize);
            let h = w(x - 1).mul(&w(x + 1)).scale(0.25).sub(&w(x).mul(&w(x + 1)).scale(1.0 / 6.0));
            let target = w(x).sub(&w(x - 1)).mul(&w(x + 1));
            bump(12, ring.s2(&h).eval(&omega), target.eval(&omega));
        }
    }
    names.into_iter().zip(worst).collect()
}
