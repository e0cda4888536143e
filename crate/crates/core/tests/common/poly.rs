//! Sparse multivariate polynomials in ω₀..ω_{n−1} with the chain's vector
//! fields applied symbolically: an oracle that shares nothing with the
//! library's closed-form expansions.

use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    n: usize,
    terms: BTreeMap<Vec<u8>, f64>,
}

impl Poly {
    pub fn zero(n: usize) -> Self {
        Poly { n, terms: BTreeMap::new() }
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0u8; n];
        e[i] = 1;
        Poly { n, terms: BTreeMap::from([(e, 1.0)]) }
    }

    fn add_term(&mut self, e: Vec<u8>, c: f64) {
        let slot = self.terms.entry(e).or_insert(0.0);
        *slot += c;
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly { n: self.n, terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect() }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::zero(self.n);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn diff(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.n);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut d = e.clone();
                d[i] -= 1;
                out.add_term(d, c * e[i] as f64);
            }
        }
        out
    }

    pub fn eval(&self, omega: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(omega).map(|(k, w)| w.powi(*k as i32)).product::<f64>())
            .sum()
    }
}

/// Ring of n sites carrying the operators of the dynamics.
pub struct Ring {
    pub n: usize,
}

impl Ring {
    fn w(&self, i: i64) -> Poly {
        Poly::var(self.n, i.rem_euclid(self.n as i64) as usize)
    }

    fn idx(&self, i: i64) -> usize {
        i.rem_euclid(self.n as i64) as usize
    }

    /// Σ coefficient·∂_site applied to f.
    fn field(&self, parts: &[(Poly, i64)], f: &Poly) -> Poly {
        parts.iter().fold(Poly::zero(self.n), |acc, (c, i)| acc.add(&c.mul(&f.diff(self.idx(*i)))))
    }

    /// (ω_{x+1} − ω_x)∂_{x−1} + (ω_x − ω_{x−1})∂_{x+1} + (ω_{x−1} − ω_{x+1})∂_x
    pub fn x(&self, x: i64, f: &Poly) -> Poly {
        let parts = [
            (self.w(x + 1).sub(&self.w(x)), x - 1),
            (self.w(x).sub(&self.w(x - 1)), x + 1),
            (self.w(x - 1).sub(&self.w(x + 1)), x),
        ];
        self.field(&parts, f)
    }

    /// ω_{x+1}∂_x − ω_x∂_{x+1}
    pub fn y(&self, x: i64, f: &Poly) -> Poly {
        self.field(&[(self.w(x + 1), x), (self.w(x).scale(-1.0), x + 1)], f)
    }

    /// Σ_x (ω_{x+1} − ω_{x−1})∂_x
    pub fn a(&self, f: &Poly) -> Poly {
        let parts: Vec<(Poly, i64)> = (0..self.n as i64).map(|x| (self.w(x + 1).sub(&self.w(x - 1)), x)).collect();
        self.field(&parts, f)
    }

    pub fn s1(&self, f: &Poly) -> Poly {
        (0..self.n as i64).fold(Poly::zero(self.n), |acc, x| acc.add(&self.x(x, &self.x(x, f))))
    }

    pub fn s2(&self, f: &Poly) -> Poly {
        (0..self.n as i64).fold(Poly::zero(self.n), |acc, x| acc.add(&self.y(x, &self.y(x, f))))
    }

    pub fn generator(&self, f: &Poly, lambda: f64, gamma: f64) -> Poly {
        self.a(f).add(&self.s1(f).scale(lambda)).add(&self.s2(f).scale(gamma))
    }

    /// 𝒮ᵢ(fg) − f𝒮ᵢg − g𝒮ᵢf
    pub fn carre(&self, which: u8, f: &Poly, g: &Poly) -> Poly {
        let s = |p: &Poly| if which == 1 { self.s1(p) } else { self.s2(p) };
        s(&f.mul(g)).sub(&f.mul(&s(g))).sub(&g.mul(&s(f)))
    }

    pub fn quadratic(&self, q: impl Fn(usize, usize) -> f64) -> Poly {
        let mut out = Poly::zero(self.n);
        for x in 0..self.n {
            for y in 0..self.n {
                out = out.add(&self.w(x as i64).mul(&self.w(y as i64)).scale(q(x, y)));
            }
        }
        out
    }

    pub fn site(&self, x: usize) -> Poly {
        self.w(x as i64)
    }
}
