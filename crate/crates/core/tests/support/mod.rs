//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use mssvs::genfunc::{QuadraticExponent, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Polynomial in `n` variables, keyed by exponent vector.
#[derive(Debug, Clone, Default)]
pub struct Poly {
    terms: BTreeMap<Vec<u32>, C64>,
}

impl Poly {
    pub fn one(n: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![0; n], C64::new(1.0, 0.0));
        Self { terms }
    }

    fn add(&mut self, key: Vec<u32>, c: C64) {
        *self.terms.entry(key).or_insert(C64::new(0.0, 0.0)) += c;
    }

    fn partial(&self, i: usize) -> Self {
        let mut out = Self::default();
        for (k, c) in &self.terms {
            if k[i] > 0 {
                let mut k2 = k.clone();
                k2[i] -= 1;
                out.add(k2, c * k[i] as f64);
            }
        }
        out
    }

    fn times_linear(&self, coeffs: &[C64], constant: C64) -> Self {
        let mut out = Self::default();
        for (k, c) in &self.terms {
            out.add(k.clone(), c * constant);
            for (j, a) in coeffs.iter().enumerate() {
                if *a != C64::new(0.0, 0.0) {
                    let mut k2 = k.clone();
                    k2[j] += 1;
                    out.add(k2, c * a);
                }
            }
        }
        out
    }

    fn plus(mut self, other: Self) -> Self {
        for (k, c) in other.terms {
            self.add(k, c);
        }
        self
    }

    pub fn at_origin(&self) -> C64 {
        self.terms
            .iter()
            .find(|(k, _)| k.iter().all(|e| *e == 0))
            .map(|(_, c)| *c)
            .unwrap_or(C64::new(0.0, 0.0))
    }
}

/// `∂^orders exp(½xᵀAx + bᵀx + c)` at the origin by repeated symbolic
/// differentiation of the prefactor in `∂(Q e^E) = (∂Q + Q ∂E) e^E`.
pub fn symbolic_derivative(a: &[Vec<C64>], b: &[C64], c: C64, orders: &[usize]) -> C64 {
    let n = b.len();
    let mut q = Poly::one(n);
    for (i, &k) in orders.iter().enumerate() {
        for _ in 0..k {
            // ∂ᵢE = Σⱼ Aᵢⱼ xⱼ + bᵢ
            q = q.partial(i).plus(q.times_linear(&a[i], b[i]));
        }
    }
    q.at_origin() * c.exp()
}

/// Random symmetric exponent with entries of modulus below `scale`.
pub fn random_exponent(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> (Vec<Vec<C64>>, Vec<C64>, C64) {
    let draw = |rng: &mut ChaCha8Rng| C64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale));
    let mut a = vec![vec![C64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in i..n {
            let v = draw(rng);
            a[i][j] = v;
            a[j][i] = v;
        }
    }
    let b = (0..n).map(|_| draw(rng)).collect();
    let c = draw(rng);
    (a, b, c)
}

pub fn to_exponent(a: &[Vec<C64>], b: &[C64], c: C64) -> QuadraticExponent {
    QuadraticExponent::from_rows(a, b.to_vec(), c).expect("well-formed exponent")
}
