//! Derivatives at the origin of exponential-quadratic generating functions.
//!
//! Every closed-form observable in this crate has the shape
//!
//! ```text
//!   ∂^{k₁+…+kₙ} / ∂x₁^{k₁}…∂xₙ^{kₙ}  exp(½ xᵀAx + bᵀx + c)  |_{x=0}
//! ```
//!
//! for a handful of formal variables (μ, ν, f, g, s, t). The kernel computes
//! the Taylor coefficients of `F = exp(P)`, `P = ½xᵀAx + bᵀx`, inside the box
//! `0 ≤ eᵢ ≤ kᵢ` and reads off the one that is needed. Coefficients are
//! generated by the Euler-operator recurrence
//!
//! ```text
//!   |e| · F[e] = Σᵢ bᵢ F[e − uᵢ] + 2 Σ_{monomials q x^u of the quadratic part} q F[e − u]
//! ```
//!
//! which follows from `Σ xᵢ∂ᵢ F = (P₁ + 2P₂) F` with `P₁`, `P₂` the degree-1
//! and degree-2 parts of the exponent. Each coefficient depends only on
//! componentwise-smaller indices, so truncating to the box is exact.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default cap on the total derivative order accepted by [`DerivativeKernel`].
pub const DEFAULT_MAX_ORDER: usize = 64;

/// `½xᵀAx + bᵀx + c` over `n` formal variables, with `A` complex symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticExponent {
    n: usize,
    /// Row-major `n × n`.
    a: Vec<C64>,
    b: Vec<C64>,
    c: C64,
}

impl QuadraticExponent {
    /// The zero exponent in `n` variables.
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            a: vec![C64::new(0.0, 0.0); n * n],
            b: vec![C64::new(0.0, 0.0); n],
            c: C64::new(0.0, 0.0),
        }
    }

    /// Builds an exponent from a row-major `A`, which is symmetrized as `(A + Aᵀ)/2`.
    pub fn new(n: usize, a: Vec<C64>, b: Vec<C64>, c: C64) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "quadratic part has {} entries, expected {}",
                a.len(),
                n * n
            )));
        }
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "linear part has {} entries, expected {n}",
                b.len()
            )));
        }
        let mut sym = a.clone();
        for i in 0..n {
            for j in 0..n {
                sym[i * n + j] = (a[i * n + j] + a[j * n + i]) * 0.5;
            }
        }
        for i in 0..n {
            for j in 0..i {
                assert_eq!(sym[i * n + j], sym[j * n + i], "symmetrization failed");
            }
        }
        Ok(Self { n, a: sym, b, c })
    }

    /// Same as [`QuadraticExponent::new`] but takes `A` as rows.
    pub fn from_rows(rows: &[Vec<C64>], b: Vec<C64>, c: C64) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("quadratic part is not square".into()));
        }
        Self::new(n, rows.concat(), b, c)
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    /// Entry `A[i][j]` of the quadratic matrix.
    pub fn quadratic(&self, i: usize, j: usize) -> C64 {
        self.a[i * self.n + j]
    }

    pub fn linear(&self) -> &[C64] {
        &self.b
    }

    pub fn constant(&self) -> C64 {
        self.c
    }

    /// Adds `coef · xᵢ xⱼ` to the exponent (for `i == j` this is `coef · xᵢ²`).
    pub fn add_monomial(&mut self, i: usize, j: usize, coef: C64) -> &mut Self {
        let n = self.n;
        if i == j {
            self.a[i * n + i] += coef * 2.0;
        } else {
            self.a[i * n + j] += coef;
            self.a[j * n + i] += coef;
        }
        self
    }

    /// Adds `coef · xᵢ`.
    pub fn add_linear(&mut self, i: usize, coef: C64) -> &mut Self {
        self.b[i] += coef;
        self
    }

    pub fn add_constant(&mut self, coef: C64) -> &mut Self {
        self.c += coef;
        self
    }

    /// Relabels variables: variable `i` of `self` becomes variable `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch("permutation length".into()));
        }
        let n = self.n;
        let mut out = Self::zero(n);
        for i in 0..n {
            out.b[perm[i]] = self.b[i];
            for j in 0..n {
                out.a[perm[i] * n + perm[j]] = self.a[i * n + j];
            }
        }
        out.c = self.c;
        Ok(out)
    }

    /// Nonzero monomials of `P₁` as `(variable, coefficient)`.
    fn linear_terms(&self) -> Vec<(usize, C64)> {
        self.b
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != C64::new(0.0, 0.0))
            .map(|(i, v)| (i, *v))
            .collect()
    }

    /// Nonzero monomials of `P₂` as `(i, j, coefficient)` with `i ≤ j`.
    fn quadratic_terms(&self) -> Vec<(usize, usize, C64)> {
        let n = self.n;
        let mut out = Vec::new();
        for i in 0..n {
            for j in i..n {
                let coef = if i == j {
                    self.a[i * n + i] * 0.5
                } else {
                    self.a[i * n + j]
                };
                if coef != C64::new(0.0, 0.0) {
                    out.push((i, j, coef));
                }
            }
        }
        out
    }
}

/// Derivative orders, one per formal variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(orders: impl Into<Vec<usize>>) -> Self {
        Self(orders.into())
    }

    pub fn orders(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

impl From<&[usize]> for MultiIndex {
    fn from(v: &[usize]) -> Self {
        Self(v.to_vec())
    }
}

/// All Taylor coefficients of `exp(½xᵀAx + bᵀx + c)` in a box `0 ≤ eᵢ ≤ kᵢ`.
#[derive(Debug, Clone)]
pub struct TaylorBox {
    bound: Vec<usize>,
    strides: Vec<usize>,
    coeffs: Vec<C64>,
    scale: C64,
}

impl TaylorBox {
    pub fn bound(&self) -> &[usize] {
        &self.bound
    }

    fn offset(&self, e: &[usize]) -> Option<usize> {
        if e.len() != self.bound.len() {
            return None;
        }
        let mut off = 0;
        for ((&ei, &bi), &si) in e.iter().zip(&self.bound).zip(&self.strides) {
            if ei > bi {
                return None;
            }
            off += ei * si;
        }
        Some(off)
    }

    /// Coefficient of `x^e` in the series, including the `e^c` factor.
    pub fn coefficient(&self, e: &[usize]) -> Option<C64> {
        self.offset(e).map(|o| self.coeffs[o] * self.scale)
    }

    /// `∂^e F(0)`, i.e. the coefficient times `Π eᵢ!`.
    ///
    /// The factorials are applied one factor at a time so that tiny
    /// coefficients at high order do not overflow on the way.
    pub fn derivative(&self, e: &[usize]) -> Option<C64> {
        let mut v = self.coefficient(e)?;
        for &k in e {
            for j in 2..=k {
                v *= j as f64;
            }
        }
        Some(v)
    }
}

/// Derivative engine with a configurable cap on the total order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DerivativeKernel {
    max_order: usize,
}

impl Default for DerivativeKernel {
    fn default() -> Self {
        Self {
            max_order: DEFAULT_MAX_ORDER,
        }
    }
}

impl DerivativeKernel {
    pub fn with_max_order(max_order: usize) -> Self {
        Self { max_order }
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    fn check(&self, exponent: &QuadraticExponent, idx: &MultiIndex) -> Result<()> {
        if idx.len() != exponent.n_vars() {
            return Err(Error::DimensionMismatch(format!(
                "multi-index has {} orders for an exponent in {} variables",
                idx.len(),
                exponent.n_vars()
            )));
        }
        if idx.total() > self.max_order {
            return Err(Error::Capacity {
                order: idx.total(),
                max: self.max_order,
            });
        }
        Ok(())
    }

    /// Taylor coefficients of `exp(exponent)` for every index inside `bound`.
    pub fn taylor_box(&self, exponent: &QuadraticExponent, bound: &MultiIndex) -> Result<TaylorBox> {
        self.check(exponent, bound)?;
        let bound = bound.orders().to_vec();
        let n = bound.len();
        let mut strides = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * (bound[i + 1] + 1);
        }
        let size: usize = bound.iter().map(|k| k + 1).product();

        let lin: Vec<(usize, usize, C64)> = exponent
            .linear_terms()
            .into_iter()
            .map(|(i, v)| (i, strides[i], v))
            .collect();
        let quad: Vec<(usize, usize, usize, C64)> = exponent
            .quadratic_terms()
            .into_iter()
            .map(|(i, j, v)| (i, j, strides[i] + strides[j], v * 2.0))
            .collect();

        let mut coeffs = vec![C64::new(0.0, 0.0); size];
        coeffs[0] = C64::new(1.0, 0.0);
        let mut e = vec![0usize; n];
        let mut degree = 0usize;
        for off in 1..size {
            // odometer increment, last variable fastest
            let mut k = n - 1;
            loop {
                if e[k] < bound[k] {
                    e[k] += 1;
                    degree += 1;
                    break;
                }
                degree -= e[k];
                e[k] = 0;
                k -= 1;
            }
            let mut acc = C64::new(0.0, 0.0);
            for &(i, stride, v) in &lin {
                if e[i] >= 1 {
                    acc += v * coeffs[off - stride];
                }
            }
            for &(i, j, stride, v) in &quad {
                let ok = if i == j { e[i] >= 2 } else { e[i] >= 1 && e[j] >= 1 };
                if ok {
                    acc += v * coeffs[off - stride];
                }
            }
            coeffs[off] = acc / degree as f64;
        }

        Ok(TaylorBox {
            bound,
            strides,
            coeffs,
            scale: exponent.constant().exp(),
        })
    }

    /// `∂^idx exp(exponent)` at the origin.
    pub fn extract_derivative(&self, exponent: &QuadraticExponent, idx: &MultiIndex) -> Result<C64> {
        let tb = self.taylor_box(exponent, idx)?;
        Ok(tb
            .derivative(idx.orders())
            .expect("index lies on the corner of its own box"))
    }

    /// Same as [`extract_derivative`](Self::extract_derivative) for a member of a
    /// parameterized exponent family.
    pub fn derivative_in_parameters(
        &self,
        family: &ExponentFamily,
        idx: &MultiIndex,
        params: &[C64],
    ) -> Result<C64> {
        let exponent = family.instantiate(params)?;
        self.extract_derivative(&exponent, idx)
    }
}

/// `∂^idx exp(exponent)` at the origin with the default order cap.
pub fn extract_derivative(exponent: &QuadraticExponent, idx: &MultiIndex) -> Result<C64> {
    DerivativeKernel::default().extract_derivative(exponent, idx)
}

/// An exponent whose linear part is affine and whose constant is quadratic in
/// external parameters `p`:
///
/// `b(p) = b₀ + L p`, `c(p) = c₀ + dᵀp + (monomials pᵢpⱼ)`.
///
/// This is the structure of the Wigner-function generating function, where
/// `p = (β, β*)` enters the coefficients of μ and ν and the Gaussian envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFamily {
    base: QuadraticExponent,
    n_params: usize,
    /// Row-major `n_vars × n_params`.
    coupling: Vec<C64>,
    constant_linear: Vec<C64>,
    /// Monomial coefficients `(i, j, q)` of `q pᵢ pⱼ`.
    constant_quadratic: Vec<(usize, usize, C64)>,
}

impl ExponentFamily {
    pub fn new(base: QuadraticExponent, n_params: usize) -> Self {
        let n = base.n_vars();
        Self {
            base,
            n_params,
            coupling: vec![C64::new(0.0, 0.0); n * n_params],
            constant_linear: vec![C64::new(0.0, 0.0); n_params],
            constant_quadratic: Vec::new(),
        }
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    /// Adds `coef · x_var · p_param` to the exponent.
    pub fn couple(&mut self, var: usize, param: usize, coef: C64) -> &mut Self {
        self.coupling[var * self.n_params + param] += coef;
        self
    }

    /// Adds `coef · p_param` to the constant.
    pub fn add_constant_linear(&mut self, param: usize, coef: C64) -> &mut Self {
        self.constant_linear[param] += coef;
        self
    }

    /// Adds `coef · pᵢ pⱼ` to the constant.
    pub fn add_constant_quadratic(&mut self, i: usize, j: usize, coef: C64) -> &mut Self {
        self.constant_quadratic.push((i, j, coef));
        self
    }

    pub fn instantiate(&self, params: &[C64]) -> Result<QuadraticExponent> {
        if params.len() != self.n_params {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters given, family expects {}",
                params.len(),
                self.n_params
            )));
        }
        let mut out = self.base.clone();
        let n = out.n_vars();
        for var in 0..n {
            let shift: C64 = (0..self.n_params)
                .map(|p| self.coupling[var * self.n_params + p] * params[p])
                .sum();
            out.b[var] += shift;
        }
        let lin: C64 = self
            .constant_linear
            .iter()
            .zip(params)
            .map(|(d, p)| d * p)
            .sum();
        let quad: C64 = self
            .constant_quadratic
            .iter()
            .map(|&(i, j, q)| q * params[i] * params[j])
            .sum();
        out.c += lin + quad;
        Ok(out)
    }
}
