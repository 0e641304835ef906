//! Closed-form properties of the heralded state.
//!
//! All quantities are derivatives at the origin of exponential-quadratic
//! generating functions in the bookkeeping variables
//!
//! | variable | role                                   |
//! |----------|----------------------------------------|
//! | μ, ν     | project mode `b` onto `⟨m|` and `|m⟩`   |
//! | f, g     | generate `a†^k` and `a^l`               |
//! | s, t     | project mode `a` onto `⟨n|` and `|n⟩`   |
//!
//! and are evaluated with [`crate::genfunc`]. Normalizations are expressed
//! through Taylor coefficients rather than raw derivatives so that the large
//! factorials of high photon numbers cancel before they are formed.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::circuit::{derived_coefficients, CircuitParams, DerivedCoefficients};
use crate::error::{Error, Result};
use crate::genfunc::{DerivativeKernel, ExponentFamily, MultiIndex, QuadraticExponent, DEFAULT_MAX_ORDER};

const MU: usize = 0;
const NU: usize = 1;
const F: usize = 2;
const G: usize = 3;
const S: usize = 2;
const T: usize = 3;

/// Largest photon number examined by the adaptive photon-number distribution.
pub const PND_MAX_PHOTONS: usize = 128;
/// Target cumulative probability of the adaptive photon-number distribution.
pub const PND_TARGET: f64 = 1.0 - 1e-10;

/// Rounding slack on probabilities before a value counts as out of range.
const PROB_SLACK: f64 = 1e-12;
const IMAG_SLACK: f64 = 1e-10;

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn kernel_for(order: usize) -> DerivativeKernel {
    DerivativeKernel::with_max_order(order.max(DEFAULT_MAX_ORDER))
}

fn factorial_times(mut v: f64, k: usize) -> f64 {
    for j in 2..=k {
        v *= j as f64;
    }
    v
}

/// The (μ, ν) part shared by every heralded generating function.
fn herald_exponent(dc: &DerivedCoefficients, n_vars: usize) -> QuadraticExponent {
    let mut e = QuadraticExponent::zero(n_vars);
    let sq = dc.eps2 / dc.eps4;
    e.add_monomial(MU, NU, re(1.0 - dc.eps1 / dc.eps4))
        .add_monomial(MU, MU, re(sq))
        .add_monomial(NU, NU, re(sq));
    e
}

/// Quadrature variances `Δ²X`, `Δ²P` with `X = (a + a†)/√2`, `P = (a − a†)/(√2 i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureVariances {
    pub var_x: f64,
    pub var_p: f64,
}

impl QuadratureVariances {
    fn from_moments(n: f64, ad: Complex64, ad2: Complex64) -> Self {
        let base = n - ad.norm_sqr() + 0.5;
        let re2 = (ad2 - ad * ad).re;
        Self {
            var_x: base + re2,
            var_p: base - re2,
        }
    }

    pub fn uncertainty_product(&self) -> f64 {
        self.var_x * self.var_p
    }
}

/// One Wigner sample at `β = (x + iy)/√2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerPoint {
    pub x: f64,
    pub y: f64,
    pub w: f64,
}

/// A truncated photon-number distribution together with the probability it misses.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonNumberDistribution {
    pub probabilities: Vec<f64>,
    /// `1 − Σ P(n)` over the returned entries.
    pub tail: f64,
}

impl PhotonNumberDistribution {
    pub fn converged(&self) -> bool {
        self.tail <= 1.0 - PND_TARGET
    }

    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }
}

/// Outcome of the squeezing-threshold search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SqueezingThreshold {
    /// `Δ²P` crosses ½ at this squeezing parameter.
    Crossing(f64),
    /// `Δ²P < ½` everywhere on the scanned range.
    AlwaysSqueezed,
    /// `Δ²P ≥ ½` everywhere on the scanned range.
    NeverSqueezed,
}

impl SqueezingThreshold {
    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Crossing(r) => Some(*r),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Crossing(_) => "crossing",
            Self::AlwaysSqueezed => "always-squeezed",
            Self::NeverSqueezed => "never-squeezed",
        }
    }
}

/// The heralded output for one parameter point, with the normalization cached.
#[derive(Debug, Clone)]
pub struct ConditionalState {
    params: CircuitParams,
    coeffs: DerivedCoefficients,
    /// Taylor coefficient of `μ^m ν^m` in the success-probability generating function.
    herald_coeff: f64,
    p_d: f64,
}

impl ConditionalState {
    pub fn new(params: &CircuitParams) -> Result<Self> {
        let coeffs = derived_coefficients(params)?;
        let m = params.m as usize;
        let e = herald_exponent(&coeffs, 2);
        let tb = kernel_for(2 * m).taylor_box(&e, &MultiIndex::new([m, m]))?;
        let c = tb.coefficient(&[m, m]).expect("corner");
        if c.im.abs() > PROB_SLACK * c.re.abs().max(1.0) {
            return Err(Error::NumericalConsistency(format!(
                "success probability has imaginary part {}",
                c.im
            )));
        }
        let raw = factorial_times(c.re, m) / coeffs.eps4.sqrt();
        let p_d = if (-PROB_SLACK..0.0).contains(&raw) {
            0.0
        } else if raw > 1.0 && raw <= 1.0 + PROB_SLACK {
            1.0
        } else if (0.0..=1.0).contains(&raw) {
            raw
        } else {
            return Err(Error::NumericalConsistency(format!(
                "success probability {raw} outside [0, 1]"
            )));
        };
        Ok(Self {
            params: *params,
            coeffs,
            herald_coeff: c.re,
            p_d,
        })
    }

    pub fn params(&self) -> &CircuitParams {
        &self.params
    }

    pub fn coefficients(&self) -> &DerivedCoefficients {
        &self.coeffs
    }

    pub fn success_probability(&self) -> f64 {
        self.p_d
    }

    /// Whether the heralding event has nonzero probability.
    pub fn is_defined(&self) -> bool {
        self.p_d > 0.0 && self.herald_coeff != 0.0
    }

    fn require_defined(&self) -> Result<()> {
        if self.is_defined() {
            Ok(())
        } else {
            Err(Error::UndefinedState { p_d: self.p_d })
        }
    }

    /// Generating function of normally ordered moments in (μ, ν, f, g).
    fn moment_exponent(&self) -> QuadraticExponent {
        let dc = &self.coeffs;
        let mut e = herald_exponent(dc, 4);
        let x = dc.eps3 * dc.eps7 / dc.eps4;
        let y = dc.eps3 * dc.eps8 / dc.eps4;
        let ff = 0.5 * dc.lambda * dc.tau1 + dc.eps6 / dc.eps4;
        e.add_monomial(F, G, re(dc.lambda * dc.lambda * dc.tau1 + dc.eps5 / dc.eps4))
            .add_monomial(F, F, re(ff))
            .add_monomial(G, G, re(ff))
            .add_monomial(MU, F, re(x))
            .add_monomial(G, NU, re(x))
            .add_monomial(NU, F, re(y))
            .add_monomial(G, MU, re(y));
        e
    }

    /// `⟨a†^k a^l⟩`.
    pub fn moment(&self, k: usize, l: usize) -> Result<Complex64> {
        self.require_defined()?;
        let m = self.params.m as usize;
        let idx = MultiIndex::new([m, m, k, l]);
        let tb = kernel_for(idx.total()).taylor_box(&self.moment_exponent(), &idx)?;
        let c = tb.coefficient(idx.orders()).expect("corner");
        Ok(c * factorial_times(factorial_times(1.0, k), l) / self.herald_coeff)
    }

    pub fn variances(&self) -> Result<QuadratureVariances> {
        let n = self.moment(1, 1)?;
        let ad = self.moment(1, 0)?;
        let ad2 = self.moment(2, 0)?;
        Ok(QuadratureVariances::from_moments(n.re, ad, ad2))
    }

    /// Generating function of the photon-number distribution in (μ, ν, s, t).
    fn pnd_exponent(&self) -> QuadraticExponent {
        let dc = &self.coeffs;
        let (k1, k2, k3, k4) = (dc.kappa1, dc.kappa2, dc.kappa3, dc.kappa4);
        let (k5, k6, k7, k8) = (dc.kappa5, dc.kappa6, dc.kappa7, dc.kappa8);
        let r = k3 * k3 / k4;
        let mut e = QuadraticExponent::zero(4);
        let mm = dc.eps2 / dc.eps4 - r * (k1 * k6 + k2 * k5);
        let ss = k2 / k4;
        let a7 = k3 / k4 * k7;
        let a8 = k3 / k4 * k8;
        e.add_monomial(MU, NU, re(1.0 - dc.eps1 / dc.eps4 + r * (k1 * k5 + 4.0 * k2 * k6)))
            .add_monomial(MU, MU, re(mm))
            .add_monomial(NU, NU, re(mm))
            .add_monomial(S, T, re(1.0 - k1 / k4))
            .add_monomial(S, S, re(ss))
            .add_monomial(T, T, re(ss))
            .add_monomial(MU, T, re(a7))
            .add_monomial(S, NU, re(a7))
            .add_monomial(MU, S, re(a8))
            .add_monomial(NU, T, re(a8));
        e
    }

    /// `P(n)` for `n = 0..=n_max`, computed in one pass.
    pub fn pnd_upto(&self, n_max: usize) -> Result<Vec<f64>> {
        self.require_defined()?;
        let m = self.params.m as usize;
        let bound = MultiIndex::new([m, m, n_max, n_max]);
        let tb = kernel_for(bound.total()).taylor_box(&self.pnd_exponent(), &bound)?;
        let norm = self.herald_coeff * self.coeffs.kappa4.sqrt();
        (0..=n_max)
            .map(|n| {
                let c = tb.coefficient(&[m, m, n, n]).expect("inside box");
                let p = factorial_times(c.re, n) / norm;
                let im = factorial_times(c.im, n) / norm;
                if im.abs() > IMAG_SLACK {
                    return Err(Error::NumericalConsistency(format!(
                        "P({n}) has imaginary part {im}"
                    )));
                }
                if !(-IMAG_SLACK..=1.0 + IMAG_SLACK).contains(&p) {
                    return Err(Error::NumericalConsistency(format!("P({n}) = {p}")));
                }
                Ok(p.clamp(0.0, 1.0))
            })
            .collect()
    }

    pub fn pnd(&self, n: usize) -> Result<f64> {
        Ok(self.pnd_upto(n)?[n])
    }

    /// Photon-number distribution truncated once the cumulative probability
    /// reaches [`PND_TARGET`], or at [`PND_MAX_PHOTONS`].
    pub fn pnd_adaptive(&self) -> Result<PhotonNumberDistribution> {
        let mut n_max = 16;
        loop {
            let probs = self.pnd_upto(n_max)?;
            let mut acc = 0.0;
            for (n, p) in probs.iter().enumerate() {
                acc += p;
                if acc >= PND_TARGET {
                    return Ok(PhotonNumberDistribution {
                        probabilities: probs[..=n].to_vec(),
                        tail: 1.0 - acc,
                    });
                }
            }
            if n_max >= PND_MAX_PHOTONS {
                return Ok(PhotonNumberDistribution {
                    probabilities: probs,
                    tail: 1.0 - acc,
                });
            }
            n_max = (2 * n_max).min(PND_MAX_PHOTONS);
        }
    }

    /// Generating function of the Wigner function in (μ, ν), parameterized by (β, β*).
    fn wigner_family(&self) -> ExponentFamily {
        let dc = &self.coeffs;
        let (k1, k2, k3, k5, k6, k9) = (dc.kappa1, dc.kappa2, dc.kappa3, dc.kappa5, dc.kappa6, dc.kappa9);
        let r = k3 * k3 / k9;
        let mut base = QuadraticExponent::zero(2);
        let mm = dc.eps2 / dc.eps4 + r * (0.5 * k6 - k1 * k6 - k2 * k5);
        base.add_monomial(MU, NU, re(1.0 - dc.eps1 / dc.eps4 + r * (4.0 * k2 * k6 + k1 * k5 - 0.5 * k5)))
            .add_monomial(MU, MU, re(mm))
            .add_monomial(NU, NU, re(mm));
        let envelope = k1 / k9 - 0.5 / k9;
        // coefficient of (νβ + μβ*) and of (μβ + νβ*)
        let u = envelope * k3 * dc.eps8 - 2.0 * k2 / k9 * k3 * dc.eps7;
        let v = envelope * k3 * dc.eps7 - 2.0 * k2 / k9 * k3 * dc.eps8;
        const BETA: usize = 0;
        const BETA_CONJ: usize = 1;
        let mut fam = ExponentFamily::new(base, 2);
        fam.couple(NU, BETA, re(u))
            .couple(MU, BETA_CONJ, re(u))
            .couple(MU, BETA, re(v))
            .couple(NU, BETA_CONJ, re(v))
            .add_constant_quadratic(BETA, BETA_CONJ, re(-envelope))
            .add_constant_quadratic(BETA, BETA, re(k2 / k9))
            .add_constant_quadratic(BETA_CONJ, BETA_CONJ, re(k2 / k9));
        fam
    }

    /// Wigner function at `β = (x + iy)/√2`, normalized to unit integral over `d²β`.
    pub fn wigner(&self, x: f64, y: f64) -> Result<WignerPoint> {
        self.require_defined()?;
        let fam = self.wigner_family();
        self.wigner_with(&fam, x, y)
    }

    fn wigner_with(&self, fam: &ExponentFamily, x: f64, y: f64) -> Result<WignerPoint> {
        let m = self.params.m as usize;
        let beta = Complex64::new(x, y) / 2f64.sqrt();
        let idx = MultiIndex::new([m, m]);
        let tb = kernel_for(2 * m).taylor_box(&fam.instantiate(&[beta, beta.conj()])?, &idx)?;
        let c = tb.coefficient(&[m, m]).expect("corner");
        let w = c / (PI * self.herald_coeff * self.coeffs.kappa9.sqrt());
        if w.im.abs() > IMAG_SLACK * w.re.abs().max(1.0) {
            return Err(Error::NumericalConsistency(format!(
                "Wigner value at ({x}, {y}) has imaginary part {}",
                w.im
            )));
        }
        Ok(WignerPoint { x, y, w: w.re })
    }

    /// Wigner function on a `resolution × resolution` grid, x-major order.
    pub fn wigner_grid(&self, x_range: (f64, f64), y_range: (f64, f64), resolution: usize) -> Result<Vec<WignerPoint>> {
        self.require_defined()?;
        let fam = self.wigner_family();
        grid_coordinates(x_range, y_range, resolution)
            .into_par_iter()
            .map(|(x, y)| self.wigner_with(&fam, x, y))
            .collect()
    }
}

/// Grid nodes in x-major order; a single node sits at the range start.
pub fn grid_coordinates(x_range: (f64, f64), y_range: (f64, f64), resolution: usize) -> Vec<(f64, f64)> {
    let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
        match resolution {
            0 => vec![],
            1 => vec![lo],
            n => (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    };
    let xs = axis(x_range);
    let ys = axis(y_range);
    xs.iter()
        .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
        .collect()
}

/// Trapezoidal integral of a square x-major grid over the phase-space measure
/// `d²β = dx dy / 2`.
pub fn wigner_quadrature(points: &[WignerPoint], resolution: usize) -> f64 {
    if resolution < 2 || points.len() != resolution * resolution {
        return f64::NAN;
    }
    let dx = points[resolution].x - points[0].x;
    let dy = points[1].y - points[0].y;
    let weight = |i: usize| if i == 0 || i == resolution - 1 { 0.5 } else { 1.0 };
    let mut sum = 0.0;
    for i in 0..resolution {
        for j in 0..resolution {
            sum += weight(i) * weight(j) * points[i * resolution + j].w;
        }
    }
    sum * dx * dy / 2.0
}

pub fn success_probability(params: &CircuitParams) -> Result<f64> {
    Ok(ConditionalState::new(params)?.success_probability())
}

pub fn moment(params: &CircuitParams, k: usize, l: usize) -> Result<Complex64> {
    ConditionalState::new(params)?.moment(k, l)
}

pub fn variances(params: &CircuitParams) -> Result<QuadratureVariances> {
    ConditionalState::new(params)?.variances()
}

pub fn pnd(params: &CircuitParams, n: usize) -> Result<f64> {
    ConditionalState::new(params)?.pnd(n)
}

pub fn wigner(params: &CircuitParams, x: f64, y: f64) -> Result<WignerPoint> {
    ConditionalState::new(params)?.wigner(x, y)
}

pub fn wigner_grid(
    params: &CircuitParams,
    x_range: (f64, f64),
    y_range: (f64, f64),
    resolution: usize,
) -> Result<Vec<WignerPoint>> {
    ConditionalState::new(params)?.wigner_grid(x_range, y_range, resolution)
}

/// Lower end of the squeezing-threshold scan.
pub const THRESHOLD_R_MIN: f64 = 1e-4;
/// Upper end of the squeezing-threshold scan.
pub const THRESHOLD_R_MAX: f64 = 3.0;
const THRESHOLD_SCAN_STEP: f64 = 0.05;
const THRESHOLD_TOL: f64 = 1e-6;
const THRESHOLD_MAX_ITER: usize = 200;

/// Smallest `r` where `Δ²P` of the heralded state crosses the vacuum level ½.
///
/// A coarse scan over `[1e-4, 3]` locates the first sign change of `Δ²P − ½`
/// and bisection refines it to `1e-6` in `r`.
pub fn squeezing_threshold(m: u32, transmissivity: f64, eta1: f64, eta2: f64) -> Result<SqueezingThreshold> {
    let base = CircuitParams::new(THRESHOLD_R_MIN, eta1, eta2, transmissivity, m)?;
    let excess = |r: f64| -> Result<f64> { Ok(variances(&base.with_r(r))?.var_p - 0.5) };

    let steps = ((THRESHOLD_R_MAX - THRESHOLD_R_MIN) / THRESHOLD_SCAN_STEP).ceil() as usize;
    let mut lo = THRESHOLD_R_MIN;
    let mut f_lo = excess(lo)?;
    let first_negative = f_lo < 0.0;
    let mut bracket = None;
    for i in 1..=steps {
        let hi = (THRESHOLD_R_MIN + i as f64 * THRESHOLD_SCAN_STEP).min(THRESHOLD_R_MAX);
        let f_hi = excess(hi)?;
        if (f_lo < 0.0) != (f_hi < 0.0) {
            bracket = Some((lo, hi, f_lo));
            break;
        }
        lo = hi;
        f_lo = f_hi;
    }
    let Some((mut lo, mut hi, f_start)) = bracket else {
        return Ok(if first_negative {
            SqueezingThreshold::AlwaysSqueezed
        } else {
            SqueezingThreshold::NeverSqueezed
        });
    };

    let lo_negative = f_start < 0.0;
    let mut residual = f_start;
    for _ in 0..THRESHOLD_MAX_ITER {
        if hi - lo <= THRESHOLD_TOL {
            return Ok(SqueezingThreshold::Crossing(0.5 * (lo + hi)));
        }
        let mid = 0.5 * (lo + hi);
        residual = excess(mid)?;
        if (residual < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        iterations: THRESHOLD_MAX_ITER,
        lo,
        hi,
        residual,
    })
}

/// Closed forms for the squeezed vacuum `S(r)|0⟩` itself.
pub mod squeezed_vacuum {
    use super::*;

    /// `⟨a†^k a^l⟩` from its generating function in (f, g).
    pub fn moment(r: f64, k: usize, l: usize) -> Result<Complex64> {
        let lambda = r.tanh();
        let d = 1.0 - lambda * lambda;
        let mut e = QuadraticExponent::zero(2);
        e.add_monomial(0, 0, re(lambda / (2.0 * d)))
            .add_monomial(1, 1, re(lambda / (2.0 * d)))
            .add_monomial(0, 1, re(lambda * lambda / d));
        kernel_for(k + l).extract_derivative(&e, &MultiIndex::new([k, l]))
    }

    pub fn mean_photon_number(r: f64) -> f64 {
        let l2 = r.tanh().powi(2);
        l2 / (1.0 - l2)
    }

    pub fn variances(r: f64) -> Result<QuadratureVariances> {
        Ok(QuadratureVariances::from_moments(
            moment(r, 1, 1)?.re,
            moment(r, 1, 0)?,
            moment(r, 2, 0)?,
        ))
    }

    /// `P(n) = n! λⁿ √(1−λ²) / (2ⁿ ((n/2)!)²)` for even `n`, zero for odd.
    pub fn pnd(r: f64, n: usize) -> f64 {
        if n % 2 == 1 {
            return 0.0;
        }
        let lambda = r.tanh();
        let half = n / 2;
        // build n!/(2ⁿ (n/2)!²) · λⁿ as a running product to stay in range
        let mut v = (1.0 - lambda * lambda).sqrt();
        for k in 1..=half {
            v *= lambda * lambda * (2 * k - 1) as f64 * (2 * k) as f64 / (4.0 * (k * k) as f64);
        }
        v
    }

    pub fn wigner(r: f64, x: f64, y: f64) -> f64 {
        let lambda = r.tanh();
        let d = 1.0 - lambda * lambda;
        let beta = Complex64::new(x, y) / 2f64.sqrt();
        let e = -2.0 * (1.0 + lambda * lambda) / d * beta.norm_sqr()
            + 2.0 * lambda / d * 2.0 * (beta * beta).re;
        2.0 / PI * e.exp()
    }
}
