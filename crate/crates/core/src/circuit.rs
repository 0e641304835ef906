//! The five-stage lossy photon-subtraction circuit in characteristic-function form.
//!
//! Mode `a` starts in a squeezed vacuum and mode `b` in vacuum. The chain is
//!
//! ```text
//!   loss(η₁) on a  →  beam splitter T  →  loss(η₂) on b  →  detect m photons in b
//! ```
//!
//! Every intermediate state is Gaussian with a characteristic function
//! `χ(α, β) = Tr[ρ D_a(α) D_b(β)]` of the form
//!
//! ```text
//!   exp( wₐ|α|² + sₐ(α² + α*²) + w_b|β|² + s_b(β² + β*²)
//!        + x(αβ + α*β*) + y(αβ* + α*β) )
//! ```
//!
//! with six real weights, so the pipeline is a sequence of maps on
//! [`TwoModeGaussianCF`]. The heralding step leaves the Gaussian family and is
//! handled by the generating functions in [`crate::observables`], which consume
//! the scalar coefficients collected in [`DerivedCoefficients`].

use num_complex::Complex64;

use crate::error::{Error, Result};

/// The five experimental knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    /// Squeezing parameter of the input state.
    pub r: f64,
    /// Loss factor on mode `a` before the beam splitter.
    pub eta1: f64,
    /// Loss factor on mode `b` after the beam splitter.
    pub eta2: f64,
    /// Beam-splitter transmissivity `T = cos²θ`.
    pub transmissivity: f64,
    /// Number of photons detected in mode `b`.
    pub m: u32,
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::ParameterDomain {
            name,
            value,
            domain: "[0, 1]",
        });
    }
    Ok(())
}

impl CircuitParams {
    pub fn new(r: f64, eta1: f64, eta2: f64, transmissivity: f64, m: u32) -> Result<Self> {
        let p = Self {
            r,
            eta1,
            eta2,
            transmissivity,
            m,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        // tanh(r) rounds to 1 beyond r ≈ 18.7, where 1 − λ² vanishes
        if !(self.r >= 0.0 && self.r.is_finite() && 1.0 - self.r.tanh().powi(2) > 0.0) {
            return Err(Error::ParameterDomain {
                name: "r",
                value: self.r,
                domain: "[0, ~18.7)",
            });
        }
        check_unit("eta1", self.eta1)?;
        check_unit("eta2", self.eta2)?;
        check_unit("T", self.transmissivity)?;
        Ok(())
    }

    pub fn with_r(self, r: f64) -> Self {
        Self { r, ..self }
    }

    pub fn with_m(self, m: u32) -> Self {
        Self { m, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    A,
    B,
}

/// Real exponent weights of a two-mode Gaussian characteristic function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeGaussianCF {
    /// Weight of `|α|²`.
    pub a_modulus: f64,
    /// Weight of `α² + α*²`.
    pub a_squeeze: f64,
    /// Weight of `|β|²`.
    pub b_modulus: f64,
    /// Weight of `β² + β*²`.
    pub b_squeeze: f64,
    /// Weight of `αβ + α*β*`.
    pub cross: f64,
    /// Weight of `αβ* + α*β`.
    pub cross_conj: f64,
}

impl TwoModeGaussianCF {
    /// Two-mode vacuum.
    pub fn vacuum() -> Self {
        Self {
            a_modulus: -0.5,
            a_squeeze: 0.0,
            b_modulus: -0.5,
            b_squeeze: 0.0,
            cross: 0.0,
            cross_conj: 0.0,
        }
    }

    /// `χ(α, β)`. The exponent is real for real weights, so the value is too.
    pub fn evaluate(&self, alpha: Complex64, beta: Complex64) -> f64 {
        let e = self.a_modulus * alpha.norm_sqr()
            + self.a_squeeze * 2.0 * (alpha * alpha).re
            + self.b_modulus * beta.norm_sqr()
            + self.b_squeeze * 2.0 * (beta * beta).re
            + self.cross * 2.0 * (alpha * beta).re
            + self.cross_conj * 2.0 * (alpha * beta.conj()).re;
        e.exp()
    }

    pub fn weights(&self) -> [f64; 6] {
        [
            self.a_modulus,
            self.a_squeeze,
            self.b_modulus,
            self.b_squeeze,
            self.cross,
            self.cross_conj,
        ]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.weights()
            .iter()
            .zip(other.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// CF of the squeezed vacuum in `a` times vacuum in `b`.
pub fn stage1_cf(params: &CircuitParams) -> Result<TwoModeGaussianCF> {
    params.validate()?;
    let lambda = params.r.tanh();
    let d = 1.0 - lambda * lambda;
    Ok(TwoModeGaussianCF {
        a_modulus: -(1.0 + lambda * lambda) / (2.0 * d),
        a_squeeze: lambda / (2.0 * d),
        ..TwoModeGaussianCF::vacuum()
    })
}

/// Pure-loss channel on one mode: `χ(α) → χ(√(1−η) α) e^{−η|α|²/2}`.
pub fn apply_loss(cf: &TwoModeGaussianCF, mode: Mode, eta: f64) -> Result<TwoModeGaussianCF> {
    check_unit("eta", eta)?;
    let keep = 1.0 - eta;
    let amp = keep.sqrt();
    let mut out = *cf;
    match mode {
        Mode::A => {
            out.a_modulus = keep * cf.a_modulus - 0.5 * eta;
            out.a_squeeze = keep * cf.a_squeeze;
        }
        Mode::B => {
            out.b_modulus = keep * cf.b_modulus - 0.5 * eta;
            out.b_squeeze = keep * cf.b_squeeze;
        }
    }
    out.cross = amp * cf.cross;
    out.cross_conj = amp * cf.cross_conj;
    Ok(out)
}

/// Substitutes `α → cosθ α + sinθ β`, `β → −sinθ α + cosθ β` in the exponent.
///
/// A beam splitter with `U a U† = √T a + √(1−T) b` acts on the CF this way with
/// `cos²θ = T`. Negative angles undo positive ones.
pub fn apply_mode_rotation(cf: &TwoModeGaussianCF, theta: f64) -> TwoModeGaussianCF {
    let (s, t) = theta.sin_cos();
    let (tt, ss, ts) = (t * t, s * s, t * s);
    TwoModeGaussianCF {
        a_modulus: tt * cf.a_modulus + ss * cf.b_modulus - 2.0 * ts * cf.cross_conj,
        a_squeeze: tt * cf.a_squeeze + ss * cf.b_squeeze - ts * cf.cross,
        b_modulus: ss * cf.a_modulus + tt * cf.b_modulus + 2.0 * ts * cf.cross_conj,
        b_squeeze: ss * cf.a_squeeze + tt * cf.b_squeeze + ts * cf.cross,
        cross: 2.0 * ts * (cf.a_squeeze - cf.b_squeeze) + (tt - ss) * cf.cross,
        cross_conj: ts * (cf.a_modulus - cf.b_modulus) + (tt - ss) * cf.cross_conj,
    }
}

/// Beam splitter of transmissivity `T`.
pub fn apply_beamsplitter(cf: &TwoModeGaussianCF, transmissivity: f64) -> Result<TwoModeGaussianCF> {
    check_unit("T", transmissivity)?;
    Ok(apply_mode_rotation(cf, transmissivity.sqrt().acos()))
}

/// CFs after stages 1 through 4 (input, loss on a, beam splitter, loss on b).
pub fn stage_cfs(params: &CircuitParams) -> Result<[TwoModeGaussianCF; 4]> {
    let s1 = stage1_cf(params)?;
    let s2 = apply_loss(&s1, Mode::A, params.eta1)?;
    let s3 = apply_beamsplitter(&s2, params.transmissivity)?;
    let s4 = apply_loss(&s3, Mode::B, params.eta2)?;
    Ok([s1, s2, s3, s4])
}

/// Scalar coefficients shared by the closed-form observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCoefficients {
    pub lambda: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub eps4: f64,
    pub eps5: f64,
    pub eps6: f64,
    pub eps7: f64,
    pub eps8: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub kappa4: f64,
    pub kappa5: f64,
    pub kappa6: f64,
    pub kappa7: f64,
    pub kappa8: f64,
    pub kappa9: f64,
}

impl DerivedCoefficients {
    /// Stage-3 CF written directly in terms of λ and the τ's.
    pub fn stage3_cf(&self) -> TwoModeGaussianCF {
        let l = self.lambda;
        TwoModeGaussianCF {
            a_modulus: -(0.5 + l * l * self.tau1),
            a_squeeze: 0.5 * l * self.tau1,
            b_modulus: -(0.5 + l * l * self.tau2),
            b_squeeze: 0.5 * l * self.tau2,
            cross: l * self.tau3,
            cross_conj: -l * l * self.tau3,
        }
    }
}

pub fn derived_coefficients(params: &CircuitParams) -> Result<DerivedCoefficients> {
    params.validate()?;
    let CircuitParams {
        r,
        eta1,
        eta2,
        transmissivity: t,
        ..
    } = *params;

    let lambda = r.tanh();
    let l2 = lambda * lambda;
    let d = 1.0 - l2;
    let tau1 = (1.0 - eta1) * t / d;
    let tau2 = (1.0 - eta1) * (1.0 - t) / d;
    let tau3 = (1.0 - eta1) * (t * (1.0 - t)).sqrt() / d;

    let eps1 = 1.0 + l2 * tau2 * (1.0 - eta2);
    let eps2 = 0.5 * lambda * tau2 * (1.0 - eta2);
    let eps3 = lambda * tau3 * (1.0 - eta2).sqrt();
    let eps4 = eps1 * eps1 - 4.0 * eps2 * eps2;
    if eps4.is_nan() || eps4 <= 0.0 {
        return Err(Error::Discriminant {
            name: "eps4",
            value: eps4,
        });
    }
    let e3sq = eps3 * eps3;
    let eps5 = 4.0 * lambda * eps2 * e3sq - (1.0 + l2) * eps1 * e3sq;
    let eps6 = (1.0 + l2) * eps2 * e3sq - lambda * eps1 * e3sq;
    let eps7 = lambda * eps1 - 2.0 * eps2;
    let eps8 = eps1 - 2.0 * lambda * eps2;

    let kappa1 = 1.0 + l2 * tau1 + eps5 / eps4;
    let kappa2 = 0.5 * lambda * tau1 + eps6 / eps4;
    let kappa3 = eps3 / eps4;
    let kappa4 = kappa1 * kappa1 - 4.0 * kappa2 * kappa2;
    if kappa4.is_nan() || kappa4 <= 0.0 {
        return Err(Error::Discriminant {
            name: "kappa4",
            value: kappa4,
        });
    }
    let e_sq_sum = eps1 * eps1 + 4.0 * eps2 * eps2;
    let kappa5 = 8.0 * lambda * eps1 * eps2 - (1.0 + l2) * e_sq_sum;
    let kappa6 = lambda * e_sq_sum - 2.0 * (1.0 + l2) * eps1 * eps2;
    let kappa7 = kappa1 * eps7 - 2.0 * kappa2 * eps8;
    let kappa8 = kappa1 * eps8 - 2.0 * kappa2 * eps7;
    let kappa9 = (kappa1 - 0.5).powi(2) - 4.0 * kappa2 * kappa2;
    if kappa9.is_nan() || kappa9 <= 0.0 {
        return Err(Error::Discriminant {
            name: "kappa9",
            value: kappa9,
        });
    }

    Ok(DerivedCoefficients {
        lambda,
        tau1,
        tau2,
        tau3,
        eps1,
        eps2,
        eps3,
        eps4,
        eps5,
        eps6,
        eps7,
        eps8,
        kappa1,
        kappa2,
        kappa3,
        kappa4,
        kappa5,
        kappa6,
        kappa7,
        kappa8,
        kappa9,
    })
}
