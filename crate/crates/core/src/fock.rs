//! Brute-force simulation of the circuit in a truncated Fock basis.
//!
//! This module shares no code path with the characteristic-function
//! machinery: states are amplitude vectors and density matrices, the loss
//! channel is applied through its Kraus operators, and the beam splitter is a
//! unitary acting on fixed-total-photon-number blocks.
//!
//! Two-mode states are stored as an ensemble of unnormalized pure branches,
//! `ρ = Σₖ |ψₖ⟩⟨ψₖ|`, each branch an amplitude matrix `ψ[n_a, n_b]`. A loss
//! channel replaces every branch by its Kraus images. Branches carrying less
//! than [`PRUNE_WEIGHT`] are dropped and their weight is recorded, so the
//! bookkeeping stays exact up to an explicitly reported discard.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::circuit::{CircuitParams, Mode};
use crate::error::{Error, Result};
use crate::observables::QuadratureVariances;

pub type CMatrix = DMatrix<Complex64>;

/// Starting cutoff (dimension per mode).
pub const DEFAULT_CUTOFF: usize = 40;
/// Largest cutoff the automatic escalation will try.
pub const MAX_CUTOFF: usize = 200;
/// Probability allowed above `cutoff − TAIL_GUARD`.
pub const TAIL_TOLERANCE: f64 = 1e-10;
pub const TAIL_GUARD: usize = 4;
/// Cutoff increment of the automatic escalation.
pub const CUTOFF_STEP: usize = 20;
/// Agreement required between successive cutoffs in [`simulate_auto`].
pub const CONVERGENCE_TOLERANCE: f64 = 1e-10;
/// Branches lighter than this are discarded.
pub const PRUNE_WEIGHT: f64 = 1e-24;
/// Success probabilities below this count as a failed herald.
pub const HERALD_FLOOR: f64 = 1e-14;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// `ln n!` for `n ≤ 2·MAX_CUTOFF + 8`.
fn ln_factorial(n: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = vec![0.0; 2 * MAX_CUTOFF + 9];
        for k in 1..t.len() {
            t[k] = t[k - 1] + (k as f64).ln();
        }
        t
    });
    table[n]
}

/// `C(n, k) (1−η)^{n−k} ηᵏ`.
fn binomial_weight(n: usize, k: usize, eta: f64) -> f64 {
    if eta == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if eta == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let ln = ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
        + (n - k) as f64 * (1.0 - eta).ln()
        + k as f64 * eta.ln();
    ln.exp()
}

/// Single-mode pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    amplitudes: Vec<Complex64>,
}

impl FockState {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    /// `|n⟩` in a space of dimension `cutoff`.
    pub fn number(n: usize, cutoff: usize) -> Self {
        let mut amplitudes = vec![zero(); cutoff];
        amplitudes[n] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn cutoff(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        Self {
            amplitudes: self.amplitudes.iter().map(|c| c / n).collect(),
        }
    }

    /// `aᵐ|ψ⟩`, unnormalized.
    pub fn annihilate(&self, m: usize) -> Self {
        let n = self.cutoff();
        let mut out = vec![zero(); n];
        for (k, slot) in out.iter_mut().enumerate() {
            if k + m < n {
                let f = (0.5 * (ln_factorial(k + m) - ln_factorial(k))).exp();
                *slot = self.amplitudes[k + m] * f;
            }
        }
        Self { amplitudes: out }
    }

    pub fn to_density(&self) -> FockDensity {
        let v = nalgebra::DVector::from_column_slice(&self.amplitudes);
        FockDensity::new(&v * v.adjoint())
    }
}

/// Squeezed-vacuum amplitude `c_{2k}` for `k = 0, 1, …`, generated by recurrence.
fn squeezed_amplitudes(r: f64, len: usize) -> Vec<f64> {
    let lambda = r.tanh();
    let mut out = vec![0.0; len];
    if len == 0 {
        return out;
    }
    let mut c = (1.0 - lambda * lambda).powf(0.25);
    let mut n = 0;
    while n < len {
        out[n] = c;
        let k = (n / 2) as f64;
        c *= lambda * ((2.0 * k + 1.0) * (2.0 * k + 2.0)).sqrt() / (2.0 * (k + 1.0));
        n += 2;
    }
    out
}

/// Probability of the squeezed vacuum at photon numbers `≥ from`.
pub fn squeezed_vacuum_tail(r: f64, from: usize) -> f64 {
    // the even-amplitude ratio tends to λ² from below, so summing until terms
    // fall under 1e-30 relative captures the tail
    let lambda = r.tanh();
    if lambda == 0.0 {
        return if from == 0 { 1.0 } else { 0.0 };
    }
    let mut len = from + 64;
    loop {
        let amps = squeezed_amplitudes(r, len);
        let last = amps[len - 2].powi(2).max(amps[len - 1].powi(2));
        if last < 1e-30 || len > 100_000 {
            return amps[from.min(len)..].iter().map(|c| c * c).sum();
        }
        len *= 2;
    }
}

/// Smallest cutoff `≥ DEFAULT_CUTOFF` whose squeezed-vacuum tail passes the criterion.
pub fn required_cutoff(r: f64) -> usize {
    cutoff_for_tail(r, TAIL_TOLERANCE).max(DEFAULT_CUTOFF)
}

/// `S(r)|0⟩ = (1−λ²)^{1/4} e^{(λ/2)a†²}|0⟩` truncated to `cutoff` levels.
pub fn squeezed_vacuum(r: f64, cutoff: usize) -> Result<FockState> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::ParameterDomain {
            name: "r",
            value: r,
            domain: "[0, ∞)",
        });
    }
    let tail = squeezed_vacuum_tail(r, cutoff.saturating_sub(TAIL_GUARD));
    if tail >= TAIL_TOLERANCE {
        return Err(Error::CutoffTooSmall {
            cutoff,
            required: required_cutoff(r),
            tail,
        });
    }
    Ok(FockState {
        amplitudes: squeezed_amplitudes(r, cutoff)
            .into_iter()
            .map(|c| Complex64::new(c, 0.0))
            .collect(),
    })
}

/// Kraus decomposition of the pure-loss channel,
/// `K_j|n⟩ = √(C(n,j)(1−η)^{n−j}ηʲ) |n−j⟩`.
#[derive(Debug, Clone)]
pub struct KrausSet {
    eta: f64,
    cutoff: usize,
    /// `coeffs[j][n]` is the `|n⟩ → |n−j⟩` amplitude of `K_j`.
    coeffs: Vec<Vec<f64>>,
}

impl KrausSet {
    pub fn new(eta: f64, cutoff: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::ParameterDomain {
                name: "eta",
                value: eta,
                domain: "[0, 1]",
            });
        }
        let coeffs = (0..cutoff)
            .map(|j| {
                (0..cutoff)
                    .map(|n| if n >= j { binomial_weight(n, j, eta).sqrt() } else { 0.0 })
                    .collect()
            })
            .collect();
        let set = Self { eta, cutoff, coeffs };
        let defect = set.completeness_defect();
        if defect > 1e-10 {
            return Err(Error::Truncation(format!(
                "Kraus completeness defect {defect:e} at eta = {eta}"
            )));
        }
        Ok(set)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn len(&self) -> usize {
        self.cutoff
    }

    pub fn is_empty(&self) -> bool {
        self.cutoff == 0
    }

    /// Amplitude of `K_j` from `|n⟩` to `|n−j⟩`.
    pub fn coefficient(&self, j: usize, n: usize) -> f64 {
        self.coeffs[j][n]
    }

    /// Dense matrix of `K_j`.
    pub fn operator(&self, j: usize) -> CMatrix {
        let n = self.cutoff;
        CMatrix::from_fn(n, n, |row, col| {
            if col == row + j {
                Complex64::new(self.coeffs[j][col], 0.0)
            } else {
                zero()
            }
        })
    }

    /// `max |Σ_j K_j†K_j − 1|` over the diagonal (the sum is diagonal by construction).
    pub fn completeness_defect(&self) -> f64 {
        (0..self.cutoff)
            .map(|n| {
                let s: f64 = (0..=n).map(|j| self.coeffs[j][n].powi(2)).sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Applies `ρ → Σ_j K_j ρ K_j†` to a single-mode density.
    pub fn apply(&self, rho: &FockDensity) -> Result<FockDensity> {
        if rho.dim() != self.cutoff {
            return Err(Error::DimensionMismatch("Kraus set and density cutoffs differ".into()));
        }
        let n = self.cutoff;
        let mut out = CMatrix::zeros(n, n);
        for j in 0..n {
            for p in 0..n - j {
                let kp = self.coeffs[j][p + j];
                if kp == 0.0 {
                    continue;
                }
                for q in 0..n - j {
                    out[(p, q)] += rho.matrix[(p + j, q + j)] * (kp * self.coeffs[j][q + j]);
                }
            }
        }
        Ok(FockDensity::new(out))
    }
}

/// Single-mode density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensity {
    matrix: CMatrix,
}

impl FockDensity {
    pub fn new(matrix: CMatrix) -> Self {
        assert!(matrix.is_square(), "density matrix must be square");
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).camax()
    }

    /// Whether all eigenvalues of the Hermitian part exceed `−tol`, tested by
    /// a Cholesky factorization of `ρ + tol·1` in the real embedding
    /// `[[X, −Y], [Y, X]]` of `X + iY`, which has the same spectrum.
    pub fn is_positive(&self, tol: f64) -> bool {
        let n = self.dim();
        let h = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let real = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
            let v = h[(i % n, j % n)];
            let shift = if i == j { tol } else { 0.0 };
            match (i < n, j < n) {
                (true, true) | (false, false) => v.re + shift,
                (true, false) => -v.im,
                (false, true) => v.im,
            }
        });
        real.cholesky().is_some()
    }

    /// Checks the density-operator invariants within rounding slack.
    pub fn check(&self) -> Result<()> {
        let herm = self.hermiticity_defect();
        let tr = self.trace();
        if herm > 1e-12 || !(-1e-12..=1.0 + 1e-12).contains(&tr) {
            return Err(Error::NumericalConsistency(format!(
                "density check failed: hermiticity defect {herm:e}, trace {tr}"
            )));
        }
        Ok(())
    }

    pub fn apply_loss(&self, eta: f64) -> Result<Self> {
        KrausSet::new(eta, self.dim())?.apply(self)
    }

    /// `⟨n|ρ|n⟩` for every retained `n`.
    pub fn pnd(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.matrix[(n, n)].re).collect()
    }

    /// `Tr[a†ᵏ aˡ ρ]`, dropping terms that leave the truncated space.
    pub fn moment(&self, k: usize, l: usize) -> Complex64 {
        let n = self.dim();
        let mut acc = zero();
        for q in l..n {
            let p = q - l + k;
            if p >= n {
                continue;
            }
            let f = (0.5 * (ln_factorial(q) - ln_factorial(q - l)) + 0.5 * (ln_factorial(p) - ln_factorial(q - l))).exp();
            acc += self.matrix[(q, p)] * f;
        }
        acc
    }

    pub fn variances(&self) -> QuadratureVariances {
        let nbar = self.moment(1, 1).re;
        let ad = self.moment(1, 0);
        let ad2 = self.moment(2, 0);
        let base = nbar - ad.norm_sqr() + 0.5;
        let re2 = (ad2 - ad * ad).re;
        QuadratureVariances {
            var_x: base + re2,
            var_p: base - re2,
        }
    }

    /// `⟨(−1)^{a†a}⟩`.
    pub fn parity(&self) -> f64 {
        self.pnd()
            .iter()
            .enumerate()
            .map(|(n, p)| if n % 2 == 0 { *p } else { -p })
            .sum()
    }

    /// `W(β) = (2/π) Tr[ρ D(β)(−1)^{a†a}D†(β)]` at `β = (x + iy)/√2`,
    /// using `D(β) Π D†(β) = D(2β) Π`.
    pub fn wigner(&self, x: f64, y: f64) -> f64 {
        let beta = Complex64::new(x, y) / 2f64.sqrt();
        let n = self.dim();
        let d = displacement(2.0 * beta, n);
        let mut acc = zero();
        for p in 0..n {
            for q in 0..n {
                let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                acc += self.matrix[(p, q)] * d[(q, p)] * sign;
            }
        }
        2.0 / PI * acc.re
    }

    /// `⟨ψ|ρ|ψ⟩` for a normalized pure state.
    pub fn fidelity_with(&self, psi: &FockState) -> f64 {
        let n = self.dim().min(psi.cutoff());
        let a = psi.amplitudes();
        let mut acc = zero();
        for p in 0..n {
            for q in 0..n {
                acc += a[p].conj() * self.matrix[(p, q)] * a[q];
            }
        }
        acc.re
    }
}

/// `⟨m|D(α)|n⟩` for `m, n < cutoff`, from the associated-Laguerre form
/// `√(n!/m!) α^{m−n} e^{−|α|²/2} L_n^{(m−n)}(|α|²)` (`m ≥ n`) and
/// `√(m!/n!) (−α*)^{n−m} e^{−|α|²/2} L_m^{(n−m)}(|α|²)` (`m < n`).
pub fn displacement(alpha: Complex64, cutoff: usize) -> CMatrix {
    let mut d = CMatrix::zeros(cutoff, cutoff);
    let x = alpha.norm_sqr();
    if x == 0.0 {
        return CMatrix::identity(cutoff, cutoff);
    }
    let mag = x.sqrt();
    let phase_up = alpha / mag;
    let phase_down = -alpha.conj() / mag;
    for k in 0..cutoff {
        // L_j^{(k)}(x) for j = 0..cutoff−k by upward recurrence
        let len = cutoff - k;
        let mut lag = vec![0.0; len];
        lag[0] = 1.0;
        if len > 1 {
            lag[1] = 1.0 + k as f64 - x;
        }
        for j in 1..len.saturating_sub(1) {
            let jf = j as f64;
            lag[j + 1] = ((2.0 * jf + 1.0 + k as f64 - x) * lag[j] - (jf + k as f64) * lag[j - 1]) / (jf + 1.0);
        }
        let up = phase_up.powu(k as u32);
        let down = phase_down.powu(k as u32);
        for (j, l) in lag.iter().enumerate() {
            let pre = (0.5 * (ln_factorial(j) - ln_factorial(j + k)) + k as f64 * mag.ln() - 0.5 * x).exp();
            let v = pre * l;
            d[(j + k, j)] = up * v;
            if k > 0 {
                d[(j, j + k)] = down * v;
            }
        }
    }
    d
}

/// Two-mode beam splitter `U` with `U a U† = √T a + √(1−T) b` and
/// `U b U† = −√(1−T) a + √T b`, stored block by total photon number.
///
/// Block `n` acts on the states `|k, n−k⟩` retained by the cutoff, indexed by
/// `k − first(n)`.
#[derive(Debug, Clone)]
pub struct BeamSplitter {
    cutoff: usize,
    transmissivity: f64,
    blocks: Vec<DMatrix<f64>>,
}

fn block_range(n: usize, cutoff: usize) -> (usize, usize) {
    let lo = n.saturating_sub(cutoff - 1);
    let hi = n.min(cutoff - 1);
    (lo, hi)
}

impl BeamSplitter {
    /// Builds each column `U|j, n−j⟩ = (t a† + s b†)ʲ (−s a† + t b†)^{n−j} |0,0⟩ / √(j!(n−j)!)`
    /// by repeated creation on a normalized vector.
    pub fn new(transmissivity: f64, cutoff: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&transmissivity) {
            return Err(Error::ParameterDomain {
                name: "T",
                value: transmissivity,
                domain: "[0, 1]",
            });
        }
        let t = transmissivity.sqrt();
        let s = (1.0 - transmissivity).sqrt();
        let max_total = 2 * cutoff.saturating_sub(1);
        let mut blocks = Vec::with_capacity(max_total + 1);
        for n in 0..=max_total {
            let (lo, hi) = block_range(n, cutoff);
            let dim = hi + 1 - lo;
            let mut block = DMatrix::<f64>::zeros(dim, dim);
            for j in lo..=hi {
                // amplitudes over k = n_a for the current total photon number
                let mut v = vec![1.0];
                let create = |v: &Vec<f64>, ca: f64, cb: f64, step: usize| -> Vec<f64> {
                    let p = v.len() - 1;
                    let mut w = vec![0.0; p + 2];
                    for (k, &amp) in v.iter().enumerate() {
                        w[k + 1] += ca * ((k + 1) as f64).sqrt() * amp;
                        w[k] += cb * ((p - k + 1) as f64).sqrt() * amp;
                    }
                    let norm = (step as f64).sqrt();
                    w.iter_mut().for_each(|x| *x /= norm);
                    w
                };
                for step in 1..=n - j {
                    v = create(&v, -s, t, step);
                }
                for step in 1..=j {
                    v = create(&v, t, s, step);
                }
                for k in lo..=hi {
                    block[(k - lo, j - lo)] = v[k];
                }
            }
            blocks.push(block);
        }
        Ok(Self {
            cutoff,
            transmissivity,
            blocks,
        })
    }

    /// Same operator from `exp[θ(a b† − a† b)]` with `cos²θ = T`, block by block.
    pub fn exponentiated(transmissivity: f64, cutoff: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&transmissivity) {
            return Err(Error::ParameterDomain {
                name: "T",
                value: transmissivity,
                domain: "[0, 1]",
            });
        }
        let theta = transmissivity.sqrt().acos();
        let max_total = 2 * cutoff.saturating_sub(1);
        let mut blocks = Vec::with_capacity(max_total + 1);
        for n in 0..=max_total {
            // full block on k = 0..=n, then restricted to the retained range
            let mut gen = DMatrix::<f64>::zeros(n + 1, n + 1);
            for k in 0..=n {
                // a b† |k, n−k⟩ = √k √(n−k+1) |k−1, n−k+1⟩
                if k >= 1 {
                    gen[(k - 1, k)] += theta * ((k * (n - k + 1)) as f64).sqrt();
                }
                // a† b |k, n−k⟩ = √(k+1) √(n−k) |k+1, n−k−1⟩
                if k < n {
                    gen[(k + 1, k)] -= theta * (((k + 1) * (n - k)) as f64).sqrt();
                }
            }
            let full = gen.exp();
            let (lo, hi) = block_range(n, cutoff);
            blocks.push(full.view((lo, lo), (hi + 1 - lo, hi + 1 - lo)).into_owned());
        }
        Ok(Self {
            cutoff,
            transmissivity,
            blocks,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn transmissivity(&self) -> f64 {
        self.transmissivity
    }

    pub fn block(&self, total: usize) -> &DMatrix<f64> {
        &self.blocks[total]
    }

    /// Full `N² × N²` matrix with basis index `n_a · N + n_b`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.cutoff;
        let mut u = DMatrix::<f64>::zeros(n * n, n * n);
        for (total, block) in self.blocks.iter().enumerate() {
            let (lo, hi) = block_range(total, n);
            for k in lo..=hi {
                for j in lo..=hi {
                    u[(k * n + total - k, j * n + total - j)] = block[(k - lo, j - lo)];
                }
            }
        }
        u
    }

    /// Applies `U` to a two-mode amplitude matrix `ψ[n_a, n_b]`.
    pub fn apply(&self, psi: &CMatrix) -> CMatrix {
        let n = self.cutoff;
        let mut out = CMatrix::zeros(n, n);
        for (total, block) in self.blocks.iter().enumerate() {
            let (lo, hi) = block_range(total, n);
            let input: Vec<Complex64> = (lo..=hi).map(|j| psi[(j, total - j)]).collect();
            if input.iter().all(|c| *c == zero()) {
                continue;
            }
            for k in lo..=hi {
                let mut acc = zero();
                for (j, c) in input.iter().enumerate() {
                    acc += c * block[(k - lo, j)];
                }
                out[(k, total - k)] = acc;
            }
        }
        out
    }
}

/// Two-mode state as an ensemble of pure branches.
#[derive(Debug, Clone)]
pub struct TwoModeState {
    cutoff: usize,
    branches: Vec<CMatrix>,
    discarded: f64,
}

impl TwoModeState {
    /// `|ψ⟩_a ⊗ |0⟩_b`.
    pub fn with_vacuum_b(psi: &FockState) -> Self {
        let n = psi.cutoff();
        let mut m = CMatrix::zeros(n, n);
        for (k, c) in psi.amplitudes().iter().enumerate() {
            m[(k, 0)] = *c;
        }
        Self {
            cutoff: n,
            branches: vec![m],
            discarded: 0.0,
        }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn branches(&self) -> &[CMatrix] {
        &self.branches
    }

    /// Total weight dropped by pruning so far.
    pub fn discarded(&self) -> f64 {
        self.discarded
    }

    pub fn trace(&self) -> f64 {
        self.branches.iter().map(|b| b.norm_squared()).sum()
    }

    pub fn apply_loss(&self, mode: Mode, eta: f64) -> Result<Self> {
        let kraus = KrausSet::new(eta, self.cutoff)?;
        let n = self.cutoff;
        let mut branches = Vec::new();
        let mut discarded = self.discarded;
        for psi in &self.branches {
            for j in 0..n {
                let out = CMatrix::from_fn(n, n, |p, q| match mode {
                    Mode::A if p + j < n => psi[(p + j, q)] * kraus.coefficient(j, p + j),
                    Mode::B if q + j < n => psi[(p, q + j)] * kraus.coefficient(j, q + j),
                    _ => zero(),
                });
                let w = out.norm_squared();
                if w == 0.0 {
                    continue;
                }
                if w < PRUNE_WEIGHT {
                    discarded += w;
                } else {
                    branches.push(out);
                }
            }
        }
        let next = Self {
            cutoff: n,
            branches,
            discarded,
        };
        let before = self.trace() + self.discarded;
        let after = next.trace() + next.discarded;
        if (before - after).abs() > 1e-10 {
            return Err(Error::Truncation(format!(
                "loss channel changed the trace from {before} to {after}"
            )));
        }
        Ok(next)
    }

    pub fn apply_beamsplitter(&self, bs: &BeamSplitter) -> Result<Self> {
        if bs.cutoff() != self.cutoff {
            return Err(Error::DimensionMismatch("beam splitter cutoff differs from state".into()));
        }
        Ok(Self {
            cutoff: self.cutoff,
            branches: self.branches.iter().map(|b| bs.apply(b)).collect(),
            discarded: self.discarded,
        })
    }

    /// `Tr[ρ D_a(α) D_b(β)]`.
    pub fn characteristic_function(&self, alpha: Complex64, beta: Complex64) -> Complex64 {
        let da = displacement(alpha, self.cutoff);
        let db = displacement(beta, self.cutoff);
        let dbt = db.transpose();
        self.branches
            .iter()
            .map(|psi| {
                let moved = &da * psi * &dbt;
                psi.iter().zip(moved.iter()).map(|(p, q)| p.conj() * q).sum::<Complex64>()
            })
            .sum()
    }

    /// Dense `N² × N²` density matrix with basis index `n_a · N + n_b`.
    pub fn to_density(&self) -> FockDensity {
        let n = self.cutoff;
        let mut rho = CMatrix::zeros(n * n, n * n);
        for psi in &self.branches {
            // column-major storage of ψ[n_a, n_b] would give n_b·N + n_a; transpose first
            let v = nalgebra::DVector::from_iterator(n * n, psi.transpose().iter().cloned());
            rho += &v * v.adjoint();
        }
        FockDensity::new(rho)
    }

    /// Reduced state of mode `b` photon-number distribution, `P_b(k)`.
    pub fn pnd_b(&self) -> Vec<f64> {
        let n = self.cutoff;
        (0..n)
            .map(|q| {
                self.branches
                    .iter()
                    .map(|psi| (0..n).map(|p| psi[(p, q)].norm_sqr()).sum::<f64>())
                    .sum()
            })
            .collect()
    }

    /// Projects mode `b` onto `|m⟩`.
    pub fn herald(&self, m: usize) -> Result<Heralded> {
        if m >= self.cutoff {
            return Err(Error::DimensionMismatch(format!(
                "cannot herald {m} photons with cutoff {}",
                self.cutoff
            )));
        }
        let n = self.cutoff;
        let mut rho = CMatrix::zeros(n, n);
        for psi in &self.branches {
            let v = psi.column(m);
            rho += v * v.adjoint();
        }
        let p_d = rho.trace().re;
        if p_d < HERALD_FLOOR {
            return Ok(Heralded { state: None, p_d });
        }
        let state = FockDensity::new(rho / Complex64::new(p_d, 0.0));
        state.check()?;
        Ok(Heralded {
            state: Some(state),
            p_d,
        })
    }
}

/// Outcome of photon-number detection on mode `b`.
#[derive(Debug, Clone)]
pub struct Heralded {
    /// Normalized conditional state of mode `a`, absent when the event is impossible.
    pub state: Option<FockDensity>,
    pub p_d: f64,
}

/// Full oracle run for one parameter point.
#[derive(Debug, Clone)]
pub struct OracleRun {
    pub cutoff: usize,
    pub p_d: f64,
    pub state: Option<FockDensity>,
    /// Weight discarded by branch pruning.
    pub discarded: f64,
    /// Change against the previous cutoff in an automatic run, zero otherwise.
    pub convergence: f64,
}

/// Stages 1–4 of the circuit at a fixed cutoff.
pub fn simulate_stages(params: &CircuitParams, cutoff: usize) -> Result<[TwoModeState; 4]> {
    let [s1, s2, s3] = first_stages(params, cutoff)?;
    let s4 = s3.apply_loss(Mode::B, params.eta2)?;
    Ok([s1, s2, s3, s4])
}

fn first_stages(params: &CircuitParams, cutoff: usize) -> Result<[TwoModeState; 3]> {
    params.validate()?;
    let s1 = TwoModeState::with_vacuum_b(&squeezed_vacuum(params.r, cutoff)?);
    let s2 = s1.apply_loss(Mode::A, params.eta1)?;
    let s3 = s2.apply_beamsplitter(&BeamSplitter::new(params.transmissivity, cutoff)?)?;
    Ok([s1, s2, s3])
}

/// The heralded state at a fixed cutoff.
///
/// The ancilla loss and the projection onto `|m⟩` are fused: only the Kraus
/// operators `K_j` taking `|m + j⟩` to `|m⟩` contribute, so
/// `ρ ∝ Σₖ Ψₖ W Ψₖ†` with `W = diag(|K_j(m + j)|²)` on column `m + j`.
pub fn simulate(params: &CircuitParams, cutoff: usize) -> Result<OracleRun> {
    let m = params.m as usize;
    if m >= cutoff {
        return Err(Error::DimensionMismatch(format!("cannot herald {m} photons with cutoff {cutoff}")));
    }
    let [_, _, s3] = first_stages(params, cutoff)?;
    let kraus = KrausSet::new(params.eta2, cutoff)?;
    let width = cutoff - m;
    let weights: Vec<f64> = (0..width).map(|j| kraus.coefficient(j, m + j)).collect();
    let mut rho = CMatrix::zeros(cutoff, cutoff);
    for psi in s3.branches() {
        let mut cols = psi.columns(m, width).into_owned();
        for (j, w) in weights.iter().enumerate() {
            cols.column_mut(j).scale_mut(*w);
        }
        rho += &cols * cols.adjoint();
    }
    let p_d = rho.trace().re;
    let state = if p_d < HERALD_FLOOR {
        None
    } else {
        let st = FockDensity::new(rho / Complex64::new(p_d, 0.0));
        st.check()?;
        Some(st)
    };
    Ok(OracleRun {
        cutoff,
        p_d,
        state,
        discarded: s3.discarded(),
        convergence: 0.0,
    })
}

/// Smallest cutoff whose squeezed-vacuum tail above `cutoff − TAIL_GUARD` is
/// below `bound`.
fn cutoff_for_tail(r: f64, bound: f64) -> usize {
    let mut n = TAIL_GUARD;
    while squeezed_vacuum_tail(r, n - TAIL_GUARD) >= bound {
        n += 1;
    }
    n
}

/// Largest change between two runs: relative change of `p_d` and the
/// Frobenius distance of the heralded states, the smaller one zero-padded.
fn run_distance(a: &OracleRun, b: &OracleRun) -> f64 {
    let dp = (a.p_d - b.p_d).abs() / b.p_d.max(HERALD_FLOOR);
    let drho = match (&a.state, &b.state) {
        (Some(x), Some(y)) => {
            let (small, large) = if x.dim() <= y.dim() { (x, y) } else { (y, x) };
            let n = small.dim();
            let mut d = large.matrix().clone();
            let mut block = d.view_mut((0, 0), (n, n));
            block -= small.matrix();
            d.norm()
        }
        (None, None) => 0.0,
        _ => 1.0,
    };
    dp.max(drho)
}

/// Runs [`simulate`] at growing cutoffs until two successive runs agree to
/// [`CONVERGENCE_TOLERANCE`].
///
/// The first cutoff satisfies the input tail criterion, the next one also
/// keeps the truncated input below `TAIL_TOLERANCE · p_d`, and after that the
/// cutoff grows by [`CUTOFF_STEP`].
pub fn simulate_auto(params: &CircuitParams) -> Result<OracleRun> {
    let mut cutoff = required_cutoff(params.r).max(params.m as usize + TAIL_GUARD + 8);
    let mut prev = simulate(params, cutoff)?;
    loop {
        if prev.state.is_none() {
            return Ok(prev);
        }
        let next_cutoff = (cutoff + CUTOFF_STEP)
            .max(cutoff_for_tail(params.r, TAIL_TOLERANCE * prev.p_d))
            .min(MAX_CUTOFF);
        if next_cutoff <= cutoff {
            return Err(Error::CutoffTooSmall {
                cutoff,
                required: cutoff + CUTOFF_STEP,
                tail: prev.convergence,
            });
        }
        let mut next = simulate(params, next_cutoff)?;
        next.convergence = run_distance(&prev, &next);
        if next.convergence < CONVERGENCE_TOLERANCE {
            return Ok(next);
        }
        cutoff = next_cutoff;
        prev = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn vacuum_squeezing() {
        let s = squeezed_vacuum(0.0, 10).unwrap();
        assert_eq!(s, FockState::number(0, 10));
    }

    #[test]
    fn squeezed_vacuum_statistics() {
        let r = 0.5;
        let s = squeezed_vacuum(r, 40).unwrap();
        let l = r.tanh();
        assert!((s.amplitudes()[0].norm_sqr() - (1.0 - l * l).sqrt()).abs() < 1e-15);
        assert!(s.amplitudes().iter().skip(1).step_by(2).all(|a| *a == zero()));
        let rho = squeezed_vacuum(1.0, 100).unwrap().to_density();
        assert!((rho.moment(1, 1).re - 1f64.sinh().powi(2)).abs() < 1e-10);
    }

    #[test]
    fn cutoff_too_small_names_requirement() {
        match squeezed_vacuum(1.0, 40) {
            Err(Error::CutoffTooSmall { required, .. }) => {
                assert!(required > 40);
                assert!(squeezed_vacuum(1.0, required).is_ok());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn kraus_limits() {
        let one = FockState::number(1, 6).to_density();
        let same = one.apply_loss(0.0).unwrap();
        assert_eq!(same, one);
        let gone = FockState::number(3, 6).to_density().apply_loss(1.0).unwrap();
        assert!((gone.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
        let damped = one.apply_loss(0.3).unwrap();
        assert!((damped.matrix()[(1, 1)].re - 0.7).abs() < 1e-15);
        assert!((damped.matrix()[(0, 0)].re - 0.3).abs() < 1e-15);
        assert!(KrausSet::new(1.2, 4).is_err());
    }

    #[test]
    fn kraus_completeness() {
        for eta in [0.0, 0.13, 0.5, 0.99, 1.0] {
            let k = KrausSet::new(eta, 60).unwrap();
            assert!(k.completeness_defect() < 1e-10);
            let mut acc = CMatrix::zeros(60, 60);
            for j in 0..60 {
                let op = k.operator(j);
                acc += op.adjoint() * op;
            }
            assert!((acc - CMatrix::identity(60, 60)).camax() < 1e-10);
        }
    }

    #[test]
    fn beamsplitter_single_photon() {
        let t = 0.7;
        let bs = BeamSplitter::new(t, 4).unwrap();
        let mut psi = CMatrix::zeros(4, 4);
        psi[(1, 0)] = c(1.0);
        let out = bs.apply(&psi);
        assert!((out[(1, 0)].re - t.sqrt()).abs() < 1e-15);
        assert!((out[(0, 1)].re - (1.0 - t).sqrt()).abs() < 1e-15);
        let id = BeamSplitter::new(1.0, 5).unwrap().matrix();
        assert!((id - DMatrix::<f64>::identity(25, 25)).amax() < 1e-15);
    }

    #[test]
    fn beamsplitter_constructions_agree() {
        for t in [0.0, 0.3, 0.9, 1.0] {
            let a = BeamSplitter::new(t, 12).unwrap();
            let b = BeamSplitter::exponentiated(t, 12).unwrap();
            assert!((a.matrix() - b.matrix()).amax() < 1e-10, "T = {t}");
            for total in 0..12 {
                let blk = a.block(total);
                let dim = blk.nrows();
                assert!((blk.transpose() * blk - DMatrix::<f64>::identity(dim, dim)).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn displacement_matches_exponential() {
        let n = 20;
        let big = n + 60;
        for alpha in [Complex64::new(0.3, -0.4), Complex64::new(-1.1, 0.5)] {
            let d = displacement(alpha, n);
            let mut gen = CMatrix::zeros(big, big);
            for k in 1..big {
                let s = (k as f64).sqrt();
                gen[(k, k - 1)] += alpha * s; // α a†
                gen[(k - 1, k)] -= alpha.conj() * s; // −α* a
            }
            let e = gen.exp();
            let diff = (d - e.view((0, 0), (n, n))).camax();
            assert!(diff < 1e-9, "alpha = {alpha}: {diff}");
        }
    }

    #[test]
    fn number_state_wigner() {
        let vac = FockState::number(0, 8).to_density();
        assert!((vac.wigner(0.0, 0.0) - 2.0 / PI).abs() < 1e-14);
        let one = FockState::number(1, 8).to_density();
        assert!((one.wigner(0.0, 0.0) + 2.0 / PI).abs() < 1e-14);
        assert_eq!(vac.pnd()[0], 1.0);
        let v = vac.variances();
        assert!((v.var_x - 0.5).abs() < 1e-15 && (v.var_p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn herald_on_vacuum() {
        let vac = TwoModeState::with_vacuum_b(&FockState::number(0, 6));
        let h = vac.herald(0).unwrap();
        assert_eq!(h.p_d, 1.0);
        assert_eq!(h.state.unwrap().pnd()[0], 1.0);
        let h = vac.herald(1).unwrap();
        assert_eq!(h.p_d, 0.0);
        assert!(h.state.is_none());
        assert!(vac.herald(6).is_err());
    }
}
