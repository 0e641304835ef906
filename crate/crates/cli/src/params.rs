//! Flag parsing with domain checks, so that a bad value is reported by clap
//! against the offending flag.

use clap::Args;
use mssvs::CircuitParams;

pub fn squeezing(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() || v < 0.0 {
        return Err("must be a finite number ≥ 0".into());
    }
    if 1.0 - v.tanh().powi(2) <= 0.0 {
        return Err("too large: tanh(r) rounds to 1".into());
    }
    Ok(v)
}

pub fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err("must lie in [0, 1]".into())
    }
}

pub fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err("must be a finite number > 0".into())
    }
}

/// Largest photon number accepted for heralding.
pub const MAX_HERALD: u32 = 40;

pub fn herald(s: &str) -> Result<u32, String> {
    let v: u32 = s.parse().map_err(|_| format!("`{s}` is not a non-negative integer"))?;
    if v <= MAX_HERALD {
        Ok(v)
    } else {
        Err(format!("must be at most {MAX_HERALD}"))
    }
}

/// Circuit parameters shared by `point` and `threshold`.
#[derive(Debug, Clone, Args)]
pub struct CircuitArgs {
    /// Beam-splitter transmissivity.
    #[arg(long = "T", value_name = "T", value_parser = unit_interval)]
    pub transmissivity: f64,
    /// Loss on the signal mode before the beam splitter.
    #[arg(long, default_value_t = 0.0, value_parser = unit_interval)]
    pub eta1: f64,
    /// Loss on the ancilla mode before detection.
    #[arg(long, default_value_t = 0.0, value_parser = unit_interval)]
    pub eta2: f64,
    /// Number of heralded photons.
    #[arg(long, value_parser = herald)]
    pub m: u32,
}

impl CircuitArgs {
    pub fn with_r(&self, r: f64) -> mssvs::Result<CircuitParams> {
        CircuitParams::new(r, self.eta1, self.eta2, self.transmissivity, self.m)
    }
}
