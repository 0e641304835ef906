use clap::Args;
use mssvs::squeezing_threshold;
use serde::Serialize;

use crate::error::CliResult;
use crate::output::{print_json, Metadata};
use crate::params::CircuitArgs;

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    /// Omit the timestamp from the metadata.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Serialize)]
struct ThresholdOut {
    m: u32,
    #[serde(rename = "T")]
    transmissivity: f64,
    eta1: f64,
    eta2: f64,
    r_c: Option<f64>,
    discriminator: &'static str,
    metadata: Metadata,
}

/// Threshold and its discriminator; a herald that never fires has no threshold.
pub fn evaluate(m: u32, transmissivity: f64, eta1: f64, eta2: f64) -> mssvs::Result<(Option<f64>, &'static str)> {
    match squeezing_threshold(m, transmissivity, eta1, eta2) {
        Ok(t) => Ok((t.value(), t.label())),
        Err(mssvs::Error::UndefinedState { .. }) => Ok((None, HERALD_IMPOSSIBLE)),
        Err(e) => Err(e),
    }
}

pub const HERALD_IMPOSSIBLE: &str = "herald-impossible";

pub fn run(args: &ThresholdArgs) -> CliResult<()> {
    let c = &args.circuit;
    let (r_c, discriminator) = evaluate(c.m, c.transmissivity, c.eta1, c.eta2)?;
    print_json(&ThresholdOut {
        m: c.m,
        transmissivity: c.transmissivity,
        eta1: c.eta1,
        eta2: c.eta2,
        r_c,
        discriminator,
        metadata: Metadata::new(!args.no_timestamp),
    })
}
