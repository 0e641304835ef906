use clap::Args;
use mssvs::observables::grid_coordinates;
use mssvs::{CircuitParams, ConditionalState};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::{print_json, Metadata};
use crate::params::positive;
use crate::point::{CutoffChoice, ParamsOut};

/// Photon numbers compared by `validate`.
const PND_COMPARED: usize = 10;
/// Wigner comparison grid: `WIGNER_RES²` points over `[−WIGNER_HALF, WIGNER_HALF]²`.
const WIGNER_RES: usize = 5;
const WIGNER_HALF: f64 = 2.0;
/// Values below this are compared in absolute terms.
const ABSOLUTE_BELOW: f64 = 1e-2;

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// `standard` for the built-in 72-point grid, or a file with one
    /// `r T eta1 eta2 m` point per line.
    #[arg(long, default_value = "standard")]
    pub grid: String,
    /// Largest accepted deviation, relative (absolute for values below 1e-2).
    #[arg(long, default_value_t = 1e-6, value_parser = positive)]
    pub tolerance: f64,
    /// Fock cutoff of the oracle ("auto" escalates until converged).
    #[arg(long, default_value = "auto", value_name = "N|auto")]
    pub cutoff: CutoffChoice,
    /// Worker threads (default: all cores).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: Option<u32>,
    /// Omit the timestamp from the metadata.
    #[arg(long)]
    pub no_timestamp: bool,
}

pub fn standard_grid() -> Vec<CircuitParams> {
    let mut out = Vec::new();
    for r in [0.3, 0.7, 1.0] {
        for t in [0.8, 0.97] {
            for (e1, e2) in [(0.0, 0.0), (0.1, 0.1), (0.3, 0.05)] {
                for m in 0..=3 {
                    out.push(CircuitParams::new(r, e1, e2, t, m).expect("standard grid is in domain"));
                }
            }
        }
    }
    out
}

fn parse_grid(path: &str) -> CliResult<Vec<CircuitParams>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        let bad = |msg: String| CliError::Usage(format!("{path}: line {}: {msg}", i + 1));
        if fields.len() != 5 {
            return Err(bad(format!("expected `r T eta1 eta2 m`, found {} fields", fields.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("`{s}` is not a number")));
        let m = fields[4].parse::<u32>().map_err(|_| bad(format!("`{}` is not a photon number", fields[4])))?;
        let p = CircuitParams::new(num(fields[0])?, num(fields[2])?, num(fields[3])?, num(fields[1])?, m)
            .map_err(|e| bad(e.to_string()))?;
        out.push(p);
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!("{path}: the grid contains no points")));
    }
    Ok(out)
}

fn deviation(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(ABSOLUTE_BELOW)
}

#[derive(Debug, Serialize)]
struct Deviations {
    p_d: f64,
    pnd: Option<f64>,
    variances: Option<f64>,
    wigner: Option<f64>,
}

#[derive(Debug, Serialize)]
struct PointReport {
    params: ParamsOut,
    cutoff: usize,
    p_d: f64,
    deviation: Deviations,
    max_deviation: f64,
    pass: bool,
}

fn check_point(p: &CircuitParams, cutoff: CutoffChoice, tol: f64) -> CliResult<PointReport> {
    let state = ConditionalState::new(p)?;
    let run = cutoff.run(p)?;
    let mut dev = Deviations {
        p_d: deviation(state.success_probability(), run.p_d),
        pnd: None,
        variances: None,
        wigner: None,
    };
    match (&run.state, state.is_defined()) {
        (Some(rho), true) => {
            let pnd = state.pnd_upto(PND_COMPARED)?;
            let pnd_o = rho.pnd();
            dev.pnd = Some((0..=PND_COMPARED).map(|n| deviation(pnd[n], pnd_o.get(n).copied().unwrap_or(0.0))).fold(0.0, f64::max));
            let v = state.variances()?;
            let vo = rho.variances();
            dev.variances = Some(deviation(v.var_x, vo.var_x).max(deviation(v.var_p, vo.var_p)));
            let mut w: f64 = 0.0;
            for (x, y) in grid_coordinates((-WIGNER_HALF, WIGNER_HALF), (-WIGNER_HALF, WIGNER_HALF), WIGNER_RES) {
                w = w.max(deviation(state.wigner(x, y)?.w, rho.wigner(x, y)));
            }
            dev.wigner = Some(w);
        }
        (None, false) => {}
        // one side heralds, the other does not
        _ => dev.p_d = f64::INFINITY,
    }
    let max_deviation = [Some(dev.p_d), dev.pnd, dev.variances, dev.wigner]
        .into_iter()
        .flatten()
        .fold(0.0, f64::max);
    Ok(PointReport {
        params: p.into(),
        cutoff: run.cutoff,
        p_d: run.p_d,
        pass: max_deviation <= tol,
        max_deviation,
        deviation: dev,
    })
}

#[derive(Debug, Serialize)]
struct Report {
    grid: String,
    tolerance: f64,
    points: Vec<PointReport>,
    failures: usize,
    pass: bool,
    metadata: Metadata,
}

pub fn run(args: &ValidateArgs) -> CliResult<()> {
    let grid = if args.grid == "standard" {
        standard_grid()
    } else {
        parse_grid(&args.grid)?
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0) as usize)
        .build()
        .map_err(|e| CliError::Failure(e.to_string()))?;
    let points = pool.install(|| {
        grid.par_iter()
            .map(|p| check_point(p, args.cutoff, args.tolerance))
            .collect::<CliResult<Vec<_>>>()
    })?;
    let failures = points.iter().filter(|p| !p.pass).count();
    let report = Report {
        grid: args.grid.clone(),
        tolerance: args.tolerance,
        failures,
        pass: failures == 0,
        points,
        metadata: Metadata::new(!args.no_timestamp),
    };
    print_json(&report)?;
    if failures > 0 {
        let offending: Vec<String> = report
            .points
            .iter()
            .filter(|p| !p.pass)
            .map(|p| {
                format!(
                    "r={} T={} eta1={} eta2={} m={} (max deviation {:e})",
                    p.params.r, p.params.transmissivity, p.params.eta1, p.params.eta2, p.params.m, p.max_deviation
                )
            })
            .collect();
        return Err(CliError::Failure(format!(
            "{failures} of {} points exceed tolerance {:e}:\n  {}",
            report.points.len(),
            args.tolerance,
            offending.join("\n  ")
        )));
    }
    Ok(())
}
