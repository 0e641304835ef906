use clap::Args;
use mssvs::fock;
use mssvs::observables::grid_coordinates;
use mssvs::ConditionalState;
use serde::Serialize;

use crate::error::CliResult;
use crate::output::{print_json, Metadata};
use crate::params::{positive, squeezing, CircuitArgs};

#[derive(Debug, Args)]
pub struct PointArgs {
    /// Squeezing parameter of the input state.
    #[arg(long, value_parser = squeezing)]
    pub r: f64,
    #[command(flatten)]
    pub circuit: CircuitArgs,
    /// Resolution of an optional square Wigner grid.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u32).range(2..=1001))]
    pub wigner_grid: Option<u32>,
    /// Half-width of the Wigner grid, which covers [−range, range]².
    #[arg(long, default_value_t = 3.0, value_parser = positive)]
    pub range: f64,
    /// Also run the Fock-space simulation at this cutoff ("auto" escalates as needed).
    #[arg(long, value_name = "N|auto")]
    pub cutoff: Option<CutoffChoice>,
    /// Omit the timestamp from the metadata.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CutoffChoice {
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for CutoffChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if (8..=fock::MAX_CUTOFF).contains(&n) => Ok(Self::Fixed(n)),
            _ => Err(format!("expected `auto` or an integer in [8, {}]", fock::MAX_CUTOFF)),
        }
    }
}

impl CutoffChoice {
    pub fn run(self, params: &mssvs::CircuitParams) -> mssvs::Result<fock::OracleRun> {
        match self {
            Self::Auto => fock::simulate_auto(params),
            Self::Fixed(n) => fock::simulate(params, n),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ParamsOut {
    pub r: f64,
    #[serde(rename = "T")]
    pub transmissivity: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub m: u32,
}

impl From<&mssvs::CircuitParams> for ParamsOut {
    fn from(p: &mssvs::CircuitParams) -> Self {
        Self {
            r: p.r,
            transmissivity: p.transmissivity,
            eta1: p.eta1,
            eta2: p.eta2,
            m: p.m,
        }
    }
}

#[derive(Debug, Serialize)]
struct WignerOut {
    range: f64,
    resolution: u32,
    coordinates: Vec<f64>,
    /// `w[i][j] = W(coordinates[i], coordinates[j])`.
    w: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
struct OracleOut {
    cutoff: usize,
    p_d: f64,
    var_x: Option<f64>,
    var_p: Option<f64>,
    pnd: Option<Vec<f64>>,
}

#[derive(Debug, Serialize)]
struct PointOut {
    params: ParamsOut,
    p_d: f64,
    var_x: Option<f64>,
    var_p: Option<f64>,
    pnd: Option<Vec<f64>>,
    pnd_tail: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wigner: Option<Option<WignerOut>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleOut>,
    metadata: Metadata,
}

pub fn run(args: &PointArgs) -> CliResult<()> {
    let params = args.circuit.with_r(args.r)?;
    let state = ConditionalState::new(&params)?;
    let mut out = PointOut {
        params: (&params).into(),
        p_d: state.success_probability(),
        var_x: None,
        var_p: None,
        pnd: None,
        pnd_tail: None,
        wigner: args.wigner_grid.map(|_| None),
        oracle: None,
        metadata: Metadata::new(!args.no_timestamp),
    };
    if state.is_defined() {
        let v = state.variances()?;
        let pnd = state.pnd_adaptive()?;
        out.var_x = Some(v.var_x);
        out.var_p = Some(v.var_p);
        out.pnd_tail = Some(pnd.tail);
        out.pnd = Some(pnd.probabilities);
        if let Some(res) = args.wigner_grid {
            let n = res as usize;
            let range = (-args.range, args.range);
            let points = state.wigner_grid(range, range, n)?;
            let coordinates = grid_coordinates(range, range, n).iter().step_by(n).map(|c| c.0).collect();
            let w = points.chunks(n).map(|row| row.iter().map(|p| p.w).collect()).collect();
            out.wigner = Some(Some(WignerOut {
                range: args.range,
                resolution: res,
                coordinates,
                w,
            }));
        }
    }
    if let Some(choice) = args.cutoff {
        let run = choice.run(&params)?;
        let (var_x, var_p, pnd) = match &run.state {
            Some(rho) => {
                let v = rho.variances();
                (Some(v.var_x), Some(v.var_p), Some(rho.pnd()))
            }
            None => (None, None, None),
        };
        out.oracle = Some(OracleOut {
            cutoff: run.cutoff,
            p_d: run.p_d,
            var_x,
            var_p,
            pnd,
        });
    }
    print_json(&out)
}
