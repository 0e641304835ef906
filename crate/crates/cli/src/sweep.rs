use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::Args;
use mssvs::{CircuitParams, ConditionalState};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, write_atomically, Metadata};
use crate::spec::{self, Observable, Param, SweepSpec};
use crate::threshold;

pub const DEFAULT_MAX_POINTS: usize = 1_000_000;

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep specification file.
    pub spec: PathBuf,
    /// Destination CSV file, written atomically; standard output if omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: Option<u32>,
    /// Refuse sweeps with more points than this.
    #[arg(long, default_value_t = DEFAULT_MAX_POINTS)]
    pub max_points: usize,
    /// Omit the timestamp metadata line.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u32),
    Text(&'static str),
    Null,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Self::Num(v) => fmt_f64(*v),
            Self::Int(v) => v.to_string(),
            Self::Text(s) => (*s).to_string(),
            Self::Null => String::new(),
        }
    }
}

fn columns(spec: &SweepSpec) -> Vec<String> {
    let mut cols: Vec<String> = [Param::R, Param::Eta1, Param::Eta2, Param::T, Param::M]
        .iter()
        .map(|p| p.name().to_string())
        .collect();
    if spec.wants(Observable::Wigner) {
        cols.extend(["x".to_string(), "y".to_string()]);
    }
    for o in &spec.observables {
        match o {
            Observable::Prob => cols.push("p_d".into()),
            Observable::Variances => cols.extend(["var_x".into(), "var_p".into()]),
            Observable::Threshold => cols.extend(["r_c".into(), "threshold_kind".into()]),
            Observable::Pnd => cols.extend((0..=spec.pnd_max).map(|n| format!("pnd_{n}"))),
            Observable::Wigner => cols.push("w".into()),
        }
    }
    cols
}

/// Parameter values of row `index`, lexicographic over the axes in declaration order.
fn row_values(spec: &SweepSpec, index: usize) -> HashMap<Param, f64> {
    let mut values: HashMap<Param, f64> = Param::ALL
        .iter()
        .filter_map(|p| spec.fixed(*p).map(|v| (*p, v)))
        .collect();
    let mut rest = index;
    for (p, xs) in spec.axes().iter().rev() {
        values.insert(*p, xs[rest % xs.len()]);
        rest /= xs.len();
    }
    values
}

type ThresholdKey = (u32, u64, u64, u64);

fn threshold_key(v: &HashMap<Param, f64>) -> ThresholdKey {
    (v[&Param::M] as u32, v[&Param::T].to_bits(), v[&Param::Eta1].to_bits(), v[&Param::Eta2].to_bits())
}

fn evaluate_row(
    spec: &SweepSpec,
    index: usize,
    thresholds: &HashMap<ThresholdKey, (Option<f64>, &'static str)>,
) -> CliResult<Vec<Cell>> {
    let v = row_values(spec, index);
    let params = CircuitParams::new(v[&Param::R], v[&Param::Eta1], v[&Param::Eta2], v[&Param::T], v[&Param::M] as u32)?;
    let mut row: Vec<Cell> = [params.r, params.eta1, params.eta2, params.transmissivity]
        .into_iter()
        .map(Cell::Num)
        .collect();
    row.push(Cell::Int(params.m));
    if spec.wants(Observable::Wigner) {
        row.extend([Cell::Num(v[&Param::X]), Cell::Num(v[&Param::Y])]);
    }
    let state = ConditionalState::new(&params)?;
    let defined = state.is_defined();
    for o in &spec.observables {
        match o {
            Observable::Prob => row.push(Cell::Num(state.success_probability())),
            Observable::Variances => {
                if defined {
                    let q = state.variances()?;
                    row.extend([Cell::Num(q.var_x), Cell::Num(q.var_p)]);
                } else {
                    row.extend([Cell::Null, Cell::Null]);
                }
            }
            Observable::Threshold => {
                let (r_c, kind) = thresholds[&threshold_key(&v)];
                row.push(r_c.map_or(Cell::Null, Cell::Num));
                row.push(Cell::Text(kind));
            }
            Observable::Pnd => {
                if defined {
                    row.extend(state.pnd_upto(spec.pnd_max)?.into_iter().map(Cell::Num));
                } else {
                    row.extend(std::iter::repeat_n(Cell::Null, spec.pnd_max + 1));
                }
            }
            Observable::Wigner => {
                row.push(if defined {
                    Cell::Num(state.wigner(v[&Param::X], v[&Param::Y])?.w)
                } else {
                    Cell::Null
                });
            }
        }
    }
    Ok(row)
}

/// Evaluates every row of the sweep in parallel; rows come back in order.
pub fn evaluate(spec: &SweepSpec) -> CliResult<Vec<Vec<Cell>>> {
    let rows = spec.row_count().unwrap_or(usize::MAX);
    let mut thresholds = HashMap::new();
    if spec.wants(Observable::Threshold) {
        let mut keys: Vec<ThresholdKey> = (0..rows).map(|i| threshold_key(&row_values(spec, i))).collect();
        keys.sort_unstable();
        keys.dedup();
        let values = keys
            .par_iter()
            .map(|&(m, t, e1, e2)| {
                threshold::evaluate(m, f64::from_bits(t), f64::from_bits(e1), f64::from_bits(e2))
            })
            .collect::<mssvs::Result<Vec<_>>>()?;
        thresholds = keys.into_iter().zip(values).collect();
    }
    (0..rows)
        .into_par_iter()
        .map(|i| evaluate_row(spec, i, &thresholds))
        .collect()
}

pub fn render(spec: &SweepSpec, rows: &[Vec<Cell>], source: &str, metadata: &Metadata) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} {}", metadata.tool, metadata.version);
    if let Some(ts) = &metadata.timestamp {
        let _ = writeln!(out, "# generated {ts}");
    }
    let _ = writeln!(out, "# source {source}");
    let _ = writeln!(out, "# rows {}", rows.len());
    let _ = writeln!(out, "# evaluation closed-form (no Fock cutoff)");
    let _ = writeln!(
        out,
        "# tolerances threshold_r {:.0e}, pnd_tail {:.0e}",
        1e-6,
        1.0 - mssvs::observables::PND_TARGET
    );
    let _ = writeln!(out, "{}", columns(spec).join(","));
    for row in rows {
        let cells: Vec<String> = row.iter().map(Cell::render).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

pub fn run(args: &SweepArgs) -> CliResult<()> {
    let source = std::fs::read_to_string(&args.spec)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.spec.display())))?;
    let spec = spec::parse(&source).map_err(|e| CliError::Usage(format!("{}: {e}", args.spec.display())))?;
    match spec.row_count() {
        Some(n) if n <= args.max_points => {}
        n => {
            return Err(CliError::Capacity(format!(
                "sweep has {} points, more than the cap of {}",
                n.map_or("too many".to_string(), |n| n.to_string()),
                args.max_points
            )))
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0) as usize)
        .build()
        .map_err(|e| CliError::Failure(e.to_string()))?;
    let rows = pool.install(|| evaluate(&spec))?;
    let name = args
        .spec
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let text = render(&spec, &rows, &name, &Metadata::new(!args.no_timestamp));
    match &args.output {
        Some(path) => write_atomically(path, text.as_bytes()),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
