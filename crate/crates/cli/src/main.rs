//! `mssvs`: evaluate, sweep and validate lossy multiphoton subtraction from
//! squeezed vacuum.

mod error;
mod output;
mod params;
mod point;
mod spec;
mod sweep;
mod threshold;
mod validate;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "mssvs", version, about = "Conditional photon subtraction from squeezed vacuum with loss")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Observables of the heralded state at one parameter point, as JSON.
    Point(point::PointArgs),
    /// Evaluate observables over a parameter grid described by a spec file, as CSV.
    Sweep(sweep::SweepArgs),
    /// Compare the closed forms against the Fock-space simulation.
    Validate(validate::ValidateArgs),
    /// Squeezing threshold r_c in the squeezing parameter, as JSON.
    Threshold(threshold::ThresholdArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Point(a) => point::run(a),
        Command::Sweep(a) => sweep::run(a),
        Command::Validate(a) => validate::run(a),
        Command::Threshold(a) => threshold::run(a),
    };
    if let Err(e) = result {
        eprintln!("mssvs: {e}");
        std::process::exit(e.exit_code());
    }
}
