//! `knudsen`: command-line driver for the stochastic billiard laboratory.
//!
//! Exit codes: 0 on success, 1 for configuration and I/O problems, 2 when the
//! numerics fail (suspected escape, non-convergence).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::result_large_err)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{Levels, Window};

#[derive(Debug, Parser)]
#[command(
    name = "knudsen",
    version,
    about = "Monte Carlo experiments on random-reflection billiards in planar tubes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the collision chain; writes running maxima and optionally the path.
    Simulate(SimulateArgs),
    /// Estimate the first two jump moments on a grid of levels.
    Moments(MomentsArgs),
    /// Classify recurrence for a tube exponent and reflection law.
    Classify(ClassifyArgs),
    /// Fit the growth exponent of a maxima file.
    Exponent(ExponentArgs),
    /// Simulate a synthetic one-dimensional chain.
    Chain(ChainArgs),
    /// Check the drift conditions on the rescaled process.
    Criteria(CriteriaArgs),
    /// Tabulate first-passage times to a set of levels.
    Passage(PassageArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// `key = value` file supplying defaults for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $KNUDSEN_OUT_DIR, else the current directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed; replica r draws from stream r of this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (outputs do not depend on this).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BilliardArgs {
    /// Tube boundary: power:<gamma>, logpow:<k> or const:<c>.
    #[arg(long)]
    pub tube: Option<String>,
    /// Reflection law: uniform:<alpha0>, twopoint:<a> or degenerate.
    #[arg(long)]
    pub law: Option<String>,
    /// Calibration point: the tube is closed by a wall at x = A.
    #[arg(long = "A", id = "A")]
    pub a: Option<f64>,
    /// Starting x on the upper boundary (default 4A).
    #[arg(long)]
    pub x_start: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub billiard: BilliardArgs,
    /// Number of collisions.
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub replicas: Option<u64>,
    /// Also write the full collision sequence.
    #[arg(long)]
    pub trajectory: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Xi,
    Zeta,
}

impl std::str::FromStr for ScaleArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub billiard: BilliardArgs,
    #[arg(long, value_enum)]
    pub scale: Option<ScaleArg>,
    /// Levels as a,b,c or a log-spaced grid lo:hi:n.
    #[arg(long)]
    pub levels: Option<Levels>,
    /// Single-jump samples per level.
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub tube: Option<String>,
    #[arg(long)]
    pub law: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Discrete,
    Continuous,
}

impl std::str::FromStr for ModeArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Args)]
pub struct ExponentArgs {
    #[command(flatten)]
    pub common: Common,
    /// Maxima CSV written by `simulate` or `chain`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Fit window as log2 bounds lo:hi.
    #[arg(long)]
    pub window: Option<Window>,
    /// Override the annotated target exponent.
    #[arg(long)]
    pub target: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RecordArg {
    Dyadic,
    Full,
}

impl std::str::FromStr for RecordArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    #[command(flatten)]
    pub common: Common,
    /// bd:kappa=<k>,alpha=<a>[,h=<h>], reflected or srwnorm:d=<d>.
    #[arg(long)]
    pub chain: Option<String>,
    #[arg(long)]
    pub x_start: Option<f64>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub replicas: Option<u64>,
    #[arg(long, value_enum)]
    pub record: Option<RecordArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    Analytic,
    Empirical,
}

impl std::str::FromStr for SourceArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Args)]
pub struct CriteriaArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub billiard: BilliardArgs,
    /// Exact moment formulas or Monte Carlo estimates.
    #[arg(long, value_enum)]
    pub source: Option<SourceArg>,
    /// ζ-levels as a,b,c or lo:hi:n.
    #[arg(long)]
    pub levels: Option<Levels>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub c_upper: Option<f64>,
    #[arg(long)]
    pub kappa_upper: Option<f64>,
    #[arg(long)]
    pub kappa_lower: Option<f64>,
    #[arg(long)]
    pub v_floor: Option<f64>,
    /// Standard-error multiplier for estimated moments.
    #[arg(long)]
    pub z: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PassageArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub billiard: BilliardArgs,
    /// Use a synthetic chain instead of the billiard.
    #[arg(long)]
    pub chain: Option<String>,
    #[arg(long)]
    pub levels: Option<Levels>,
    #[arg(long)]
    pub replicas: Option<u64>,
    /// Step horizon per replica.
    #[arg(long)]
    pub steps: Option<u64>,
    /// Billiard only: count collisions or path length.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numeric(String),
}

impl RunError {
    fn code(&self) -> u8 {
        match self {
            RunError::Config(_) => 1,
            RunError::Numeric(_) => 2,
        }
    }
}

impl From<config::ConfigError> for RunError {
    fn from(e: config::ConfigError) -> Self {
        RunError::Config(e.0)
    }
}

impl From<knudsen::Error> for RunError {
    fn from(e: knudsen::Error) -> Self {
        if e.is_numeric() {
            RunError::Numeric(e.to_string())
        } else {
            RunError::Config(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, msg) = match &e {
                RunError::Config(m) => ("error", m),
                RunError::Numeric(m) => ("numerical failure", m),
            };
            eprintln!("knudsen: {kind}: {msg}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_failures_get_their_own_exit_code() {
        let escape = knudsen::Error::EscapeSuspected {
            x_origin: 1e6,
            s_max: 1e9,
        };
        assert_eq!(RunError::from(escape).code(), 2);
        let bad = knudsen::Error::InvalidTube("x".into());
        assert_eq!(RunError::from(bad).code(), 1);
    }
}
