use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "qcmap", version, about = "Quasiconformal map verification and orbit realization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a verification suite and report every bound it checks.
    Verify(VerifyArgs),
    /// Build the shell map for a target file and trace its orbit curve.
    Realize(RealizeArgs),
    /// Tabulate rescalings f_t over a grid for a sequence of scales t.
    Probe(ProbeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Zorich,
    Stretch,
    Interp,
    Spiral,
    Bilipschitz,
}

impl From<SuiteArg> for qcmap::verify::Suite {
    fn from(s: SuiteArg) -> Self {
        use qcmap::verify::Suite;
        match s {
            SuiteArg::Zorich => Suite::Zorich,
            SuiteArg::Stretch => Suite::Stretch,
            SuiteArg::Interp => Suite::Interp,
            SuiteArg::Spiral => Suite::Spiral,
            SuiteArg::Bilipschitz => Suite::Bilipschitz,
        }
    }
}

/// `auto` or a numeric spiral rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Alpha {
    Auto,
    Value(f64),
}

impl FromStr for Alpha {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Alpha::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Alpha::Value(v)),
            _ => Err(format!("expected `auto` or a finite number, got {s:?}")),
        }
    }
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: SuiteArg,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long = "K", default_value_t = 2.0)]
    pub k: f64,
    #[arg(long = "L", default_value_t = 3.0)]
    pub l: f64,
    #[arg(long, default_value = "auto")]
    pub alpha: Alpha,
    /// Points per axis (defaults: 200 for bilipschitz, 33 otherwise).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Random samples per sampled check.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Replaces the tolerance of every numerical-agreement check.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Replaces the upper bound of every analytic-bound check.
    #[arg(long)]
    pub bound: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RealizeArgs {
    /// Target JSON: {"waypoints": [[...], ...], "closed": bool, "C": number}.
    pub target: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub k_max: usize,
    /// Orbit samples per shell piece.
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    /// Points per axis of the spiral-rate certification grid.
    #[arg(long, default_value_t = 33)]
    pub grid: usize,
    /// Checkpoint tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Seed for the interface-continuity sample.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Expected dimension; must match the target file when given.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Orbit CSV path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary JSON path (defaults next to --out).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProbeMapArg {
    Stretch,
    Rotation,
    Spiral,
    Realized,
}

#[derive(Args, Debug)]
pub struct ProbeArgs {
    #[arg(value_enum)]
    pub map: ProbeMapArg,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long = "K", default_value_t = 2.0)]
    pub k: f64,
    #[arg(long, default_value = "auto")]
    pub alpha: Alpha,
    /// Rotation angle for the rotation map.
    #[arg(long, default_value_t = 0.7)]
    pub theta: f64,
    /// Target file for the realized map.
    #[arg(long)]
    pub target: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub k_max: usize,
    /// Scales t (comma separated, all positive).
    #[arg(long = "t", value_delimiter = ',', default_value = "1,1e-1,1e-2,1e-3,1e-4,1e-5,1e-6,1e-7")]
    pub t: Vec<f64>,
    /// Grid points per axis over [-1, 1]^n.
    #[arg(long, default_value_t = 8)]
    pub grid: usize,
    /// Slices count as identical when their max distance is at most this.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
