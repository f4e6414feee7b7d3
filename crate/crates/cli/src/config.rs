//! Command-line arguments and the serializable run configuration echoed in
//! every report.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use seqdisc::online::Task;

#[derive(Debug, Parser)]
#[command(name = "seqdisc", version, about = "Global and online discrimination of symmetric pure states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Global optimum for the ensemble and number of copies.
    Bounds {
        #[command(flatten)]
        config: EnsembleArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Build the first measurement of the online protocol.
    Povm {
        #[command(flatten)]
        config: PovmConfig,
        /// Also write the bare POVM document to this path.
        #[arg(long, value_name = "PATH")]
        dump_povm: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exact value of the online chain, with the switching-step report.
    Chain {
        #[command(flatten)]
        config: EnsembleArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo run of the online chain.
    Simulate {
        #[command(flatten)]
        config: SimulateConfig,
        /// Write per-step traces as JSON lines to this path.
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Online versus global success over a polar grid of three-state overlaps.
    Scan {
        #[command(flatten)]
        config: ScanConfig,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Replay the `config` object of an earlier report.
    Run {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskArg {
    MinError,
    ZeroError,
}

impl From<TaskArg> for Task {
    fn from(task: TaskArg) -> Self {
        match task {
            TaskArg::MinError => Task::MinError,
            TaskArg::ZeroError => Task::ZeroError,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output format; `scan` defaults to csv, everything else to json.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EnsembleArgs {
    #[arg(long, value_enum, default_value_t = TaskArg::ZeroError)]
    pub task: TaskArg,
    /// Number of states (2 or 3).
    #[arg(long, default_value_t = 2)]
    pub r: usize,
    /// Overlap: decimal, `p/q` (exact), or `s@theta`. `chain` and `simulate`
    /// also take a comma-separated list, one overlap per copy.
    #[arg(long, allow_hyphen_values = true)]
    pub c: String,
    /// Comma-separated priors; uniform when omitted.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priors: Option<String>,
    /// Number of copies.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    Helstrom,
    BinaryUnambiguous,
    TrineUnambiguous,
    TrineExclusion,
    IdentifyOrExclude,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PovmConfig {
    #[command(flatten)]
    #[serde(flatten)]
    pub ensemble: EnsembleArgs,
    /// Construction to use instead of the protocol's first measurement.
    #[arg(long, value_enum)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<KindArg>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateConfig {
    #[command(flatten)]
    #[serde(flatten)]
    pub ensemble: EnsembleArgs,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of leading trials kept for `--trace`.
    #[arg(long, default_value_t = 100)]
    pub keep_traces: u64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Number of copies.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Radial grid points; radii are `(j + 1) / radial`, scaled by `s_max` on a slice.
    #[arg(long, default_value_t = 60)]
    pub radial: usize,
    /// Angular grid points over a full turn; ignored on a slice.
    #[arg(long, default_value_t = 60)]
    pub angular: usize,
    /// Scan the single direction `theta` (radians, or forms like `2pi/3`)
    /// instead of the full plane.
    #[arg(long, allow_hyphen_values = true, value_parser = crate::input::parse_angle)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Largest radius on a slice; defaults to the physical boundary.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<f64>,
    /// Extra optimizer restarts per cell.
    #[arg(long, default_value_t = 2)]
    pub restarts: usize,
}

/// Everything needed to reproduce a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Bounds(EnsembleArgs),
    Povm(PovmConfig),
    Chain(EnsembleArgs),
    Simulate(SimulateConfig),
    Scan(ScanConfig),
}

impl RunConfig {
    pub fn default_format(&self) -> Format {
        match self {
            RunConfig::Scan(_) => Format::Csv,
            _ => Format::Json,
        }
    }
}
