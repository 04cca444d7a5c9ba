use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use comd_core::solver::{OmegaInit, SweepOrder, WienerForm};
use comd_core::ModeKind;

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Orthogonal mode decomposition toolkit.
#[derive(Debug, Parser)]
#[command(name = "comd", version, propagate_version = true)]
pub struct Cli {
    /// `key = value` defaults, keys spelled like the flags with underscores (`tau_lambda = 1`); flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Seed for every random draw [default: 20240601]
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a JSON recipe to a CSV with the mixture and each component
    Synth(SynthArgs),
    /// Decompose one channel into K modes
    Decompose(DecomposeArgs),
    /// Print the Gram matrix of a mode file
    Gram(GramArgs),
    /// Choose K by grid search
    SelectK(SelectKArgs),
    /// Sliding-window benchmark over a directory of traces
    Bench(BenchArgs),
    /// Decompose a channel under increasing noise levels
    SnrSweep(SnrSweepArgs),
    /// Write per-window mode files for every channel of a trace
    ExportForPredictor(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Vmd,
    ComdPenalty,
    Comd,
}

impl Method {
    pub fn kind(self) -> ModeKind {
        match self {
            Method::Vmd => ModeKind::VmdBaseline,
            Method::ComdPenalty => ModeKind::ComdPenaltyOnly,
            Method::Comd => ModeKind::ComdProjected,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Vmd => "vmd",
            Method::ComdPenalty => "comd-penalty",
            Method::Comd => "comd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    SpectralPeaks,
    UniformSpread,
    Zeros,
}

impl From<InitArg> for OmegaInit {
    fn from(v: InitArg) -> Self {
        match v {
            InitArg::SpectralPeaks => OmegaInit::SpectralPeaks,
            InitArg::UniformSpread => OmegaInit::UniformSpread,
            InitArg::Zeros => OmegaInit::Zeros,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    GaussSeidel,
    Jacobi,
}

impl From<OrderArg> for SweepOrder {
    fn from(v: OrderArg) -> Self {
        match v {
            OrderArg::GaussSeidel => SweepOrder::GaussSeidel,
            OrderArg::Jacobi => SweepOrder::Jacobi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Classic,
    Inverted,
}

impl From<FormArg> for WienerForm {
    fn from(v: FormArg) -> Self {
        match v {
            FormArg::Classic => WienerForm::Classic,
            FormArg::Inverted => WienerForm::Inverted,
        }
    }
}

/// Solver knobs shared by every decomposing subcommand. Unset flags fall
/// back to the config file, then to the library defaults.
#[derive(Debug, Clone, Default, Args)]
#[command(next_help_heading = "Solver")]
pub struct SolverArgs {
    /// Bandwidth penalty [default: 2000]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Orthogonality coupling weight [default: 1]
    #[arg(long)]
    pub beta: Option<f64>,
    /// Dual step for the reconstruction multiplier [default: 1]
    #[arg(long)]
    pub tau_lambda: Option<f64>,
    /// Dual step for the orthogonality multipliers [default: 0.01]
    #[arg(long)]
    pub tau_gamma: Option<f64>,
    /// Relative-change stopping tolerance [default: 1e-7]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Sweep budget [default: 500]
    #[arg(long, value_name = "N")]
    pub max_iters: Option<usize>,
    /// Project every N sweeps [default: 5]
    #[arg(long, value_name = "N")]
    pub ns_every: Option<usize>,
    /// Newton-Schulz tolerance [default: 1e-8]
    #[arg(long)]
    pub ns_tol: Option<f64>,
    /// Newton-Schulz iteration cap [default: 30]
    #[arg(long, value_name = "N")]
    pub ns_max_iters: Option<usize>,
    /// Center-frequency initialization [default: spectral-peaks]
    #[arg(long, value_enum)]
    pub omega_init: Option<InitArg>,
    /// Mode update order within a sweep [default: gauss-seidel]
    #[arg(long, value_enum)]
    pub sweep_order: Option<OrderArg>,
    /// Shape of the Wiener filter [default: classic]
    #[arg(long, value_enum)]
    pub wiener_form: Option<FormArg>,
    /// Mirror-extend the input before transforming [default: true]
    #[arg(long, value_name = "BOOL")]
    pub mirror_boundary: Option<bool>,
    /// Keep multipliers across projections [default: true]
    #[arg(long, value_name = "BOOL")]
    pub retain_multipliers: Option<bool>,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Input CSV with a header row
    #[arg(long = "in", value_name = "CSV")]
    pub input: PathBuf,
    /// Column to decompose
    #[arg(long, default_value = "mixture")]
    pub channel: String,
    /// Sample rate of the input in Hz [default: 1000]
    #[arg(long, value_name = "HZ")]
    pub sample_rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON recipe
    #[arg(long, value_name = "JSON")]
    pub recipe: PathBuf,
    /// Output CSV: time, mixture, component_1..component_M
    #[arg(long, value_name = "CSV")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Number of modes [default: 3]
    #[arg(long)]
    pub k: Option<usize>,
    /// Decomposition variant [default: comd]
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Output mode file
    #[arg(long, value_name = "CSV")]
    pub out: PathBuf,
    /// Report JSON
    #[arg(long, value_name = "JSON")]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct GramArgs {
    /// Mode file written by `decompose`
    #[arg(long, value_name = "CSV")]
    pub modes: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectKArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Candidate K values, `a..b[:step]` or a comma list
    #[arg(long, default_value = "2..8")]
    pub k_grid: String,
    /// Decomposition variant [default: comd]
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Directory of CSV traces; every `*.csv` is one corpus signal
    #[arg(long, value_name = "DIR")]
    pub corpus: PathBuf,
    /// Column read from each trace
    #[arg(long, default_value = "mixture")]
    pub channel: String,
    /// Sample rate of the traces in Hz [default: 1000]
    #[arg(long, value_name = "HZ")]
    pub sample_rate: Option<f64>,
    /// Window sizes W, `a..b[:step]` or a comma list
    #[arg(long, default_value = "1,5,10,25,50,100")]
    pub windows: String,
    /// Comma list of methods (vmd, comd-penalty, comd)
    #[arg(long, default_value = "vmd,comd")]
    pub methods: String,
    /// Number of modes [default: 3]
    #[arg(long)]
    pub k: Option<usize>,
    /// Trailing samples decomposed at each window head [default: 256]
    #[arg(long, value_name = "N")]
    pub history: Option<usize>,
    /// Windows per signal, 0 for all
    #[arg(long, value_name = "N", default_value_t = 4)]
    pub max_windows: usize,
    /// Timed repetitions per cell
    #[arg(long, value_name = "N", default_value_t = 100)]
    pub reps: usize,
    /// Worker threads [default: logical cores]
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    /// Per-window rows CSV
    #[arg(long, value_name = "CSV")]
    pub out: PathBuf,
    /// Per-cell aggregates CSV
    #[arg(long, value_name = "CSV")]
    pub aggregates: Option<PathBuf>,
    /// JSON summary with rows and aggregates
    #[arg(long, value_name = "JSON")]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SnrSweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// SNR levels in dB, `a..b[:step]` or a comma list
    #[arg(long, default_value = "0..30:5")]
    pub snr: String,
    /// Number of modes [default: 3]
    #[arg(long)]
    pub k: Option<usize>,
    /// Decomposition variant [default: comd]
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Output CSV, one row per level
    #[arg(long, value_name = "CSV")]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Input CSV with a header row
    #[arg(long = "in", value_name = "CSV")]
    pub input: PathBuf,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    /// Comma list of columns [default: all except `time`]
    #[arg(long)]
    pub channels: Option<String>,
    /// Sample rate of the input in Hz [default: 1000]
    #[arg(long, value_name = "HZ")]
    pub sample_rate: Option<f64>,
    /// Samples per decomposed buffer [default: 256]
    #[arg(long, value_name = "N")]
    pub history: Option<usize>,
    /// Samples between buffer ends
    #[arg(long, value_name = "N", default_value_t = 100)]
    pub stride: usize,
    /// Windows per channel, 0 for all
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub max_windows: usize,
    /// Number of modes [default: 3]
    #[arg(long)]
    pub k: Option<usize>,
    /// Decomposition variant [default: comd]
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[command(flatten)]
    pub solver: SolverArgs,
}
