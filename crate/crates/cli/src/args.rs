use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "polyqubo",
    version,
    about = "Solve equation systems as binary optimization problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a polynomial system (JSON) on a fixed-point grid.
    SolvePoly(SolvePolyArgs),
    /// Solve a degree-1 system (JSON) on a fixed-point grid.
    SolveLinear(SolveLinearArgs),
    /// Fit basis coefficients by generalized least squares.
    Regress(RegressArgs),
    /// Run a size, condition-number or precision sweep over generated linear systems.
    Sweep(SweepArgs),
    /// Iteratively refine the grid around the incumbent of a generated linear system.
    Iterate(IterateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SolvePoly(_) => "solve-poly",
            Command::SolveLinear(_) => "solve-linear",
            Command::Regress(_) => "regress",
            Command::Sweep(_) => "sweep",
            Command::Iterate(_) => "iterate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Brute,
    Anneal,
    Cg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuxKind {
    Lazy,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    Gls,
    NormalResidual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKindArg {
    Size,
    Condition,
    Precision,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = BackendKind::Brute)]
    pub backend: BackendKind,
    /// Anneal reads.
    #[arg(long, default_value_t = 1000)]
    pub reads: usize,
    /// Anneal sweeps per read.
    #[arg(long, default_value_t = 1000)]
    pub sweeps: usize,
    /// Base seed; read `k` uses `seed + k`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub t_hot: Option<f64>,
    #[arg(long)]
    pub t_cold: Option<f64>,
    /// Largest QUBO the brute-force backend will enumerate.
    #[arg(long, default_value_t = polyqubo::solvers::brute::DEFAULT_MAX_BITS)]
    pub max_bits: usize,
    /// CG stopping tolerance on the relative residual norm.
    #[arg(long, default_value_t = polyqubo::solvers::cg::DEFAULT_TOLERANCE)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Report path; defaults to `$POLYQUBO_OUT_DIR/<command>.<format>`, else stdout.
    #[arg(long, short)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Embed wall time in the report (makes reports differ between runs).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EncodingArgs {
    /// Lower grid bound: one value for all variables or a comma list.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lo: Vec<f64>,
    /// Upper grid bound: one value for all variables or a comma list.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub hi: Vec<f64>,
    /// Bits per variable.
    #[arg(long)]
    pub bits: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolvePolyArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub encoding: EncodingArgs,
    #[arg(long, value_enum, default_value_t = AuxKind::Lazy)]
    pub aux: AuxKind,
    /// Penalty weight for auxiliary constraints; defaults to `1 + 2 sum|c|`.
    #[arg(long)]
    pub penalty: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveLinearArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub encoding: EncodingArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RegressArgs {
    /// `x,y` CSV; without it a synthetic dataset is generated.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Headerless square covariance CSV for `--input`.
    #[arg(long, requires = "input")]
    pub covariance: Option<PathBuf>,
    /// Generated dataset uses the exact means (the default).
    #[arg(long, conflicts_with_all = ["noise_seed", "input"])]
    pub noiseless: bool,
    /// Generated dataset draws one noisy sample with this seed.
    #[arg(long, conflicts_with = "input")]
    pub noise_seed: Option<u64>,
    /// Points in the generated dataset.
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Correlation base of the generated covariance.
    #[arg(long, default_value_t = 0.9)]
    pub corr: f64,
    /// Basis functions, `poly:<degree>`.
    #[arg(long, default_value = "poly:2")]
    pub basis: String,
    #[arg(long, value_enum, default_value_t = ObjectiveKind::Gls)]
    pub objective: ObjectiveKind,
    #[command(flatten)]
    pub encoding: EncodingArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: SweepKindArg,
    /// Swept values (sizes, condition numbers or bits per variable).
    #[arg(long, value_delimiter = ',', required = true, visible_aliases = ["sizes", "kappas", "bits-list"])]
    pub values: Vec<f64>,
    /// System size when not swept (default 4, or 12 for condition sweeps).
    #[arg(long)]
    pub n: Option<usize>,
    /// Condition number when not swept.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Bits per variable when not swept.
    #[arg(long)]
    pub bits: Option<usize>,
    /// Seed of the generated matrices.
    #[arg(long, default_value_t = 0)]
    pub instance_seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IterateArgs {
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 1.1)]
    pub kappa: f64,
    #[arg(long, default_value_t = 4)]
    pub bits: usize,
    #[arg(long, default_value_t = 9)]
    pub iters: usize,
    /// Initial lower bound for every variable.
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub lo: f64,
    /// Initial upper bound for every variable.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub hi: f64,
    /// Seed of the generated matrix.
    #[arg(long, default_value_t = 0)]
    pub instance_seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}
