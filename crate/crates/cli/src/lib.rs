//! Command-line driver: parameter layering, subcommand dispatch, output.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod config;
pub mod output;
pub mod sweep;

pub use config::{Format, Params};
pub use output::{Cell, Document};

/// Bad flags, config files or parameter combinations (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Parser)]
#[command(name = "tfim", version, about = "Repeated mode measurements in a quenched Ising chain")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat TOML file with defaults for any of the global flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub params: Params,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Open-chain normal modes: k, φ_k, λ_k, 𝒩_k.
    Modes,
    /// Majorana correlation matrix of the block at time --t.
    Gamma,
    /// Coherence between the Π_k sectors over time, or its late-time limit.
    Cso(CsoArgs),
    /// Lower bounds on repeated-confirmation probabilities.
    Rms(RmsArgs),
    /// Local-measurement overlaps, bounds and basis optimization.
    Practical(PracticalArgs),
    /// Dense exact-diagonalization cross-checks and protocol Monte Carlo.
    Oracle(OracleArgs),
    /// Grid over ξ, N, k writing one file per cell plus a manifest.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CsoMethodArg {
    Gaussian,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LimitArg {
    /// Dephased infinite-time correlation matrix.
    Stationary,
    /// Average over a late-time window.
    Window,
}

#[derive(Debug, Clone, Args)]
pub struct CsoArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    pub method: CsoMethodArg,
    /// Emit (ξ, 𝒞_∞) over --xi-values instead of a time series.
    #[arg(long)]
    pub inset: bool,
    #[arg(long, value_enum, default_value = "stationary")]
    pub limit: LimitArg,
    #[arg(long, default_value_t = 60.0)]
    pub window_start: f64,
    #[arg(long, default_value_t = 80.0)]
    pub window_end: f64,
    #[arg(long, default_value_t = 0.5)]
    pub window_step: f64,
}

impl Default for CsoArgs {
    fn default() -> Self {
        Self {
            method: CsoMethodArg::Gaussian,
            inset: false,
            limit: LimitArg::Stationary,
            window_start: 60.0,
            window_end: 80.0,
            window_step: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RmsKindArg {
    All,
    Proj,
    Local,
    Dec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutcomeArg {
    Empty,
    Occupied,
}

#[derive(Debug, Clone, Args)]
pub struct RmsArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub kind: RmsKindArg,
    /// Which Π_k outcome is being confirmed.
    #[arg(long, value_enum, default_value = "empty")]
    pub outcome: OutcomeArg,
}

impl Default for RmsArgs {
    fn default() -> Self {
        Self {
            kind: RmsKindArg::All,
            outcome: OutcomeArg::Empty,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PracticalTask {
    /// Tr(Π_k Π_n) for every z-basis string.
    Overlaps,
    /// Best single string and the per-step confirmation bound.
    Bound,
    /// Subspace-retention bounds for repeated confirmation.
    Repeated,
    /// Optimize the local measurement axes.
    Optimize,
    /// Classify strings into near-occupied / near-empty sets.
    Partition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Variance,
    Partition,
}

#[derive(Debug, Clone, Args)]
pub struct PracticalArgs {
    #[arg(long, value_enum, default_value = "bound")]
    pub task: PracticalTask,
    #[arg(long, value_enum, default_value = "empty")]
    pub outcome: OutcomeArg,
    #[arg(long, value_enum, default_value = "variance")]
    pub objective: ObjectiveArg,
    #[arg(long, default_value_t = 20_000)]
    pub budget: usize,
    #[arg(long, default_value_t = 4)]
    pub starts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleTask {
    Equivalence,
    Protocol,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PostulateArg {
    Projective,
    Continuous,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long, value_enum, default_value = "equivalence")]
    pub task: OracleTask,
    #[arg(long, default_value_t = 10_000)]
    pub trajectories: u64,
    #[arg(long, value_enum, default_value = "projective")]
    pub postulate: PostulateArg,
    /// Waiting time between measurements; defaults to t_bound for --p-min.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Agreement tolerance for the equivalence checks.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Modes,
    Cso,
    Rms,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value = "cso")]
    pub kind: SweepKind,
    /// Recompute every cell even if its output already exists.
    #[arg(long)]
    pub fresh: bool,
}

/// What a successful run produced.
#[derive(Debug, Default)]
pub struct Report {
    pub written: Vec<PathBuf>,
    pub skipped: usize,
}

pub fn run(cli: Cli) -> Result<Report> {
    let params = match &cli.config {
        Some(path) => Params::from_file(path)?.layered(cli.params.clone()),
        None => cli.params.clone(),
    };
    let jobs = params.jobs();
    if jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| anyhow::anyhow!("thread pool: {e}"))?;
    pool.install(|| dispatch(&cli.command, &params))
}

fn dispatch(command: &Command, p: &Params) -> Result<Report> {
    if let Command::Sweep(args) = command {
        return sweep::run(args, p);
    }
    let (doc, failure) = commands::execute(command, p)?;
    let rendered = doc.render(p.format());
    let mut report = Report::default();
    match &p.out {
        Some(path) => {
            output::write_atomic(path, &rendered)?;
            report.written.push(path.clone());
        }
        None => print!("{rendered}"),
    }
    match failure {
        Some(msg) => Err(anyhow::anyhow!(msg)),
        None => Ok(report),
    }
}

/// 2 for caller mistakes, 1 for numerical or I/O failures.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<tfim_core::Error>() {
            return if e.is_invalid_input() { 2 } else { 1 };
        }
    }
    1
}
