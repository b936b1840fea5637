//! `randrec`: tail theory and Monte Carlo checks for Markov-modulated
//! random linear recursions.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use randrec::estimate::{AlphaChoice, Window};
use serde::Serialize;

use crate::config::ConfigFile;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "randrec",
    version,
    about = "Heavy-tail theory and simulation for R_n = Q_n + M_n R_{n-1}"
)]
struct Cli {
    /// Master seed for all random streams
    #[arg(long, global = true, env = "RANDREC_SEED")]
    seed: Option<u64>,
    /// Worker threads (0 = one per core)
    #[arg(long, global = true, env = "RANDREC_THREADS")]
    threads: Option<usize>,
    /// Perron-root bracket width
    #[arg(long, global = true, env = "RANDREC_TOL_SPECTRAL")]
    tol_spectral: Option<f64>,
    /// Accepted |Lambda| at the exponent
    #[arg(long, global = true, env = "RANDREC_TOL_ROOT")]
    tol_root: Option<f64>,
    /// JSON settings file; flags and environment take precedence
    #[arg(long, global = true, env = "RANDREC_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the standing assumptions
    Check(CheckArgs),
    /// Solve Lambda(alpha) = 0 for the Kesten exponent
    SolveAlpha(SolveAlphaArgs),
    /// Tail-constant vectors for a given exponent
    TailConstants(TailConstantsArgs),
    /// Draw stationary samples of R as CSV
    Simulate(SimulateArgs),
    /// Regeneration blocks as CSV
    Blocks(BlocksArgs),
    /// Estimate the exponent and tail constants from a sample CSV
    Estimate(EstimateArgs),
    /// Theory, simulation and estimates joined with pass/fail checks
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct CheckArgs {
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    /// Exponent to check at; defaults to the model's own exponent
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveAlphaArgs {
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    /// Upper end of the search interval; found by doubling when absent
    #[arg(long)]
    pub beta_max: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TailConstantsArgs {
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    /// Exponent; defaults to the tail index of Q when it governs
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Burnin,
    Backward,
}

/// Sampler settings shared by `simulate` and `report`.
#[derive(Debug, Args, Serialize)]
pub struct SamplerArgs {
    #[arg(long, value_enum, default_value = "backward")]
    pub method: MethodArg,
    /// Steps discarded before the first burn-in sample
    #[arg(long, default_value_t = 1000)]
    pub burnin: usize,
    /// Steps between recorded burn-in samples
    #[arg(long, default_value_t = randrec::simulate::DEFAULT_THIN)]
    pub thin: usize,
    /// Starting value of the burn-in paths
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub r0: f64,
    /// Backward truncation depth; chosen from the model when absent
    #[arg(long)]
    pub depth: Option<usize>,
    /// Independent random streams
    #[arg(long, default_value_t = 1)]
    pub shards: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: SamplerArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BlocksArgs {
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub blocks: usize,
    /// Regeneration state id; defaults to the first state
    #[arg(long)]
    pub y_star: Option<String>,
    /// Coin probability at each visit to y_star
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    #[arg(long, default_value_t = randrec::simulate::DEFAULT_MAX_BLOCK_LEN)]
    pub max_block_len: usize,
    #[arg(long, default_value_t = 1)]
    pub shards: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    /// Sample CSV written by `simulate`
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Model file; fixes the numbering of states
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// `auto` (Hill) or a positive number
    #[arg(long, default_value = "auto", value_parser = parse_alpha)]
    pub alpha: AlphaChoice,
    /// `q:lo,hi` for quantiles of |R| or `t:lo,hi` for absolute thresholds
    #[arg(long, default_value = "q:0.99,0.9999", value_parser = parse_window)]
    pub window: Window,
    #[arg(long)]
    pub per_state: bool,
    /// Output JSON path; stdout when absent
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: SamplerArgs,
    #[arg(long, default_value = "q:0.99,0.9999", value_parser = parse_window)]
    pub window: Window,
    #[arg(long)]
    pub per_state: bool,
    /// Regeneration state id for rho(Theta) and the block check
    #[arg(long)]
    pub y_star: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    /// Regeneration blocks for the block-moment check (0 skips it)
    #[arg(long, default_value_t = 0)]
    pub blocks: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_alpha(s: &str) -> Result<AlphaChoice, String> {
    if s == "auto" {
        return Ok(AlphaChoice::Auto);
    }
    match s.parse::<f64>() {
        Ok(a) if a > 0.0 && a.is_finite() => Ok(AlphaChoice::Value(a)),
        _ => Err(format!("expected `auto` or a positive number, got {s:?}")),
    }
}

fn parse_window(s: &str) -> Result<Window, String> {
    let bad = || format!("expected `q:lo,hi` or `t:lo,hi`, got {s:?}");
    let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
    let (lo, hi) = rest.split_once(',').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    match kind {
        "q" if 0.0 < lo && lo < hi && hi < 1.0 => Ok(Window::Quantiles { lo, hi }),
        "t" if 0.0 < lo && lo < hi && hi.is_finite() => Ok(Window::Absolute { t_lo: lo, t_hi: hi }),
        "q" | "t" => Err(format!("window bounds out of range in {s:?}")),
        _ => Err(bad()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let mut global = config::resolve(cli.seed, cli.threads, cli.tol_spectral, cli.tol_root, &file)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(global.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    global.threads = pool.current_num_threads();
    pool.install(|| match &cli.command {
        Command::Check(a) => commands::check(a, &global),
        Command::SolveAlpha(a) => commands::solve_alpha(a, &global),
        Command::TailConstants(a) => commands::tail_constants(a, &global),
        Command::Simulate(a) => commands::simulate(a, &global),
        Command::Blocks(a) => commands::blocks(a, &global),
        Command::Estimate(a) => commands::estimate(a, &global),
        Command::Report(a) => commands::report(a, &global),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
