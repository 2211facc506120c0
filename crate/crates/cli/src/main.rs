//! `rrpursuit` command-line tool.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 invalid
//! arguments, 3 unreadable or inconsistent data, 4 brute-force budget
//! exceeded.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rrpursuit::pursuit::Algorithm;
use rrpursuit::selectors::SelectorKind;

#[derive(Parser, Debug)]
#[command(name = "rrpursuit", version, about = "Sparse recovery with residual-ratio stopping rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a pursuit on (X, y) and select the support.
    Solve(SolveArgs),
    /// Train the noise-assisted threshold and store it in a cache file.
    Train(TrainArgs),
    /// Print the analytic Beta-quantile threshold.
    GammaAlpha(GammaAlphaArgs),
    /// Run a Monte Carlo experiment grid.
    Experiment(ExperimentArgs),
    /// Brute-force restricted isometry constant.
    Ric(RicArgs),
    /// Numerical checks of the recovery theory.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Design matrix: CSV (one row per line) or `.bin`.
    #[arg(long)]
    matrix: PathBuf,
    /// Observation vector, one value per line.
    #[arg(long)]
    obs: PathBuf,
    #[arg(long, default_value = "omp")]
    alg: Algorithm,
    /// tf, rrt, oracle-k0, oracle-sigma or oracle-eps.
    #[arg(long)]
    selector: SelectorKind,
    /// True sparsity for oracle-k0.
    #[arg(long)]
    k0: Option<usize>,
    /// Noise standard deviation for oracle-sigma.
    #[arg(long)]
    sigma: Option<f64>,
    /// Noise bound for oracle-eps.
    #[arg(long)]
    eps2: Option<f64>,
    /// RRT threshold value.
    #[arg(long, conflicts_with = "threshold")]
    gamma: Option<f64>,
    /// RRT threshold source: `alpha:A` or `trained:CACHE.json`.
    #[arg(long)]
    threshold: Option<String>,
    /// Training sample count used to look up a trained threshold.
    #[arg(long, default_value_t = 1000)]
    ntr: usize,
    /// Training seed used to look up a trained threshold.
    #[arg(long, default_value_t = 0)]
    train_seed: u64,
    /// Iteration cap (default floor((n+1)/2)).
    #[arg(long)]
    kmax: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value = "omp")]
    alg: Algorithm,
    #[arg(long, default_value_t = 1000)]
    ntr: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON cache of trained values.
    #[arg(long, default_value = "thresholds.json")]
    cache: PathBuf,
}

#[derive(Args, Debug)]
struct GammaAlphaArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    /// Iteration cap (default floor((n+1)/2)).
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    alpha: f64,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Experiment config (JSON).
    #[arg(long, required_unless_present = "replay", conflicts_with = "replay")]
    config: Option<PathBuf>,
    /// Base seed; every random draw derives from it.
    #[arg(long, required_unless_present = "replay", conflicts_with = "replay")]
    seed: Option<u64>,
    /// Re-run the experiment recorded in a manifest.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Output directory for metrics.csv and manifest.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Cache for trained thresholds.
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
struct MatrixSource {
    /// Matrix file (CSV or `.bin`); columns are normalized.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Use [I_n, H_n].
    #[arg(long, value_name = "N")]
    identity_hadamard: Option<usize>,
    /// Use a Gaussian N x P matrix drawn from --matrix-seed.
    #[arg(long, num_args = 2, value_names = ["N", "P"])]
    gaussian: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
struct RicArgs {
    #[command(flatten)]
    source: MatrixSource,
    #[arg(long, default_value_t = 0)]
    matrix_seed: u64,
    /// Order of the constant.
    #[arg(long)]
    k: usize,
    /// Maximum number of supports to enumerate.
    #[arg(long, default_value_t = rrpursuit::verify::DEFAULT_RIC_BUDGET)]
    budget: u128,
    /// Directory for report.json and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(subcommand)]
    check: VerifyCheck,
    /// Directory for report.json and manifest.json.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum VerifyCheck {
    /// Monte Carlo check that TF and RRT recover the support below the
    /// guaranteed noise level.
    Recovery(RecoveryArgs),
    /// Kolmogorov–Smirnov test of the residual-ratio Beta law.
    BetaLaw(BetaLawArgs),
    /// Evaluate the recovery thresholds and excess-SNR bounds.
    Guarantees(GuaranteeArgs),
    /// Support-error decay of TF with increasing SNR on [I_n, H_n].
    Hsc(HscArgs),
    /// RIC inequalities on random disjoint supports.
    RicInequalities(RicInequalityArgs),
}

#[derive(Args, Debug)]
struct RecoveryArgs {
    #[command(flatten)]
    source: MatrixSource,
    #[arg(long, default_value_t = 0)]
    matrix_seed: u64,
    /// Sparsity of a random uniform (±1) signal.
    #[arg(long, required_unless_present = "support")]
    k0: Option<usize>,
    /// Explicit support indices (comma separated).
    #[arg(long, value_delimiter = ',', requires = "values", conflicts_with = "k0")]
    support: Option<Vec<usize>>,
    /// Coefficients on the explicit support.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Option<Vec<f64>>,
    /// Noise norm.
    #[arg(long, conflicts_with = "eps_factor")]
    eps2: Option<f64>,
    /// Noise norm as a multiple of the guaranteed level.
    #[arg(long, default_value_t = 0.9)]
    eps_factor: f64,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "omp")]
    alg: Algorithm,
    /// Noise-only runs used to measure the matrix's residual-ratio floor.
    #[arg(long, default_value_t = 20_000)]
    measure_runs: usize,
    /// Samples of the universal trained threshold (0 to skip).
    #[arg(long, default_value_t = 1000)]
    ntr: usize,
}

#[derive(Args, Debug)]
struct BetaLawArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long)]
    seed: u64,
}

#[derive(Args, Debug)]
struct GuaranteeArgs {
    #[arg(long)]
    delta_ksup: f64,
    #[arg(long)]
    delta_k0plus1: f64,
    #[arg(long)]
    k0: usize,
    #[arg(long)]
    beta_min: f64,
    #[arg(long)]
    beta_max: f64,
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    gamma_lb: f64,
}

#[derive(Args, Debug)]
struct HscArgs {
    #[arg(long, default_value_t = 32)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    k0: usize,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [10.0, 20.0, 30.0, 40.0])]
    snr: Vec<f64>,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    /// Largest acceptable support-error rate at the highest SNR.
    #[arg(long, default_value_t = 0.02)]
    cap: f64,
    #[arg(long, default_value = "omp")]
    alg: Algorithm,
    #[arg(long)]
    seed: u64,
}

#[derive(Args, Debug)]
struct RicInequalityArgs {
    #[command(flatten)]
    source: MatrixSource,
    #[arg(long, default_value_t = 0)]
    matrix_seed: u64,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 100)]
    draws: usize,
    #[arg(long)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Train(a) => commands::train(a),
        Command::GammaAlpha(a) => commands::gamma_alpha(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::Ric(a) => commands::ric(a),
        Command::Verify(a) => commands::verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
