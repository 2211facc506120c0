//! Monte Carlo experiments over grids of sparsity and SNR.
//!
//! Each trial draws a problem, runs one pursuit to `k_max` and applies every
//! configured selector to that same trace. Per-trial NMSE and support errors
//! are averaged per `(selector, k0, snr)` cell.
//!
//! Trial `t` of cell `c` draws everything from the stream
//! `rng::stream(base_seed, [c, t])`, and averages use a fixed-order pairwise
//! sum, so results do not depend on the number of worker threads.
//!
//! Oracle parameters come from the drawn instance: `OracleK0` uses the true
//! sparsity, `OracleSigma` the noise standard deviation (`ε₂ / sqrt(n)` for
//! bounded noise) and `OracleEps` the realized noise norm `||w||` (exactly
//! `ε₂` for bounded noise).

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{norm2, SensingMatrix};
use crate::problems::{
    add_noise_at_snr, gaussian_matrix, gen_identity_hadamard, gen_signal, nmse, pe_indicator, NoiseModel, ProblemError,
    SignalModel, SupportRule,
};
use crate::pursuit::{default_kmax, run_pursuit, Algorithm, PursuitError};
use crate::rng::stream;
use crate::selectors::{Selector, SelectorError, SelectorKind};
use crate::thresholds::{gamma_rrt_alpha, train_gamma_lb, ThresholdError, ThresholdKind, ThresholdSpec};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Pursuit(#[from] PursuitError),
    #[error(transparent)]
    Selector(#[from] SelectorError),
    #[error(transparent)]
    Threshold(#[from] ThresholdError),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixKind {
    /// Fresh Gaussian matrix per trial.
    Gaussian { n: usize, p: usize },
    /// Fixed `[I_n, H_n]`.
    IdentityHadamard { n: usize },
}

impl MatrixKind {
    pub fn dims(&self) -> (usize, usize) {
        match *self {
            MatrixKind::Gaussian { n, p } => (n, p),
            MatrixKind::IdentityHadamard { n } => (n, 2 * n),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MatrixKind::Gaussian { .. } => "gaussian",
            MatrixKind::IdentityHadamard { .. } => "identity_hadamard",
        }
    }
}

/// Where the RRT threshold comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdSource {
    /// Analytic Beta-quantile threshold at level `alpha`.
    Alpha(f64),
    /// Noise-assisted training; the seed defaults to the experiment seed.
    Trained {
        ntr: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// A fixed value.
    Value(f64),
}

impl Default for ThresholdSource {
    fn default() -> Self {
        ThresholdSource::Trained { ntr: 1000, seed: None }
    }
}

fn default_noise() -> NoiseModel {
    NoiseModel::Gaussian
}

/// An experiment grid. Unknown JSON keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub matrix: MatrixKind,
    pub signal_model: SignalModel,
    #[serde(default = "default_noise")]
    pub noise_model: NoiseModel,
    pub k0_list: Vec<usize>,
    pub snr_db_list: Vec<f64>,
    pub trials: usize,
    pub algorithm: Algorithm,
    pub selectors: Vec<SelectorKind>,
    #[serde(default)]
    pub threshold: ThresholdSource,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::InvalidConfig(m));
        let (n, p) = self.matrix.dims();
        if n == 0 || p == 0 {
            return bad(format!("matrix dimensions must be positive, got {n} x {p}"));
        }
        if let MatrixKind::IdentityHadamard { n } = self.matrix {
            if !n.is_power_of_two() {
                return bad(format!("identity_hadamard needs n to be a power of two, got {n}"));
            }
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.k0_list.is_empty() || self.snr_db_list.is_empty() || self.selectors.is_empty() {
            return bad("k0_list, snr_db_list and selectors must be nonempty".into());
        }
        let kmax = default_kmax(n).get();
        for &k0 in &self.k0_list {
            if k0 == 0 || k0 > kmax {
                return bad(format!("k0 = {k0} must lie in 1..={kmax} for n = {n}"));
            }
            if let SignalModel::Explicit(v) = &self.signal_model {
                if v.len() != k0 {
                    return bad(format!("explicit signal has {} values but k0 = {k0}", v.len()));
                }
            }
        }
        if let Some(s) = self.snr_db_list.iter().find(|s| !s.is_finite()) {
            return bad(format!("snr_db {s} is not finite"));
        }
        match self.threshold {
            ThresholdSource::Alpha(a) if !(a > 0.0 && a < 1.0) => bad(format!("alpha must lie in (0, 1), got {a}")),
            ThresholdSource::Value(v) if !(v > 0.0 && v <= 1.0) => bad(format!("threshold must lie in (0, 1], got {v}")),
            ThresholdSource::Trained { ntr: 0, .. } => bad("ntr must be at least 1".into()),
            _ => Ok(()),
        }
    }

    fn uses_rrt(&self) -> bool {
        self.selectors.contains(&SelectorKind::Rrt)
    }
}

/// Evaluates the configured threshold source.
pub fn resolve_threshold(config: &ExperimentConfig, base_seed: u64) -> Result<ThresholdSpec, BenchError> {
    let (n, p) = config.matrix.dims();
    let kmax = default_kmax(n);
    Ok(match config.threshold {
        ThresholdSource::Alpha(alpha) => gamma_rrt_alpha(n, p, kmax, alpha)?,
        ThresholdSource::Trained { ntr, seed } => train_gamma_lb(n, p, ntr, config.algorithm, seed.unwrap_or(base_seed))?,
        ThresholdSource::Value(value) => {
            ThresholdSpec { kind: ThresholdKind::Fixed, n, p, kmax: kmax.get(), value }
        }
    })
}

/// One selector's result on one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub selector: SelectorKind,
    pub k0: usize,
    pub snr_db: f64,
    pub trial: usize,
    pub nmse: f64,
    pub pe: u8,
}

/// Averages for one `(selector, k0, snr)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub selector: SelectorKind,
    pub algorithm: Algorithm,
    pub matrix_kind: String,
    pub n: usize,
    pub p: usize,
    pub k0: usize,
    pub snr_db: f64,
    pub trials: usize,
    pub nmse_mean: f64,
    pub pe_mean: f64,
}

impl MetricsRecord {
    /// Binomial standard error of `pe_mean`.
    pub fn pe_stderr(&self) -> f64 {
        (self.pe_mean * (1.0 - self.pe_mean) / self.trials as f64).sqrt()
    }

    /// `10 log10(nmse_mean)`.
    pub fn nmse_db(&self) -> f64 {
        10.0 * self.nmse_mean.log10()
    }
}

/// Sum by recursive halving; the result depends only on the order of `v`.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn key_cmp(a: &TrialOutcome, b: &TrialOutcome) -> Ordering {
    a.k0.cmp(&b.k0).then(a.snr_db.total_cmp(&b.snr_db)).then(a.selector.cmp(&b.selector))
}

/// Per-cell means, sorted by `(k0, snr_db, selector)`.
///
/// Outcomes are ordered by trial index inside each cell before summing, so
/// any permutation of the input gives identical results.
pub fn aggregate(outcomes: &[TrialOutcome], algorithm: Algorithm, matrix: &MatrixKind) -> Vec<MetricsRecord> {
    let mut sorted = outcomes.to_vec();
    sorted.sort_by(|a, b| key_cmp(a, b).then(a.trial.cmp(&b.trial)));
    let (n, p) = matrix.dims();
    sorted
        .chunk_by(|a, b| key_cmp(a, b) == Ordering::Equal)
        .map(|cell| {
            let t = cell.len();
            let nmse: Vec<f64> = cell.iter().map(|o| o.nmse).collect();
            let pe: Vec<f64> = cell.iter().map(|o| f64::from(o.pe)).collect();
            MetricsRecord {
                selector: cell[0].selector,
                algorithm,
                matrix_kind: matrix.name().to_string(),
                n,
                p,
                k0: cell[0].k0,
                snr_db: cell[0].snr_db,
                trials: t,
                nmse_mean: pairwise_sum(&nmse) / t as f64,
                pe_mean: pairwise_sum(&pe) / t as f64,
            }
        })
        .collect()
}

/// One `(k0, snr)` grid point; `index` is `k0 position * snr count + snr position`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub k0: usize,
    pub snr_db: f64,
}

/// Draws the instance of trial `trial` in `cell` and runs every selector.
///
/// `fixed` is the shared matrix for identity-Hadamard grids; `gamma` is the
/// RRT threshold.
pub fn run_trial(
    config: &ExperimentConfig,
    fixed: Option<&SensingMatrix>,
    gamma: Option<f64>,
    base_seed: u64,
    cell: Cell,
    trial: usize,
) -> Result<Vec<TrialOutcome>, BenchError> {
    let Cell { index, k0, snr_db } = cell;
    let mut rng = stream(base_seed, &[index as u64, trial as u64]);
    let (n, p) = config.matrix.dims();
    let drawn;
    let x = match fixed {
        Some(x) => x,
        None => {
            drawn = gaussian_matrix(n, p, &mut rng);
            &drawn
        }
    };
    let signal = gen_signal(p, k0, &config.signal_model, &SupportRule::UniformRandom, &mut rng)?;
    let sys = add_noise_at_snr(x, &signal, snr_db, config.noise_model, &mut rng)?;
    let trace = run_pursuit(config.algorithm, x, &sys.y, default_kmax(n))?;
    let (sigma, eps2) = match config.noise_model {
        NoiseModel::Gaussian => (sys.sigma.expect("gaussian level"), norm2(&sys.noise)),
        NoiseModel::L2Bounded => {
            let e = sys.eps2.expect("bounded level");
            (e / (n as f64).sqrt(), e)
        }
    };
    config
        .selectors
        .iter()
        .map(|&kind| {
            let selector = match kind {
                SelectorKind::Tf => Selector::Tf,
                SelectorKind::Rrt => Selector::Rrt { gamma: gamma.expect("threshold resolved for rrt") },
                SelectorKind::OracleK0 => Selector::OracleK0 { k0: k0.min(trace.k_reached()) },
                // sigma = 0 only for an infinite SNR, which validation rejects
                SelectorKind::OracleSigma => Selector::OracleSigma { sigma: sigma.max(f64::MIN_POSITIVE) },
                SelectorKind::OracleEps => Selector::OracleEps { eps2 },
            };
            let result = selector.select(&trace)?.estimate(&trace, x, &sys.y)?;
            Ok(TrialOutcome {
                selector: kind,
                k0,
                snr_db,
                trial,
                nmse: nmse(signal.beta(), &result.beta_hat)?,
                pe: pe_indicator(signal.support(), &result.support),
            })
        })
        .collect()
}

/// Runs the whole grid on `workers` threads (0 = rayon default).
pub fn run_experiment(config: &ExperimentConfig, base_seed: u64, workers: usize) -> Result<Vec<MetricsRecord>, BenchError> {
    config.validate()?;
    let gamma = if config.uses_rrt() { Some(resolve_threshold(config, base_seed)?) } else { None };
    run_experiment_with(config, base_seed, workers, gamma.map(|g| g.value))
}

/// As [`run_experiment`] with an already resolved RRT threshold.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    base_seed: u64,
    workers: usize,
    gamma: Option<f64>,
) -> Result<Vec<MetricsRecord>, BenchError> {
    config.validate()?;
    if config.uses_rrt() && gamma.is_none() {
        return Err(BenchError::InvalidConfig("rrt selected but no threshold supplied".into()));
    }
    let fixed = match config.matrix {
        MatrixKind::IdentityHadamard { n } => Some(gen_identity_hadamard(n)?),
        MatrixKind::Gaussian { .. } => None,
    };
    let mut jobs = Vec::new();
    for (ki, &k0) in config.k0_list.iter().enumerate() {
        for (si, &snr) in config.snr_db_list.iter().enumerate() {
            let cell = Cell { index: ki * config.snr_db_list.len() + si, k0, snr_db: snr };
            for t in 0..config.trials {
                jobs.push((cell, t));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| BenchError::Pool(e.to_string()))?;
    let per_trial: Vec<Vec<TrialOutcome>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(cell, t)| run_trial(config, fixed.as_ref(), gamma, base_seed, cell, t))
            .collect::<Result<_, _>>()
    })?;
    let outcomes: Vec<TrialOutcome> = per_trial.into_iter().flatten().collect();
    Ok(aggregate(&outcomes, config.algorithm, &config.matrix))
}

/// CSV with header; comma separator, LF line endings.
pub fn write_metrics_csv<W: Write>(writer: W, records: &[MetricsRecord]) -> Result<(), BenchError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
