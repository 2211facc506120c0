//! Numerical checks of the recovery theory.
//!
//! * [`ric_bruteforce`]: exact restricted isometry constants by enumerating
//!   every support of a given size.
//! * [`guarantee_thresholds`]: noise levels below which TF, RRT and
//!   `k0`-iteration OMP provably recover the support, and the extra SNR the
//!   tuning-free rules need relative to the `k0` oracle.
//! * [`beta_law_conformance`]: Kolmogorov–Smirnov test that squared residual
//!   ratios of Gaussian noise under fixed nested projections follow
//!   `Beta((n-k)/2, 1/2)`.
//! * [`verify_sufficient_recovery`]: Monte Carlo confirmation that the
//!   sufficient conditions really are sufficient on a concrete matrix.

use itertools::Itertools;
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bench::{run_experiment, BenchError, ExperimentConfig, MatrixKind, ThresholdSource};
use crate::betafn::{beta_cdf, BetaParams};
use crate::linalg::{dot, norm2, ProjectionState, SensingMatrix};
use crate::problems::{gaussian_entries, sphere_point, NoiseModel, ProblemError, SignalModel, SparseSignal};
use crate::pursuit::{default_kmax, run_pursuit, Algorithm, PursuitError};
use crate::rng::stream;
use crate::selectors::{select_rrt, select_tf, SelectorError, SelectorKind};
use crate::thresholds::{train_gamma_lb, ThresholdError};

/// Default cap on the number of supports [`ric_bruteforce`] may enumerate.
pub const DEFAULT_RIC_BUDGET: u128 = 2_000_000;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("enumerating order {k} needs {required} supports, budget is {budget}")]
    BudgetExceeded { k: usize, required: u128, budget: u128 },
    #[error("order k = {k} must satisfy 1 <= k <= min(n, p) = {max}")]
    InvalidOrder { k: usize, max: usize },
    #[error("recovery premise fails: delta_(k0+1) = {delta} is not below 1/sqrt(k0+1) = {bound}")]
    PremiseUnmet { delta: f64, bound: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Pursuit(#[from] PursuitError),
    #[error(transparent)]
    Selector(#[from] SelectorError),
    #[error(transparent)]
    Threshold(#[from] ThresholdError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Bench(#[from] BenchError),
}

/// Exact restricted isometry constant of one order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RicEstimate {
    pub k: usize,
    pub delta_k: f64,
    pub subsets_checked: u128,
}

/// `C(p, k)`, saturating at `u128::MAX`.
pub fn binomial(p: usize, k: usize) -> u128 {
    if k > p {
        return 0;
    }
    let k = k.min(p - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = match c.checked_mul((p - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    c
}

/// Extreme eigenvalues of a symmetric `k x k` row-major matrix.
fn extreme_eigenvalues(g: &[f64], k: usize) -> (f64, f64) {
    match k {
        1 => (g[0], g[0]),
        2 => {
            let (a, c, d) = (g[0], g[1], g[3]);
            let mid = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + c * c).sqrt();
            (mid - rad, mid + rad)
        }
        _ => {
            let ev = DMatrix::from_row_slice(k, k, g).symmetric_eigen().eigenvalues;
            (ev.min(), ev.max())
        }
    }
}

/// `max(λ_max - 1, 1 - λ_min)` of the Gram matrix of `support`.
pub fn support_isometry_defect(matrix: &SensingMatrix, support: &[usize]) -> f64 {
    let (lo, hi) = extreme_eigenvalues(&matrix.gram(support), support.len());
    (hi - 1.0).max(1.0 - lo).max(0.0)
}

/// `δ_k` with the default budget.
pub fn ric_bruteforce(matrix: &SensingMatrix, k: usize) -> Result<RicEstimate, VerifyError> {
    ric_bruteforce_with_budget(matrix, k, DEFAULT_RIC_BUDGET)
}

/// `δ_k` as the largest isometry defect over all supports of size exactly `k`
/// (smaller supports never give a larger value).
pub fn ric_bruteforce_with_budget(matrix: &SensingMatrix, k: usize, budget: u128) -> Result<RicEstimate, VerifyError> {
    let (n, p) = (matrix.n(), matrix.p());
    if k == 0 || k > n.min(p) {
        return Err(VerifyError::InvalidOrder { k, max: n.min(p) });
    }
    let required = binomial(p, k);
    if required > budget {
        return Err(VerifyError::BudgetExceeded { k, required, budget });
    }
    let delta_k = (0..=p - k)
        .into_par_iter()
        .map(|first| {
            let mut best: f64 = 0.0;
            let mut support = vec![first; k];
            for rest in (first + 1..p).combinations(k - 1) {
                support[1..].copy_from_slice(&rest);
                best = best.max(support_isometry_defect(matrix, &support));
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(RicEstimate { k, delta_k, subsets_checked: required })
}

/// Inputs of [`guarantee_thresholds`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GuaranteeInputs {
    /// RIC at the order used by the TF/RRT bounds (`δ_{k0}` for exact
    /// recovery, `δ_{k_sup}` for superset recovery).
    pub delta_ksup: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    /// `Γ_Alg(X)` for the TF bound.
    pub gamma: f64,
    /// Lower bound on `Γ_Alg(X)` used by RRT.
    pub gamma_lb: f64,
    /// `δ_{k0+1}`, for exact recovery in `k0` iterations.
    pub delta_k0plus1: f64,
    pub k0: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GuaranteeFlag {
    /// `δ_{k0+1} >= 1/sqrt(k0+1)`: the exact-recovery bound does not apply.
    RipViolated,
}

/// Noise thresholds for support recovery and the matching excess-SNR bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuaranteeReport {
    pub inputs: GuaranteeInputs,
    /// `None` when [`GuaranteeFlag::RipViolated`] is set.
    pub eps_exact: Option<f64>,
    pub eps_sig: f64,
    pub eps_x: f64,
    pub eps_rrt: f64,
    /// Upper bound on `ε_exact / ε_RRT`.
    pub snr_excess_rrt_bound: Option<f64>,
    /// Upper bound on `ε_exact / ε_sig`.
    pub snr_excess_sig_bound: f64,
    pub flags: Vec<GuaranteeFlag>,
}

impl GuaranteeReport {
    /// `min(ε_exact, ε_sig, ε_X)`: TF recovers the support below this.
    pub fn tf_threshold(&self) -> Option<f64> {
        self.eps_exact.map(|e| e.min(self.eps_sig).min(self.eps_x))
    }

    /// `min(ε_exact, ε_RRT)`: RRT recovers the support below this.
    pub fn rrt_threshold(&self) -> Option<f64> {
        self.eps_exact.map(|e| e.min(self.eps_rrt))
    }
}

/// `sqrt(1 - δ²) / (1 - sqrt(k0+1) δ)`, or `None` outside the RIP regime.
fn exact_ratio(delta: f64, k0: usize) -> Option<f64> {
    let s = ((k0 + 1) as f64).sqrt();
    (delta * s < 1.0).then(|| (1.0 - delta * delta).sqrt() / (1.0 - s * delta))
}

/// `ε_sig`: depends on the signal only.
pub fn eps_sig(delta: f64, beta_min: f64, beta_max: f64) -> f64 {
    let spread = ((1.0 + delta) / (1.0 - delta)).sqrt() * (2.0 + beta_max / beta_min);
    (1.0 - delta).sqrt() * beta_min / (1.0 + spread)
}

/// `ε_X` (with `Γ_Alg(X)`) or `ε_RRT` (with a lower bound on it).
pub fn eps_gamma(delta: f64, beta_min: f64, gamma: f64) -> f64 {
    (1.0 - delta).sqrt() * beta_min * gamma / (1.0 + gamma)
}

/// `ε_exact` for `k0`-iteration OMP; `None` unless `δ_{k0+1} < 1/sqrt(k0+1)`.
pub fn eps_exact(delta_k0plus1: f64, beta_min: f64, k0: usize) -> Option<f64> {
    exact_ratio(delta_k0plus1, k0).map(|r| beta_min * (1.0 - delta_k0plus1).sqrt() / (1.0 + r))
}

/// The simplified RRT excess-SNR bound `0.5 (1 + 1/Γ_lb)`, valid whenever
/// the exact-recovery premise holds.
pub fn snr_excess_rrt_simple(gamma_lb: f64) -> f64 {
    0.5 * (1.0 + 1.0 / gamma_lb)
}

pub fn guarantee_thresholds(inp: &GuaranteeInputs) -> Result<GuaranteeReport, VerifyError> {
    let in_unit = |d: f64| (0.0..1.0).contains(&d);
    if !in_unit(inp.delta_ksup) || !in_unit(inp.delta_k0plus1) {
        return Err(VerifyError::InvalidInput("RIC values must lie in [0, 1)".into()));
    }
    if !(inp.beta_min > 0.0 && inp.beta_max >= inp.beta_min) {
        return Err(VerifyError::InvalidInput("need 0 < beta_min <= beta_max".into()));
    }
    if !(inp.gamma > 0.0 && inp.gamma <= 1.0 && inp.gamma_lb > 0.0 && inp.gamma_lb <= 1.0) {
        return Err(VerifyError::InvalidInput("gamma and gamma_lb must lie in (0, 1]".into()));
    }
    let d = inp.delta_ksup;
    let ratio = exact_ratio(inp.delta_k0plus1, inp.k0);
    let dr = inp.beta_max / inp.beta_min;
    Ok(GuaranteeReport {
        inputs: *inp,
        eps_exact: eps_exact(inp.delta_k0plus1, inp.beta_min, inp.k0),
        eps_sig: eps_sig(d, inp.beta_min, inp.beta_max),
        eps_x: eps_gamma(d, inp.beta_min, inp.gamma),
        eps_rrt: eps_gamma(d, inp.beta_min, inp.gamma_lb),
        snr_excess_rrt_bound: ratio.map(|r| (1.0 + 1.0 / inp.gamma_lb) / (1.0 + r)),
        snr_excess_sig_bound: 0.5 * (1.0 + ((1.0 + d) / (1.0 - d)).sqrt() * (2.0 + dr)),
        flags: if ratio.is_none() { vec![GuaranteeFlag::RipViolated] } else { Vec::new() },
    })
}

/// Lower bound on `||β - β̂||` when `k0`-iteration OMP misses part of the
/// support:
/// `(1 - δ_{2k0} / (1 - δ_{k0})) β_min - ε₂ / sqrt(1 - δ_{k0})`.
pub fn error_floor_bound(delta_2k0: f64, delta_k0: f64, beta_min: f64, eps2: f64) -> f64 {
    (1.0 - delta_2k0 / (1.0 - delta_k0)) * beta_min - eps2 / (1.0 - delta_k0).sqrt()
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
/// Sorts `sample` in place.
pub fn ks_statistic(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let m = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / m).max((i + 1) as f64 / m - f)
        })
        .fold(0.0, f64::max)
}

/// 1% critical value of the one-sample KS statistic, `1.63 / sqrt(m)`.
pub fn ks_critical_1pct(m: usize) -> f64 {
    1.63 / (m as f64).sqrt()
}

/// Squared residual ratio of `z` under the coordinate projections onto the
/// first `k - 1` and `k` coordinates.
pub fn coordinate_rr_squared(z: &[f64], k: usize) -> f64 {
    let tail = |from: usize| z[from..].iter().map(|v| v * v).sum::<f64>();
    tail(k) / tail(k - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaLawReport {
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    pub ks_statistic: f64,
    pub ks_critical_1pct: f64,
    pub sample_mean: f64,
    pub expected_mean: f64,
    pub mean_stderr: f64,
    pub pass: bool,
}

/// Tests `RR(k)²` of standard Gaussian vectors under fixed nested coordinate
/// projections against `Beta((n-k)/2, 1/2)`.
pub fn beta_law_conformance(n: usize, k_list: &[usize], samples: usize, seed: u64) -> Result<Vec<BetaLawReport>, VerifyError> {
    if samples < 2 {
        return Err(VerifyError::InvalidInput("need at least two samples".into()));
    }
    k_list
        .iter()
        .map(|&k| {
            if k == 0 || k >= n {
                return Err(VerifyError::InvalidOrder { k, max: n - 1 });
            }
            let mut rng = stream(seed, &[k as u64]);
            let mut draws: Vec<f64> =
                (0..samples).map(|_| coordinate_rr_squared(&gaussian_entries(n, &mut rng), k)).collect();
            let params = BetaParams::new((n - k) as f64 / 2.0, 0.5).expect("valid shape");
            let sample_mean = draws.iter().sum::<f64>() / samples as f64;
            let ks = ks_statistic(&mut draws, |x| beta_cdf(params, x).expect("x in [0, 1]"));
            let crit = ks_critical_1pct(samples);
            let expected_mean = params.mean();
            let mean_stderr = (params.variance() / samples as f64).sqrt();
            Ok(BetaLawReport {
                n,
                k,
                samples,
                ks_statistic: ks,
                ks_critical_1pct: crit,
                sample_mean,
                expected_mean,
                mean_stderr,
                pass: ks < crit && (sample_mean - expected_mean).abs() <= 3.0 * mean_stderr,
            })
        })
        .collect()
}

/// Estimate of `Γ_Alg(X)`: the smallest residual ratio over `runs` pursuits
/// on pure Gaussian noise with the fixed matrix `X`.
pub fn measure_gamma_alg(matrix: &SensingMatrix, algorithm: Algorithm, runs: usize, seed: u64) -> Result<f64, VerifyError> {
    let kmax = default_kmax(matrix.n());
    let minima: Vec<f64> = (0..runs)
        .into_par_iter()
        .map(|s| {
            let w = gaussian_entries(matrix.n(), &mut stream(seed, &[s as u64]));
            Ok(run_pursuit(algorithm, matrix, &w, kmax)?.min_rr().unwrap_or(1.0))
        })
        .collect::<Result<_, VerifyError>>()?;
    Ok(minima.into_iter().fold(1.0, f64::min))
}

/// Tuning of [`verify_sufficient_recovery`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SufficiencyOptions {
    pub algorithm: Algorithm,
    /// Noise-only runs on `X` used to measure `Γ_Alg(X)`.
    pub measure_runs: usize,
    /// Samples of the universal trained bound; 0 skips it.
    pub ntr: usize,
    /// Overrides the measured `Γ_Alg(X)`.
    pub gamma: Option<f64>,
    /// Overrides `Γ_lb`.
    pub gamma_lb: Option<f64>,
}

impl Default for SufficiencyOptions {
    fn default() -> Self {
        SufficiencyOptions { algorithm: Algorithm::Omp, measure_runs: 20_000, ntr: 1000, gamma: None, gamma_lb: None }
    }
}

/// A trial where a guaranteed recovery failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub trial: usize,
    pub selector: SelectorKind,
    pub support_hat: Vec<usize>,
    pub noise: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SufficiencyReport {
    pub k0: usize,
    pub support: Vec<usize>,
    pub eps2: f64,
    pub delta_k0: f64,
    pub delta_k0plus1: f64,
    pub gamma_measured: f64,
    pub gamma_trained: Option<f64>,
    pub gamma_lb: f64,
    pub guarantee: GuaranteeReport,
    /// `min` of the TF and RRT thresholds.
    pub threshold: f64,
    /// Whether `eps2` is below `threshold`, i.e. recovery is guaranteed.
    pub asserted: bool,
    pub trials: usize,
    pub tf_failures: usize,
    pub rrt_failures: usize,
    pub counterexamples: Vec<Counterexample>,
    /// False only if a guaranteed recovery failed.
    pub pass: bool,
}

/// Thresholds for `signal` on `matrix`, without running any trials.
///
/// Returns `(δ_{k0}, δ_{k0+1}, Γ measured, Γ trained, Γ_lb, report)`.
fn sufficiency_thresholds(
    matrix: &SensingMatrix,
    signal: &SparseSignal,
    seed: u64,
    opts: &SufficiencyOptions,
) -> Result<(f64, f64, f64, Option<f64>, f64, GuaranteeReport), VerifyError> {
    let k0 = signal.k0();
    if k0 == 0 {
        return Err(VerifyError::InvalidInput("signal must be nonzero".into()));
    }
    let delta_k0 = ric_bruteforce(matrix, k0)?.delta_k;
    let delta_k0plus1 = ric_bruteforce(matrix, k0 + 1)?.delta_k;
    let bound = 1.0 / ((k0 + 1) as f64).sqrt();
    if delta_k0plus1 >= bound {
        return Err(VerifyError::PremiseUnmet { delta: delta_k0plus1, bound });
    }
    let gamma = match opts.gamma {
        Some(g) => g,
        None => measure_gamma_alg(matrix, opts.algorithm, opts.measure_runs, seed ^ 0x5eed_0001)?,
    };
    let trained = if opts.ntr > 0 {
        Some(train_gamma_lb(matrix.n(), matrix.p(), opts.ntr, opts.algorithm, seed ^ 0x5eed_0002)?.value)
    } else {
        None
    };
    let gamma_lb = opts.gamma_lb.unwrap_or_else(|| trained.map_or(gamma, |t| t.min(gamma)));
    let report = guarantee_thresholds(&GuaranteeInputs {
        delta_ksup: delta_k0,
        beta_min: signal.beta_min(),
        beta_max: signal.beta_max(),
        gamma,
        gamma_lb,
        delta_k0plus1,
        k0,
    })?;
    Ok((delta_k0, delta_k0plus1, gamma, trained, gamma_lb, report))
}

/// The noise level below which TF and RRT must both recover `signal`.
pub fn sufficient_noise_level(
    matrix: &SensingMatrix,
    signal: &SparseSignal,
    seed: u64,
    opts: &SufficiencyOptions,
) -> Result<f64, VerifyError> {
    let (.., report) = sufficiency_thresholds(matrix, signal, seed, opts)?;
    Ok(combined_threshold(&report))
}

fn combined_threshold(report: &GuaranteeReport) -> f64 {
    let tf = report.tf_threshold().expect("premise checked");
    let rrt = report.rrt_threshold().expect("premise checked");
    tf.min(rrt)
}

/// Runs `trials` bounded-noise instances `y = Xβ + w`, `||w|| = eps2`, and
/// checks that TF and RRT recover the support whenever the sufficient
/// conditions hold.
///
/// Above the threshold the failures are only reported, since the conditions
/// are one-sided.
pub fn verify_sufficient_recovery(
    matrix: &SensingMatrix,
    signal: &SparseSignal,
    eps2: f64,
    trials: usize,
    seed: u64,
    opts: &SufficiencyOptions,
) -> Result<SufficiencyReport, VerifyError> {
    if !(eps2 >= 0.0 && eps2.is_finite()) {
        return Err(VerifyError::InvalidInput(format!("eps2 must be finite and nonnegative, got {eps2}")));
    }
    if signal.p() != matrix.p() {
        return Err(VerifyError::InvalidInput("signal length differs from matrix width".into()));
    }
    let (delta_k0, delta_k0plus1, gamma, trained, gamma_lb, report) =
        sufficiency_thresholds(matrix, signal, seed, opts)?;
    let threshold = combined_threshold(&report);
    let asserted = eps2 < threshold;
    let clean = matrix.mul_vec(signal.beta());
    let kmax = default_kmax(matrix.n());

    let per_trial: Vec<Vec<Counterexample>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let noise = sphere_point(matrix.n(), eps2, &mut stream(seed, &[t as u64]));
            let y: Vec<f64> = clean.iter().zip(&noise).map(|(c, w)| c + w).collect();
            let trace = run_pursuit(opts.algorithm, matrix, &y, kmax)?;
            let mut bad = Vec::new();
            for (kind, sel) in [(SelectorKind::Tf, select_tf(&trace)?), (SelectorKind::Rrt, select_rrt(&trace, gamma_lb)?)] {
                let support_hat = sel.support(&trace).to_vec();
                if crate::problems::pe_indicator(signal.support(), &support_hat) == 1 {
                    bad.push(Counterexample { trial: t, selector: kind, support_hat, noise: noise.clone(), y: y.clone() });
                }
            }
            Ok(bad)
        })
        .collect::<Result<_, VerifyError>>()?;
    let counterexamples: Vec<Counterexample> = per_trial.into_iter().flatten().collect();
    let count = |k| counterexamples.iter().filter(|c| c.selector == k).count();
    let (tf_failures, rrt_failures) = (count(SelectorKind::Tf), count(SelectorKind::Rrt));
    Ok(SufficiencyReport {
        k0: signal.k0(),
        support: signal.support().to_vec(),
        eps2,
        delta_k0,
        delta_k0plus1,
        gamma_measured: gamma,
        gamma_trained: trained,
        gamma_lb,
        guarantee: report,
        threshold,
        asserted,
        trials,
        tf_failures,
        rrt_failures,
        pass: !asserted || counterexamples.is_empty(),
        counterexamples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RicInequalityReport {
    pub k: usize,
    pub delta_k: f64,
    pub draws: usize,
    /// Largest `||X_{J1}ᵀ X_{J2} a|| / ||a||` seen; must not exceed `δ_k`.
    pub worst_cross_ratio: f64,
    /// Extremes of `||(I - P_{J1}) X_{J2} a||² / ||a||²`; must stay in
    /// `[1 - δ_k, 1 + δ_k]`.
    pub min_sandwich_ratio: f64,
    pub max_sandwich_ratio: f64,
    pub violations: usize,
    pub pass: bool,
}

/// Checks the cross-correlation bound and the projected-isometry sandwich on
/// random disjoint supports `J1`, `J2` with `|J1 ∪ J2| <= k`, given the exact
/// `δ_k`.
pub fn ric_inequality_spot_check(matrix: &SensingMatrix, k: usize, delta_k: f64, draws: usize, seed: u64) -> Result<RicInequalityReport, VerifyError> {
    if k < 2 || k > matrix.p() {
        return Err(VerifyError::InvalidOrder { k, max: matrix.p() });
    }
    const TOL: f64 = 1e-10;
    let mut rng = stream(seed, &[]);
    let (mut worst, mut lo, mut hi, mut violations) = (0.0_f64, f64::INFINITY, 0.0_f64, 0);
    for _ in 0..draws {
        let total = rng.random_range(2..=k);
        let idx = rand::seq::index::sample(&mut rng, matrix.p(), total).into_vec();
        let split = rng.random_range(1..total);
        let (j1, j2) = idx.split_at(split);
        let a = gaussian_entries(j2.len(), &mut rng);
        let a_norm = norm2(&a);
        let v = matrix.mul_support(j2, &a);
        let cross: Vec<f64> = j1.iter().map(|&j| dot(&matrix.column(j), &v)).collect();
        let ratio = norm2(&cross) / a_norm;
        let mut proj = v.clone();
        let state = ProjectionState::with_support(matrix, j1, &v).map_err(PursuitError::from)?;
        state.orthogonalize(&mut proj);
        let sandwich = dot(&proj, &proj) / (a_norm * a_norm);
        worst = worst.max(ratio);
        lo = lo.min(sandwich);
        hi = hi.max(sandwich);
        if ratio > delta_k + TOL || sandwich < 1.0 - delta_k - TOL || sandwich > 1.0 + delta_k + TOL {
            violations += 1;
        }
    }
    Ok(RicInequalityReport {
        k,
        delta_k,
        draws,
        worst_cross_ratio: worst,
        min_sandwich_ratio: lo,
        max_sandwich_ratio: hi,
        violations,
        pass: violations == 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HscReport {
    pub snr_db: Vec<f64>,
    pub pe: Vec<f64>,
    pub pe_stderr: Vec<f64>,
    /// PE never rises by more than one binomial standard error.
    pub monotone: bool,
    pub final_pe: f64,
    pub final_cap: f64,
    pub pass: bool,
}

/// Empirical high-SNR consistency of TF: support-error probability on
/// `[I_n, H_n]` with uniform `k0`-sparse signals must decay across `snr_db`
/// and end at or below `cap`.
pub fn hsc_check(
    n: usize,
    k0: usize,
    snr_db: &[f64],
    trials: usize,
    algorithm: Algorithm,
    cap: f64,
    seed: u64,
) -> Result<HscReport, VerifyError> {
    let config = ExperimentConfig {
        matrix: MatrixKind::IdentityHadamard { n },
        signal_model: SignalModel::Uniform,
        noise_model: NoiseModel::Gaussian,
        k0_list: vec![k0],
        snr_db_list: snr_db.to_vec(),
        trials,
        algorithm,
        selectors: vec![SelectorKind::Tf],
        threshold: ThresholdSource::Value(1.0),
    };
    let mut records = run_experiment(&config, seed, 0)?;
    records.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
    let pe: Vec<f64> = records.iter().map(|r| r.pe_mean).collect();
    let se: Vec<f64> = records.iter().map(|r| r.pe_stderr()).collect();
    let monotone = (1..pe.len()).all(|i| pe[i] <= pe[i - 1] + se[i].max(se[i - 1]));
    let final_pe = *pe.last().expect("nonempty grid");
    Ok(HscReport {
        snr_db: records.iter().map(|r| r.snr_db).collect(),
        pe,
        pe_stderr: se,
        monotone,
        final_pe,
        final_cap: cap,
        pass: monotone && final_pe <= cap,
    })
}
