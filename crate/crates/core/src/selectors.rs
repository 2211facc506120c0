//! Choosing the iteration count from a pursuit trace.
//!
//! Two rules need no knowledge of the noise or the sparsity:
//!
//! * **TF** picks `k = argmin_k RR(k)`.
//! * **RRT** picks the last `k` with `RR(k) < Γ` for a threshold `Γ` from
//!   [`crate::thresholds`].
//!
//! The oracle baselines use information a practitioner usually lacks: the true
//! sparsity `k0`, the Gaussian noise level `σ`, or a bound `ε₂` on `||w||`.
//!
//! Every rule works on the trace alone and returns a [`Selection`]; turning it
//! into coefficients needs the matrix and the observation
//! ([`Selection::estimate`]).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{least_squares_on_support, LinalgError, SensingMatrix};
use crate::pursuit::PursuitTrace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectorError {
    #[error("trace has no completed iteration")]
    EmptyTrace,
    #[error("k0 = {k0} exceeds the {k_reached} iterations in the trace")]
    K0ExceedsTrace { k0: usize, k_reached: usize },
    #[error("threshold must lie in (0, 1], got {0}")]
    InvalidGamma(f64),
    #[error("noise standard deviation must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("noise bound must be nonnegative, got {0}")]
    InvalidEps(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectorKind {
    Tf,
    Rrt,
    OracleK0,
    OracleSigma,
    OracleEps,
}

impl SelectorKind {
    pub const ALL: [SelectorKind; 5] =
        [SelectorKind::Tf, SelectorKind::Rrt, SelectorKind::OracleK0, SelectorKind::OracleSigma, SelectorKind::OracleEps];

    pub fn name(self) -> &'static str {
        match self {
            SelectorKind::Tf => "tf",
            SelectorKind::Rrt => "rrt",
            SelectorKind::OracleK0 => "oracle-k0",
            SelectorKind::OracleSigma => "oracle-sigma",
            SelectorKind::OracleEps => "oracle-eps",
        }
    }
}

impl std::fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SelectorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        SelectorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown selector '{s}' (expected tf, rrt, oracle-k0, oracle-sigma or oracle-eps)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flag {
    /// The stopping statistic never crossed its threshold.
    NoThresholdCrossing,
}

/// A selector together with its parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selector {
    Tf,
    Rrt { gamma: f64 },
    OracleK0 { k0: usize },
    OracleSigma { sigma: f64 },
    OracleEps { eps2: f64 },
}

impl Selector {
    pub fn kind(&self) -> SelectorKind {
        match self {
            Selector::Tf => SelectorKind::Tf,
            Selector::Rrt { .. } => SelectorKind::Rrt,
            Selector::OracleK0 { .. } => SelectorKind::OracleK0,
            Selector::OracleSigma { .. } => SelectorKind::OracleSigma,
            Selector::OracleEps { .. } => SelectorKind::OracleEps,
        }
    }

    pub fn select(&self, trace: &PursuitTrace) -> Result<Selection, SelectorError> {
        match *self {
            Selector::Tf => select_tf(trace),
            Selector::Rrt { gamma } => select_rrt(trace, gamma),
            Selector::OracleK0 { k0 } => select_oracle_k0(trace, k0),
            Selector::OracleSigma { sigma } => select_oracle_sigma(trace, sigma),
            Selector::OracleEps { eps2 } => select_oracle_eps(trace, eps2),
        }
    }
}

/// Iteration chosen by a selector, before coefficients are fitted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub selector: SelectorKind,
    pub k_hat: usize,
    pub flags: Vec<Flag>,
}

impl Selection {
    fn plain(selector: SelectorKind, k_hat: usize) -> Self {
        Selection { selector, k_hat, flags: Vec::new() }
    }

    fn flagged(selector: SelectorKind, k_hat: usize) -> Self {
        Selection { selector, k_hat, flags: vec![Flag::NoThresholdCrossing] }
    }

    pub fn support<'t>(&self, trace: &'t PursuitTrace) -> &'t [usize] {
        trace.support(self.k_hat)
    }

    /// Least-squares fit on the chosen support, zero elsewhere.
    pub fn estimate(&self, trace: &PursuitTrace, matrix: &SensingMatrix, y: &[f64]) -> Result<SelectorResult, SelectorError> {
        let support = self.support(trace).to_vec();
        let mut beta_hat = vec![0.0; matrix.p()];
        if !support.is_empty() {
            let coef = least_squares_on_support(matrix, &support, y)?;
            for (&j, c) in support.iter().zip(coef) {
                beta_hat[j] = c;
            }
        }
        Ok(SelectorResult { selector: self.selector, k_hat: self.k_hat, support, beta_hat, flags: self.flags.clone() })
    }
}

/// Final estimate of one selector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectorResult {
    pub selector: SelectorKind,
    pub k_hat: usize,
    pub support: Vec<usize>,
    #[serde(skip)]
    pub beta_hat: Vec<f64>,
    pub flags: Vec<Flag>,
}

/// `argmin_k rr[k-1]`, ties to the smallest `k`. `None` on empty input.
pub fn tf_k(rr: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in rr.iter().enumerate() {
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i + 1, v));
        }
    }
    best.map(|(k, _)| k)
}

/// `max{k : rr[k-1] < gamma}`, or `None` if no ratio is below `gamma`.
pub fn rrt_k(rr: &[f64], gamma: f64) -> Option<usize> {
    rr.iter().rposition(|&v| v < gamma).map(|i| i + 1)
}

/// First `k` with `norms[k] <= bound`.
pub fn first_below(norms: &[f64], bound: f64) -> Option<usize> {
    norms.iter().position(|&v| v <= bound)
}

/// `σ sqrt(n + 2 sqrt(n ln n))`, the residual level Gaussian noise stays
/// below with probability at least `1 - 1/n`.
pub fn sigma_stop_threshold(sigma: f64, n: usize) -> f64 {
    let n = n as f64;
    sigma * (n + 2.0 * (n * n.ln()).sqrt()).sqrt()
}

pub fn select_tf(trace: &PursuitTrace) -> Result<Selection, SelectorError> {
    let k = tf_k(trace.rr_values()).ok_or(SelectorError::EmptyTrace)?;
    Ok(Selection::plain(SelectorKind::Tf, k))
}

/// With no crossing the result is the empty support with
/// [`Flag::NoThresholdCrossing`], the signature of a noise-only observation.
pub fn select_rrt(trace: &PursuitTrace, gamma: f64) -> Result<Selection, SelectorError> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(SelectorError::InvalidGamma(gamma));
    }
    if trace.k_reached() == 0 {
        return Err(SelectorError::EmptyTrace);
    }
    Ok(match rrt_k(trace.rr_values(), gamma) {
        Some(k) => Selection::plain(SelectorKind::Rrt, k),
        None => Selection::flagged(SelectorKind::Rrt, 0),
    })
}

pub fn select_oracle_k0(trace: &PursuitTrace, k0: usize) -> Result<Selection, SelectorError> {
    if k0 > trace.k_reached() {
        return Err(SelectorError::K0ExceedsTrace { k0, k_reached: trace.k_reached() });
    }
    Ok(Selection::plain(SelectorKind::OracleK0, k0))
}

/// Stops at the first iteration `k >= 1` whose residual is below
/// [`sigma_stop_threshold`] for the trace's row count.
pub fn select_oracle_sigma(trace: &PursuitTrace, sigma: f64) -> Result<Selection, SelectorError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(SelectorError::InvalidSigma(sigma));
    }
    Ok(residual_rule(SelectorKind::OracleSigma, trace, sigma_stop_threshold(sigma, trace.n()), 1))
}

/// Stops at the first `k >= 0` with `||r_k|| <= eps2`.
pub fn select_oracle_eps(trace: &PursuitTrace, eps2: f64) -> Result<Selection, SelectorError> {
    if !(eps2 >= 0.0 && eps2.is_finite()) {
        return Err(SelectorError::InvalidEps(eps2));
    }
    Ok(residual_rule(SelectorKind::OracleEps, trace, eps2, 0))
}

fn residual_rule(kind: SelectorKind, trace: &PursuitTrace, bound: f64, start: usize) -> Selection {
    let norms = trace.residual_norms();
    match first_below(&norms[start.min(norms.len())..], bound) {
        Some(k) => Selection::plain(kind, k + start),
        None => Selection::flagged(kind, trace.k_reached()),
    }
}
