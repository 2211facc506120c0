//! Incremental greedy pursuits: orthogonal matching pursuit (OMP) and
//! orthogonal least squares (OLS).
//!
//! Both add one column per iteration to a nested support and record the whole
//! solution path in a [`PursuitTrace`]: supports, residual norms and residual
//! ratios `RR(k) = ||r_k|| / ||r_{k-1}||`. A single run to `k_max` is enough for
//! every selector in [`crate::selectors`].
//!
//! Ties in the greedy choice go to the smallest column index.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{norm2, LinalgError, ProjectionState, SensingMatrix};

/// Below this squared norm the incremental `||(I - P) X_t||^2` is recomputed
/// explicitly, since `1 - sum(proj^2)` loses all accuracy there.
const OLS_RECOMPUTE_BELOW: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PursuitError {
    #[error("observation vector is identically zero")]
    ZeroObservation,
    #[error("observation has length {got}, matrix has {expected} rows")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("every remaining column is numerically in the span of the support")]
    AllColumnsDependent,
    #[error("k_max = {kmax} is invalid for n = {n}")]
    InvalidKmax { kmax: usize, n: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Omp,
    Ols,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Omp => "omp",
            Algorithm::Ols => "ols",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "omp" => Ok(Algorithm::Omp),
            "ols" => Ok(Algorithm::Ols),
            other => Err(format!("unknown algorithm '{other}' (expected omp or ols)")),
        }
    }
}

/// Maximum number of pursuit iterations, `1 <= k_max <= n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KMax(usize);

impl KMax {
    /// `floor((n + 1) / 2)`.
    pub fn default_for(n: usize) -> Self {
        assert!(n >= 1, "k_max needs at least one row");
        KMax((n + 1) / 2)
    }

    pub fn new(value: usize, n: usize) -> Result<Self, PursuitError> {
        if value >= 1 && value <= n {
            Ok(KMax(value))
        } else {
            Err(PursuitError::InvalidKmax { kmax: value, n })
        }
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// `floor((n + 1) / 2)`.
pub fn default_kmax(n: usize) -> KMax {
    KMax::default_for(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ReachedKmax,
    ResidualZero,
    RankDeficient,
}

/// Solution path of one pursuit run.
///
/// `support(k)` is the ordered support after `k` iterations,
/// `residual_norms()[k]` is `||r_k||` (entry 0 is `||y||`) and `rr(k)` is the
/// residual ratio at iteration `k >= 1`. An iteration that drives the residual
/// below the zero threshold is recorded with residual norm and ratio exactly 0
/// and ends the run.
#[derive(Debug, Clone, PartialEq)]
pub struct PursuitTrace {
    algorithm: Algorithm,
    n: usize,
    p: usize,
    order: Vec<usize>,
    residual_norms: Vec<f64>,
    rr: Vec<f64>,
    termination: Termination,
}

impl PursuitTrace {
    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    /// Rows of the design matrix the trace was computed on.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Last completed iteration.
    pub fn k_reached(&self) -> usize {
        self.order.len()
    }

    /// Column indices in the order they were selected.
    pub fn selection_order(&self) -> &[usize] {
        &self.order
    }

    /// Support after `k` iterations.
    pub fn support(&self, k: usize) -> &[usize] {
        &self.order[..k]
    }

    pub fn residual_norms(&self) -> &[f64] {
        &self.residual_norms
    }

    /// `RR(k)` for `1 <= k <= k_reached`.
    pub fn rr(&self, k: usize) -> f64 {
        assert!(k >= 1 && k <= self.rr.len(), "RR(k) defined for 1 <= k <= k_reached");
        self.rr[k - 1]
    }

    /// `[RR(1), ..., RR(k_reached)]`.
    pub fn rr_values(&self) -> &[f64] {
        &self.rr
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    /// `min_k RR(k)`, or `None` for an empty trace.
    pub fn min_rr(&self) -> Option<f64> {
        self.rr.iter().copied().reduce(f64::min)
    }
}

#[derive(Serialize, Deserialize)]
struct TraceJson {
    algorithm: Algorithm,
    n: usize,
    p: usize,
    supports: Vec<Vec<usize>>,
    residual_norms: Vec<f64>,
    rr: Vec<f64>,
    termination: Termination,
}

impl Serialize for PursuitTrace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TraceJson {
            algorithm: self.algorithm,
            n: self.n,
            p: self.p,
            supports: (0..=self.k_reached()).map(|k| self.support(k).to_vec()).collect(),
            residual_norms: self.residual_norms.clone(),
            rr: self.rr.clone(),
            termination: self.termination,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PursuitTrace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let t = TraceJson::deserialize(d)?;
        let k = t.rr.len();
        if t.supports.len() != k + 1 || t.residual_norms.len() != k + 1 {
            return Err(D::Error::custom("supports, rr and residual_norms lengths disagree"));
        }
        let mut order = Vec::with_capacity(k);
        for (i, s) in t.supports.iter().enumerate() {
            if s.len() != i || s[..order.len()] != order[..] {
                return Err(D::Error::custom("supports are not nested"));
            }
            if let Some(&j) = s.last() {
                order.push(j);
            }
        }
        Ok(PursuitTrace {
            algorithm: t.algorithm,
            n: t.n,
            p: t.p,
            order,
            residual_norms: t.residual_norms,
            rr: t.rr,
            termination: t.termination,
        })
    }
}

/// OMP choice: `argmax_{t not in S} |X_t^T r|`.
///
/// Returns `None` when every column is already selected.
pub fn select_next_omp(matrix: &SensingMatrix, state: &ProjectionState) -> Option<usize> {
    let corr = matrix.correlate(state.residual());
    argmax_outside(&corr, state.support(), |c| c.abs())
}

fn argmax_outside(values: &[f64], support: &[usize], score: impl Fn(f64) -> f64) -> Option<usize> {
    let mut taken = vec![false; values.len()];
    for &j in support {
        taken[j] = true;
    }
    let mut best: Option<(usize, f64)> = None;
    for (j, v) in values.iter().enumerate() {
        if taken[j] {
            continue;
        }
        let s = score(*v);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((j, s));
        }
    }
    best.map(|(j, _)| j)
}

/// OLS choice: the admissible column minimizing `||(I - P_{S u t}) y||`.
///
/// Uses `||(I - P_{S u t}) y||^2 = ||r||^2 - (X_t^T r)^2 / ||b_t||^2` with
/// `b_t = (I - P_S) X_t`; columns with `||b_t|| < RANK_TOL` are skipped.
pub fn select_next_ols(matrix: &SensingMatrix, state: &ProjectionState, y: &[f64]) -> Result<usize, PursuitError> {
    if y.len() != matrix.n() {
        return Err(PursuitError::DimensionMismatch { expected: matrix.n(), got: y.len() });
    }
    let mut proj_sq = vec![0.0; matrix.p()];
    for q in state.basis() {
        for (acc, c) in proj_sq.iter_mut().zip(matrix.correlate(q)) {
            *acc += c * c;
        }
    }
    let col_sq: Vec<f64> = (0..matrix.p()).map(|j| matrix.column_norm_sq(j)).collect();
    ols_choice(matrix, state, &proj_sq, &col_sq)
}

fn ols_choice(
    matrix: &SensingMatrix,
    state: &ProjectionState,
    proj_sq: &[f64],
    col_sq: &[f64],
) -> Result<usize, PursuitError> {
    let corr = matrix.correlate(state.residual());
    let mut taken = vec![false; matrix.p()];
    for &j in state.support() {
        taken[j] = true;
    }
    let mut best: Option<(usize, f64)> = None;
    for j in 0..matrix.p() {
        if taken[j] {
            continue;
        }
        let mut b_sq = col_sq[j] - proj_sq[j];
        if b_sq < OLS_RECOMPUTE_BELOW {
            let mut b = matrix.column(j);
            state.orthogonalize(&mut b);
            b_sq = b.iter().map(|v| v * v).sum();
        }
        if b_sq.sqrt() < crate::linalg::RANK_TOL {
            continue;
        }
        let gain = corr[j] * corr[j] / b_sq;
        if best.is_none_or(|(_, g)| gain > g) {
            best = Some((j, gain));
        }
    }
    best.map(|(j, _)| j).ok_or(PursuitError::AllColumnsDependent)
}

/// Step-by-step pursuit engine.
///
/// Holds the projection state plus, for OLS, the running
/// `sum_i (q_i^T X_t)^2` for every column.
pub struct Pursuit<'a> {
    algorithm: Algorithm,
    matrix: &'a SensingMatrix,
    y: &'a [f64],
    state: ProjectionState,
    proj_sq: Vec<f64>,
    col_sq: Vec<f64>,
}

/// Why a pursuit could not take another step.
#[derive(Debug, Clone, PartialEq)]
pub enum StepError {
    Exhausted,
    RankDeficient,
}

impl<'a> Pursuit<'a> {
    pub fn new(algorithm: Algorithm, matrix: &'a SensingMatrix, y: &'a [f64]) -> Result<Self, PursuitError> {
        if y.len() != matrix.n() {
            return Err(PursuitError::DimensionMismatch { expected: matrix.n(), got: y.len() });
        }
        if norm2(y) == 0.0 {
            return Err(PursuitError::ZeroObservation);
        }
        let (proj_sq, col_sq) = match algorithm {
            Algorithm::Omp => (Vec::new(), Vec::new()),
            Algorithm::Ols => (vec![0.0; matrix.p()], (0..matrix.p()).map(|j| matrix.column_norm_sq(j)).collect()),
        };
        Ok(Pursuit { algorithm, matrix, y, state: ProjectionState::new(y), proj_sq, col_sq })
    }

    /// Starts from an existing support, as if those columns had been chosen
    /// by earlier iterations.
    pub fn warm_start(
        algorithm: Algorithm,
        matrix: &'a SensingMatrix,
        y: &'a [f64],
        support: &[usize],
    ) -> Result<Self, PursuitError> {
        let mut p = Pursuit::new(algorithm, matrix, y)?;
        for &j in support {
            p.push(j)?;
        }
        Ok(p)
    }

    pub fn state(&self) -> &ProjectionState {
        &self.state
    }

    fn push(&mut self, index: usize) -> Result<(), LinalgError> {
        self.state.extend(self.matrix, index, self.y)?;
        if self.algorithm == Algorithm::Ols {
            let q = self.state.basis().last().expect("just pushed");
            for (acc, c) in self.proj_sq.iter_mut().zip(self.matrix.correlate(q)) {
                *acc += c * c;
            }
        }
        Ok(())
    }

    /// Picks the next column without adding it.
    pub fn next_index(&self) -> Result<usize, StepError> {
        if self.state.len() >= self.matrix.p() {
            return Err(StepError::Exhausted);
        }
        match self.algorithm {
            Algorithm::Omp => select_next_omp(self.matrix, &self.state).ok_or(StepError::Exhausted),
            Algorithm::Ols => {
                ols_choice(self.matrix, &self.state, &self.proj_sq, &self.col_sq).map_err(|_| StepError::RankDeficient)
            }
        }
    }

    /// One iteration: select, extend, return the chosen index.
    pub fn step(&mut self) -> Result<usize, StepError> {
        let index = self.next_index()?;
        self.push(index).map_err(|_| StepError::RankDeficient)?;
        Ok(index)
    }

    /// Runs until `kmax` total support size, a zero residual, or rank
    /// deficiency, and returns the trace of the iterations taken here.
    pub fn run_to(mut self, kmax: KMax) -> PursuitTrace {
        let mut order = Vec::new();
        let mut norms = vec![self.state.residual_norm()];
        let mut rr = Vec::new();
        let target = kmax.get().min(self.matrix.p());
        let mut termination = Termination::ReachedKmax;
        while self.state.len() < target {
            let prev = self.state.residual_norm();
            match self.step() {
                Ok(j) => order.push(j),
                Err(StepError::RankDeficient) => {
                    termination = Termination::RankDeficient;
                    break;
                }
                Err(StepError::Exhausted) => break,
            }
            if self.state.residual_is_zero() {
                norms.push(0.0);
                rr.push(0.0);
                termination = Termination::ResidualZero;
                break;
            }
            let cur = self.state.residual_norm();
            norms.push(cur);
            rr.push(cur / prev);
        }
        PursuitTrace {
            algorithm: self.algorithm,
            n: self.matrix.n(),
            p: self.matrix.p(),
            order,
            residual_norms: norms,
            rr,
            termination,
        }
    }
}

/// Runs OMP or OLS on `(y, X)` for up to `kmax` iterations.
pub fn run_pursuit(algorithm: Algorithm, matrix: &SensingMatrix, y: &[f64], kmax: KMax) -> Result<PursuitTrace, PursuitError> {
    Ok(Pursuit::new(algorithm, matrix, y)?.run_to(kmax))
}
