//! Universal lower bounds on the residual ratio of noise-only iterations.
//!
//! RRT needs a threshold `Γ` that the residual ratio of an iteration which
//! only fits noise rarely falls below. Two constructions are provided:
//!
//! * [`gamma_rrt_alpha`]: an analytic bound from Beta quantiles,
//!   `Γ^α = min_{k ≤ k_max} sqrt(F⁻¹_{(n-k)/2, 1/2}(α / (k_max (p - k + 1))))`.
//!   The probability that some noise-only ratio drops below it is at most `α`.
//! * [`train_gamma_lb`]: the smallest residual ratio observed over `ntr`
//!   pursuits run on pure Gaussian noise with freshly drawn Gaussian
//!   matrices. Typically much tighter than the analytic bound.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::betafn::{beta_inv_cdf, BetaError, BetaParams};
use crate::problems::{gaussian_entries, gaussian_matrix, gen_identity_hadamard, ProblemError};
use crate::pursuit::{default_kmax, run_pursuit, Algorithm, KMax, PursuitError};
use crate::rng::stream;

#[derive(Debug, Error)]
pub enum ThresholdError {
    #[error("invalid dimensions n = {n}, p = {p}, k_max = {kmax}: need k_max < n and k_max <= p")]
    InvalidDims { n: usize, p: usize, kmax: usize },
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("training needs at least one sample")]
    NoSamples,
    #[error(transparent)]
    Beta(#[from] BetaError),
    #[error(transparent)]
    Pursuit(#[from] PursuitError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("threshold cache {path}: {source}")]
    Cache { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    Analytic { alpha: f64 },
    Trained { ntr: usize, seed: u64, algorithm: Algorithm },
    /// Supplied directly by the user.
    Fixed,
}

/// A threshold value together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub kind: ThresholdKind,
    pub n: usize,
    pub p: usize,
    pub kmax: usize,
    pub value: f64,
}

/// Analytic threshold `Γ^α` for an `n x p` design run to `kmax` iterations.
pub fn gamma_rrt_alpha(n: usize, p: usize, kmax: KMax, alpha: f64) -> Result<ThresholdSpec, ThresholdError> {
    let km = kmax.get();
    if km >= n || km > p {
        return Err(ThresholdError::InvalidDims { n, p, kmax: km });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ThresholdError::InvalidAlpha(alpha));
    }
    let mut value = f64::INFINITY;
    for k in 1..=km {
        let params = BetaParams::new((n - k) as f64 / 2.0, 0.5)?;
        let q = alpha / (km as f64 * (p - k + 1) as f64);
        value = value.min(beta_inv_cdf(params, q)?.sqrt());
    }
    Ok(ThresholdSpec { kind: ThresholdKind::Analytic { alpha }, n, p, kmax: km, value })
}

/// Matrix ensemble used for training draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrainingMatrix {
    /// A fresh Gaussian matrix per sample.
    #[default]
    Gaussian,
    /// The fixed `[I_n, H_n]` dictionary (`p` must be `2n`).
    IdentityHadamard,
}

/// `min_k RR(k)` of each training sample `s = 0..ntr`.
///
/// Sample `s` draws from its own stream, so the first `m` minima do not
/// depend on `ntr`.
pub fn training_minima(
    n: usize,
    p: usize,
    ntr: usize,
    algorithm: Algorithm,
    seed: u64,
    ensemble: TrainingMatrix,
) -> Result<Vec<f64>, ThresholdError> {
    if n == 0 || p == 0 {
        return Err(ThresholdError::InvalidDims { n, p, kmax: 0 });
    }
    let kmax = default_kmax(n);
    let fixed = match ensemble {
        TrainingMatrix::Gaussian => None,
        TrainingMatrix::IdentityHadamard => {
            let x = gen_identity_hadamard(n)?;
            if x.p() != p {
                return Err(ThresholdError::InvalidDims { n, p, kmax: kmax.get() });
            }
            Some(x)
        }
    };
    (0..ntr)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream(seed, &[s as u64]);
            let drawn;
            let x = match &fixed {
                Some(x) => x,
                None => {
                    drawn = gaussian_matrix(n, p, &mut rng);
                    &drawn
                }
            };
            let y = gaussian_entries(n, &mut rng);
            let trace = run_pursuit(algorithm, x, &y, kmax)?;
            Ok(trace.min_rr().unwrap_or(1.0))
        })
        .collect()
}

/// Noise-assisted trained threshold: the minimum of [`training_minima`].
pub fn train_gamma_lb(n: usize, p: usize, ntr: usize, algorithm: Algorithm, seed: u64) -> Result<ThresholdSpec, ThresholdError> {
    train_gamma_lb_with(n, p, ntr, algorithm, seed, TrainingMatrix::Gaussian)
}

pub fn train_gamma_lb_with(
    n: usize,
    p: usize,
    ntr: usize,
    algorithm: Algorithm,
    seed: u64,
    ensemble: TrainingMatrix,
) -> Result<ThresholdSpec, ThresholdError> {
    if ntr == 0 {
        return Err(ThresholdError::NoSamples);
    }
    let value = training_minima(n, p, ntr, algorithm, seed, ensemble)?.into_iter().fold(f64::INFINITY, f64::min);
    Ok(ThresholdSpec {
        kind: ThresholdKind::Trained { ntr, seed, algorithm },
        n,
        p,
        kmax: default_kmax(n).get(),
        value,
    })
}

/// `"n:p:alg:ntr:seed"`.
pub fn cache_key(n: usize, p: usize, algorithm: Algorithm, ntr: usize, seed: u64) -> String {
    format!("{n}:{p}:{algorithm}:{ntr}:{seed}")
}

/// JSON file mapping [`cache_key`] strings to trained values.
#[derive(Debug, Clone, Default)]
pub struct ThresholdCache {
    path: PathBuf,
    entries: BTreeMap<String, f64>,
}

impl ThresholdCache {
    /// Opens `path`; a missing file is an empty cache.
    pub fn open(path: &Path) -> Result<Self, ThresholdError> {
        let err = |source| ThresholdError::Cache { path: path.to_path_buf(), source };
        let entries = match std::fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| err(std::io::Error::other(e)))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
            Err(e) => return Err(err(e)),
        };
        Ok(ThresholdCache { path: path.to_path_buf(), entries })
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.entries.get(key).copied()
    }

    pub fn insert(&mut self, key: String, value: f64) {
        self.entries.insert(key, value);
    }

    pub fn entries(&self) -> &BTreeMap<String, f64> {
        &self.entries
    }

    pub fn save(&self) -> Result<(), ThresholdError> {
        let err = |source| ThresholdError::Cache { path: self.path.clone(), source };
        let text = serde_json::to_string_pretty(&self.entries).map_err(|e| err(std::io::Error::other(e)))?;
        let tmp = self.path.with_extension("tmp");
        std::fs::write(&tmp, text + "\n").map_err(err)?;
        std::fs::rename(&tmp, &self.path).map_err(err)
    }

    /// Cached value if present, otherwise trains, stores and saves.
    /// The flag reports a cache hit.
    pub fn train(
        &mut self,
        n: usize,
        p: usize,
        ntr: usize,
        algorithm: Algorithm,
        seed: u64,
    ) -> Result<(ThresholdSpec, bool), ThresholdError> {
        let key = cache_key(n, p, algorithm, ntr, seed);
        let kind = ThresholdKind::Trained { ntr, seed, algorithm };
        if let Some(value) = self.get(&key) {
            let spec = ThresholdSpec { kind, n, p, kmax: default_kmax(n).get(), value };
            return Ok((spec, true));
        }
        let spec = train_gamma_lb(n, p, ntr, algorithm, seed)?;
        self.insert(key, spec.value);
        self.save()?;
        Ok((spec, false))
    }
}
