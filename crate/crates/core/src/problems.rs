//! Test problems: sensing matrices, sparse signals, noise at a target SNR, and
//! the two error metrics.
//!
//! SNR follows the usual conventions for the two noise models:
//!
//! * Gaussian: `SNR = ||Xβ||² / (n σ²)`, noise `w ~ N(0, σ² I)`.
//! * ℓ2-bounded: `SNR = ||Xβ||² / ε₂²`, noise drawn uniformly on the sphere
//!   `||w|| = ε₂`, the worst case of the bound.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{self, IoError};
use crate::linalg::{norm2, normalize_columns, SensingMatrix};
use crate::rng::stream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("identity-Hadamard dictionaries need n to be a power of two, got {0}")]
    NotPowerOfTwo(usize),
    #[error("sparsity k0 = {k0} exceeds signal length p = {p}")]
    K0TooLarge { k0: usize, p: usize },
    #[error("explicit signal has {got} values/indices for k0 = {k0}")]
    ExplicitLength { k0: usize, got: usize },
    #[error("explicit support index {index} is out of range or repeated")]
    BadSupportIndex { index: usize },
    #[error("explicit signal contains a zero coefficient")]
    ZeroCoefficient,
    #[error("operation needs a nonzero signal")]
    ZeroSignal,
    #[error("noise level must be finite and nonnegative, got {0}")]
    BadNoiseLevel(f64),
    #[error("signal length {signal} does not match matrix width {matrix}")]
    DimensionMismatch { matrix: usize, signal: usize },
}

/// Matrix with i.i.d. `N(0, 1)` entries and unit-norm columns.
pub fn gen_gaussian_matrix(n: usize, p: usize, seed: u64) -> SensingMatrix {
    gaussian_matrix(n, p, &mut stream(seed, &[]))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> SensingMatrix {
    assert!(n >= 1 && p >= 1, "matrix dimensions must be positive");
    loop {
        let data = gaussian_entries(n * p, rng);
        // a zero column has probability zero; redraw rather than fail
        if let Ok(m) = normalize_columns(n, p, data) {
            return m;
        }
    }
}

/// `len` i.i.d. standard normal draws.
pub fn gaussian_entries<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Sylvester–Hadamard matrix of order `n` with entries `±1` (unnormalized),
/// row-major.
pub fn sylvester_hadamard(n: usize) -> Result<Vec<f64>, ProblemError> {
    if n == 0 || !n.is_power_of_two() {
        return Err(ProblemError::NotPowerOfTwo(n));
    }
    let mut h = vec![1.0];
    let mut m = 1;
    while m < n {
        let mut next = vec![0.0; 4 * m * m];
        for i in 0..m {
            for j in 0..m {
                let v = h[i * m + j];
                next[i * 2 * m + j] = v;
                next[i * 2 * m + j + m] = v;
                next[(i + m) * 2 * m + j] = v;
                next[(i + m) * 2 * m + j + m] = -v;
            }
        }
        h = next;
        m *= 2;
    }
    Ok(h)
}

/// `X = [I_n, H_n]` with `H_n` the normalized Sylvester–Hadamard matrix.
pub fn gen_identity_hadamard(n: usize) -> Result<SensingMatrix, ProblemError> {
    let h = sylvester_hadamard(n)?;
    let p = 2 * n;
    let scale = 1.0 / (n as f64).sqrt();
    let mut data = vec![0.0; n * p];
    for i in 0..n {
        data[i * p + i] = 1.0;
        for j in 0..n {
            data[i * p + n + j] = h[i * n + j] * scale;
        }
    }
    Ok(normalize_columns(n, p, data).expect("no zero columns"))
}

/// Largest `|X_iᵀ X_j|` over distinct columns.
pub fn mutual_coherence(matrix: &SensingMatrix) -> f64 {
    let cols: Vec<Vec<f64>> = (0..matrix.p()).map(|j| matrix.column(j)).collect();
    let mut mu: f64 = 0.0;
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            mu = mu.max(crate::linalg::dot(&cols[i], &cols[j]).abs());
        }
    }
    mu
}

/// How nonzero coefficients are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalModel {
    /// Random signs, `|β_j| = 1`.
    Uniform,
    /// `β_j ~ N(0, 1)`.
    RandomGaussian,
    /// Fixed values, assigned to the support in order.
    Explicit(Vec<f64>),
}

impl SignalModel {
    pub fn name(&self) -> &'static str {
        match self {
            SignalModel::Uniform => "uniform",
            SignalModel::RandomGaussian => "random_gaussian",
            SignalModel::Explicit(_) => "explicit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportRule {
    /// Uniform without replacement over `0..p`.
    UniformRandom,
    Explicit(Vec<usize>),
}

/// A sparse coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    beta: Vec<f64>,
    support: Vec<usize>,
    model: &'static str,
}

impl SparseSignal {
    /// Wraps an arbitrary coefficient vector.
    pub fn from_beta(beta: Vec<f64>) -> Self {
        let support = beta.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect();
        SparseSignal { beta, support, model: "explicit" }
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Ascending support indices.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn k0(&self) -> usize {
        self.support.len()
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }

    pub fn model_name(&self) -> &'static str {
        self.model
    }

    /// Smallest nonzero magnitude, 0 for the zero signal.
    pub fn beta_min(&self) -> f64 {
        self.support.iter().map(|&j| self.beta[j].abs()).reduce(f64::min).unwrap_or(0.0)
    }

    pub fn beta_max(&self) -> f64 {
        self.support.iter().map(|&j| self.beta[j].abs()).fold(0.0, f64::max)
    }

    /// `β_max / β_min`; `None` for the zero signal.
    pub fn dynamic_range(&self) -> Option<f64> {
        (self.k0() > 0).then(|| self.beta_max() / self.beta_min())
    }
}

pub fn gen_signal<R: Rng + ?Sized>(
    p: usize,
    k0: usize,
    model: &SignalModel,
    rule: &SupportRule,
    rng: &mut R,
) -> Result<SparseSignal, ProblemError> {
    if k0 > p {
        return Err(ProblemError::K0TooLarge { k0, p });
    }
    let support: Vec<usize> = match rule {
        SupportRule::UniformRandom => sample(rng, p, k0).into_vec(),
        SupportRule::Explicit(idx) => {
            if idx.len() != k0 {
                return Err(ProblemError::ExplicitLength { k0, got: idx.len() });
            }
            let mut seen = BTreeSet::new();
            for &j in idx {
                if j >= p || !seen.insert(j) {
                    return Err(ProblemError::BadSupportIndex { index: j });
                }
            }
            idx.clone()
        }
    };
    let values: Vec<f64> = match model {
        SignalModel::Uniform => (0..k0).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect(),
        SignalModel::RandomGaussian => (0..k0)
            .map(|_| loop {
                let v: f64 = rng.sample(StandardNormal);
                if v != 0.0 {
                    break v;
                }
            })
            .collect(),
        SignalModel::Explicit(v) => {
            if v.len() != k0 {
                return Err(ProblemError::ExplicitLength { k0, got: v.len() });
            }
            if v.iter().any(|&b| b == 0.0) {
                return Err(ProblemError::ZeroCoefficient);
            }
            v.clone()
        }
    };
    let mut beta = vec![0.0; p];
    for (&j, v) in support.iter().zip(values) {
        beta[j] = v;
    }
    let mut support = support;
    support.sort_unstable();
    Ok(SparseSignal { beta, support, model: model.name() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    Gaussian,
    L2Bounded,
}

impl NoiseModel {
    pub fn name(self) -> &'static str {
        match self {
            NoiseModel::Gaussian => "gaussian",
            NoiseModel::L2Bounded => "l2_bounded",
        }
    }
}

/// `y = Xβ + w` together with everything used to build it.
#[derive(Debug, Clone)]
pub struct NoisySystem {
    pub matrix: SensingMatrix,
    pub signal: SparseSignal,
    pub clean: Vec<f64>,
    pub noise: Vec<f64>,
    pub y: Vec<f64>,
    pub noise_model: NoiseModel,
    /// Target SNR in dB when the level was derived from one.
    pub snr_db: Option<f64>,
    /// Gaussian standard deviation.
    pub sigma: Option<f64>,
    /// ℓ2 bound (radius of the noise sphere).
    pub eps2: Option<f64>,
}

/// Gaussian `σ` giving `snr_db` for a clean signal of norm `clean_norm` in `n` rows.
pub fn sigma_for_snr(clean_norm: f64, n: usize, snr_db: f64) -> f64 {
    (clean_norm * clean_norm / (n as f64 * 10f64.powf(snr_db / 10.0))).sqrt()
}

/// ℓ2 bound giving `snr_db` for a clean signal of norm `clean_norm`.
pub fn eps2_for_snr(clean_norm: f64, snr_db: f64) -> f64 {
    clean_norm / 10f64.powf(snr_db / 20.0)
}

/// Adds noise at a target SNR (dB).
pub fn add_noise_at_snr<R: Rng + ?Sized>(
    matrix: &SensingMatrix,
    signal: &SparseSignal,
    snr_db: f64,
    model: NoiseModel,
    rng: &mut R,
) -> Result<NoisySystem, ProblemError> {
    check_dims(matrix, signal)?;
    let clean = matrix.mul_vec(signal.beta());
    let cn = norm2(&clean);
    if cn == 0.0 {
        return Err(ProblemError::ZeroSignal);
    }
    let level = match model {
        NoiseModel::Gaussian => sigma_for_snr(cn, matrix.n(), snr_db),
        NoiseModel::L2Bounded => eps2_for_snr(cn, snr_db),
    };
    let mut sys = assemble(matrix, signal, clean, level, model, rng)?;
    sys.snr_db = Some(snr_db);
    Ok(sys)
}

/// Adds noise at an explicit level: `σ` for Gaussian, `ε₂` for bounded.
/// Works for the zero signal.
pub fn add_noise_with_level<R: Rng + ?Sized>(
    matrix: &SensingMatrix,
    signal: &SparseSignal,
    level: f64,
    model: NoiseModel,
    rng: &mut R,
) -> Result<NoisySystem, ProblemError> {
    check_dims(matrix, signal)?;
    let clean = matrix.mul_vec(signal.beta());
    assemble(matrix, signal, clean, level, model, rng)
}

fn check_dims(matrix: &SensingMatrix, signal: &SparseSignal) -> Result<(), ProblemError> {
    if matrix.p() != signal.p() {
        return Err(ProblemError::DimensionMismatch { matrix: matrix.p(), signal: signal.p() });
    }
    Ok(())
}

fn assemble<R: Rng + ?Sized>(
    matrix: &SensingMatrix,
    signal: &SparseSignal,
    clean: Vec<f64>,
    level: f64,
    model: NoiseModel,
    rng: &mut R,
) -> Result<NoisySystem, ProblemError> {
    if !(level >= 0.0 && level.is_finite()) {
        return Err(ProblemError::BadNoiseLevel(level));
    }
    let n = matrix.n();
    let noise = match model {
        NoiseModel::Gaussian => gaussian_entries(n, rng).into_iter().map(|g| g * level).collect(),
        NoiseModel::L2Bounded => sphere_point(n, level, rng),
    };
    let y = clean.iter().zip(&noise).map(|(c, w)| c + w).collect();
    let (sigma, eps2) = match model {
        NoiseModel::Gaussian => (Some(level), None),
        NoiseModel::L2Bounded => (None, Some(level)),
    };
    Ok(NoisySystem {
        matrix: matrix.clone(),
        signal: signal.clone(),
        clean,
        noise,
        y,
        noise_model: model,
        snr_db: None,
        sigma,
        eps2,
    })
}

/// Uniform point on the sphere of the given radius in `R^n`.
pub fn sphere_point<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    if radius == 0.0 {
        return vec![0.0; n];
    }
    loop {
        let g = gaussian_entries(n, rng);
        let norm = norm2(&g);
        if norm > 0.0 {
            return g.into_iter().map(|v| v * radius / norm).collect();
        }
    }
}

/// `||β - β̂||² / ||β||²` for one trial.
pub fn nmse(beta: &[f64], beta_hat: &[f64]) -> Result<f64, ProblemError> {
    assert_eq!(beta.len(), beta_hat.len(), "coefficient vectors differ in length");
    let den: f64 = beta.iter().map(|b| b * b).sum();
    if den == 0.0 {
        return Err(ProblemError::ZeroSignal);
    }
    let num: f64 = beta.iter().zip(beta_hat).map(|(b, h)| (b - h) * (b - h)).sum();
    Ok(num / den)
}

/// 1 if the supports differ as sets, else 0.
pub fn pe_indicator(support_true: &[usize], support_hat: &[usize]) -> u8 {
    let a: BTreeSet<_> = support_true.iter().collect();
    let b: BTreeSet<_> = support_hat.iter().collect();
    u8::from(a != b)
}

#[derive(Serialize)]
struct BundleManifest<'a> {
    n: usize,
    p: usize,
    k0: usize,
    snr_db: Option<f64>,
    sigma: Option<f64>,
    eps2: Option<f64>,
    seed: u64,
    signal_model: &'a str,
    noise_model: &'a str,
    files: [&'a str; 5],
}

/// Writes `matrix.csv`, `beta.csv`, `support.csv`, `noise.csv`, `y.csv` and
/// `manifest.json` into `dir`.
pub fn write_bundle(dir: &Path, sys: &NoisySystem, seed: u64) -> Result<(), IoError> {
    std::fs::create_dir_all(dir)?;
    let m = &sys.matrix;
    io::write_matrix(&dir.join("matrix.csv"), m.n(), m.p(), m.as_slice())?;
    io::write_vector(&dir.join("beta.csv"), sys.signal.beta())?;
    let support: Vec<f64> = sys.signal.support().iter().map(|&j| j as f64).collect();
    io::write_vector_csv(std::fs::File::create(dir.join("support.csv"))?, &support)?;
    io::write_vector(&dir.join("noise.csv"), &sys.noise)?;
    io::write_vector(&dir.join("y.csv"), &sys.y)?;
    let manifest = BundleManifest {
        n: m.n(),
        p: m.p(),
        k0: sys.signal.k0(),
        snr_db: sys.snr_db,
        sigma: sys.sigma,
        eps2: sys.eps2,
        seed,
        signal_model: sys.signal.model_name(),
        noise_model: sys.noise_model.name(),
        files: ["matrix.csv", "beta.csv", "support.csv", "noise.csv", "y.csv"],
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
    std::fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}
