//! Greedy sparse recovery with stopping rules that need neither the sparsity
//! nor the noise level.
//!
//! A pursuit ([`pursuit`]) is run once to `k_max` iterations and records the
//! residual ratios `RR(k) = ||r_k|| / ||r_{k-1}||`. A selector ([`selectors`])
//! then picks the iteration:
//!
//! * TF takes `argmin_k RR(k)` and has no parameters;
//! * RRT takes the last `k` with `RR(k)` below a threshold from
//!   [`thresholds`], either analytic (Beta quantiles) or trained on noise.
//!
//! ```
//! use rrpursuit::problems::{add_noise_at_snr, gen_identity_hadamard, NoiseModel, SparseSignal};
//! use rrpursuit::pursuit::{default_kmax, run_pursuit, Algorithm};
//! use rrpursuit::rng::stream;
//! use rrpursuit::selectors::select_rrt;
//! use rrpursuit::thresholds::gamma_rrt_alpha;
//!
//! let x = gen_identity_hadamard(16).unwrap();
//! let mut beta = vec![0.0; 32];
//! beta[4] = 1.0;
//! beta[19] = -1.0;
//! let sys = add_noise_at_snr(&x, &SparseSignal::from_beta(beta), 30.0, NoiseModel::Gaussian, &mut stream(1, &[])).unwrap();
//!
//! let kmax = default_kmax(16);
//! let gamma = gamma_rrt_alpha(16, 32, kmax, 0.1).unwrap().value;
//! let trace = run_pursuit(Algorithm::Omp, &x, &sys.y, kmax).unwrap();
//! let fit = select_rrt(&trace, gamma).unwrap().estimate(&trace, &x, &sys.y).unwrap();
//!
//! let mut support = fit.support.clone();
//! support.sort();
//! assert_eq!(support, [4, 19]);
//! ```
//!
//! [`problems`] generates test problems, [`bench`] runs Monte Carlo grids and
//! [`verify`] checks the recovery guarantees numerically.

pub mod bench;
pub mod betafn;
pub mod io;
pub mod linalg;
pub mod problems;
pub mod pursuit;
pub mod rng;
pub mod selectors;
pub mod thresholds;
pub mod verify;

pub use linalg::SensingMatrix;
pub use pursuit::{run_pursuit, Algorithm, KMax, PursuitTrace};
pub use selectors::{Selection, Selector, SelectorKind, SelectorResult};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/pursuits.md")]
mod book_pursuits {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/stopping-rules.md")]
mod book_stopping_rules {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/thresholds.md")]
mod book_thresholds {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/experiments.md")]
mod book_experiments {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/verification.md")]
mod book_verification {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
