//! Independent reference implementations used by the integration tests.
//! Nothing here shares code with the incremental kernels under test.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rrpursuit::linalg::SensingMatrix;
use rrpursuit::problems::gaussian_entries;

pub fn dense(m: &SensingMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.n(), m.p(), m.as_slice())
}

pub fn submatrix(m: &SensingMatrix, support: &[usize]) -> DMatrix<f64> {
    let x = dense(m);
    DMatrix::from_fn(m.n(), support.len(), |i, j| x[(i, support[j])])
}

/// `(XᵀX)⁻¹Xᵀy` on the support via an explicit normal-equation solve.
pub fn normal_equations(m: &SensingMatrix, support: &[usize], y: &[f64]) -> Vec<f64> {
    if support.is_empty() {
        return Vec::new();
    }
    let xs = submatrix(m, support);
    let g = xs.transpose() * &xs;
    let rhs = xs.transpose() * DVector::from_column_slice(y);
    g.lu().solve(&rhs).expect("full column rank").as_slice().to_vec()
}

/// `(I - X_S (X_SᵀX_S)⁻¹ X_Sᵀ) y`.
pub fn dense_residual(m: &SensingMatrix, support: &[usize], y: &[f64]) -> Vec<f64> {
    let yv = DVector::from_column_slice(y);
    if support.is_empty() {
        return y.to_vec();
    }
    let coef = DVector::from_vec(normal_equations(m, support, y));
    (yv - submatrix(m, support) * coef).as_slice().to_vec()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Scans every column for the largest `|X_tᵀ r|`, smallest index on ties.
pub fn brute_force_omp_index(m: &SensingMatrix, r: &[f64], exclude: &[usize]) -> usize {
    let x = dense(m);
    let rv = DVector::from_column_slice(r);
    let mut best = (usize::MAX, -1.0);
    for t in 0..m.p() {
        if exclude.contains(&t) {
            continue;
        }
        let c = x.column(t).dot(&rv).abs();
        if c > best.1 {
            best = (t, c);
        }
    }
    best.0
}

/// Tries every remaining column, refits from scratch and keeps the one with
/// the smallest residual norm.
pub fn trial_projection_ols_index(m: &SensingMatrix, support: &[usize], y: &[f64]) -> usize {
    let mut best = (usize::MAX, f64::INFINITY);
    for t in 0..m.p() {
        if support.contains(&t) {
            continue;
        }
        let mut s = support.to_vec();
        s.push(t);
        let r = norm(&dense_residual(m, &s, y));
        if r < best.1 {
            best = (t, r);
        }
    }
    best.0
}

/// OMP that refits the whole support by normal equations every iteration.
pub fn full_recompute_omp(m: &SensingMatrix, y: &[f64], iterations: usize) -> (Vec<usize>, Vec<f64>) {
    let mut support = Vec::new();
    let mut norms = vec![norm(y)];
    let mut r = y.to_vec();
    for _ in 0..iterations {
        let t = brute_force_omp_index(m, &r, &support);
        support.push(t);
        r = dense_residual(m, &support, y);
        norms.push(norm(&r));
    }
    (support, norms)
}

/// Extreme eigenvalues of the Gram matrix of every support of size `k`.
pub fn ric_by_eigen_sweep(m: &SensingMatrix, k: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for support in itertools::Itertools::combinations(0..m.p(), k) {
        let xs = submatrix(m, &support);
        let eig = (xs.transpose() * &xs).symmetric_eigenvalues();
        worst = worst.max(eig.max() - 1.0).max(1.0 - eig.min());
    }
    worst
}

/// Adaptive Simpson quadrature.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, whole: f64, m: f64, fm: f64, tol: f64, depth: u32) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1) + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 50)
}

/// `I_x(a, 1/2)` by quadrature. The substitution `t = 1 - u²` removes the
/// `(1-t)^(-1/2)` singularity: the integrand becomes `2 (1-u²)^(a-1)`.
/// The normalizer is integrated the same way over the full range.
pub fn beta_half_cdf_quadrature(a: f64, x: f64) -> f64 {
    let g = |u: f64| 2.0 * (1.0 - u * u).powf(a - 1.0);
    let total = integrate(&g, 0.0, 1.0, 1e-14);
    let lower = (1.0 - x).sqrt();
    integrate(&g, lower, 1.0, 1e-14) / total
}

/// Inverse of [`beta_half_cdf_quadrature`] by plain bisection.
pub fn beta_half_inv_bisection(a: f64, q: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beta_half_cdf_quadrature(a, mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn random_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    gaussian_entries(n, rng)
}
