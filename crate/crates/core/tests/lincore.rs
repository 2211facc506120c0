mod common;

use common::{dense_residual, max_abs_diff, norm, normal_equations};
use proptest::prelude::*;
use rrpursuit::linalg::{least_squares_on_support, normalize_columns, project_extend, LinalgError, ProjectionState};
use rrpursuit::problems::{gaussian_entries, gen_gaussian_matrix};
use rrpursuit::rng::stream;

#[test]
fn normalization_examples() {
    let m = normalize_columns(2, 1, vec![3.0, 4.0]).unwrap();
    assert_eq!(m.column(0), vec![0.6, 0.8]);
    let m = normalize_columns(4, 1, vec![1.0; 4]).unwrap();
    assert_eq!(m.column(0), vec![0.5; 4]);
    let m = normalize_columns(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    assert_eq!(m.as_slice(), &[1.0, 0.0, 0.0, 1.0]);
    assert!(matches!(normalize_columns(2, 2, vec![1.0, 0.0, 1.0, 1e-13]), Err(LinalgError::ZeroColumn(1))));
}

#[test]
fn projection_matches_pseudoinverse_on_seeded_6x10() {
    let x = gen_gaussian_matrix(6, 10, 21);
    let y = gaussian_entries(6, &mut stream(21, &[1]));
    let mut state = ProjectionState::new(&y);
    for j in [2, 7] {
        state = project_extend(state, &x, j, &y).unwrap();
    }
    let oracle = dense_residual(&x, &[2, 7], &y);
    assert!(max_abs_diff(state.residual(), &oracle) <= 1e-8 * norm(&y));
}

#[test]
fn least_squares_matches_normal_equations_on_seeded_8x12() {
    let x = gen_gaussian_matrix(8, 12, 5);
    let y = gaussian_entries(8, &mut stream(5, &[1]));
    let support = [9, 0, 4];
    let b = least_squares_on_support(&x, &support, &y).unwrap();
    let oracle = normal_equations(&x, &support, &y);
    assert!(max_abs_diff(&b, &oracle) < 1e-8, "{b:?} vs {oracle:?}");
    // gradient condition
    let fit = x.mul_support(&support, &b);
    let r: Vec<f64> = y.iter().zip(&fit).map(|(a, f)| a - f).collect();
    for &j in &support {
        let g: f64 = x.column(j).iter().zip(&r).map(|(a, b)| a * b).sum();
        assert!(g.abs() < 1e-8);
    }
}

#[test]
fn least_squares_trivial_cases() {
    let x = normalize_columns(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    assert_eq!(least_squares_on_support(&x, &[0, 1], &[5.0, -2.0]).unwrap(), vec![5.0, -2.0]);
    assert_eq!(least_squares_on_support(&x, &[0], &[0.0, 3.0]).unwrap(), vec![0.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn incremental_projection_matches_dense_oracle(
        n in 2usize..=12,
        extra in 0usize..=12,
        k in 1usize..=5,
        seed in any::<u64>(),
    ) {
        let p = n + extra;
        let k = k.min(n - 1).min(p);
        let x = gen_gaussian_matrix(n, p, seed);
        let mut rng = stream(seed, &[1]);
        let y = gaussian_entries(n, &mut rng);
        let support: Vec<usize> = rand::seq::index::sample(&mut rng, p, k).into_vec();
        let mut state = ProjectionState::new(&y);
        let mut prev = state.residual_norm();
        for (i, &j) in support.iter().enumerate() {
            state = project_extend(state, &x, j, &y).unwrap();
            let oracle = dense_residual(&x, &support[..=i], &y);
            prop_assert!(max_abs_diff(state.residual(), &oracle) <= 1e-8 * norm(&y));
            prop_assert!(state.residual_norm() <= prev * (1.0 + 1e-12));
            prop_assert!((state.residual_norm() - norm(state.residual())).abs() <= 1e-12 * state.residual_norm().max(1e-300));
            prev = state.residual_norm();
        }
        // orthonormal basis, residual orthogonal to it
        let basis = state.basis();
        for a in 0..basis.len() {
            for b in 0..basis.len() {
                let d: f64 = basis[a].iter().zip(&basis[b]).map(|(u, v)| u * v).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                prop_assert!((d - want).abs() < 1e-8);
            }
            let d: f64 = basis[a].iter().zip(state.residual()).map(|(u, v)| u * v).sum();
            prop_assert!(d.abs() < 1e-8 * norm(&y));
        }
        let coef = least_squares_on_support(&x, &support, &y).unwrap();
        let oracle = normal_equations(&x, &support, &y);
        let scale = oracle.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(max_abs_diff(&coef, &oracle) <= 1e-8 * scale);
    }

    #[test]
    fn observation_in_span_leaves_no_residual(n in 3usize..=10, seed in any::<u64>()) {
        let x = gen_gaussian_matrix(n, 2 * n, seed);
        let mut rng = stream(seed, &[2]);
        let support: Vec<usize> = rand::seq::index::sample(&mut rng, 2 * n, n / 2).into_vec();
        let coef = gaussian_entries(support.len(), &mut rng);
        let y = x.mul_support(&support, &coef);
        let state = ProjectionState::with_support(&x, &support, &y).unwrap();
        prop_assert!(state.residual_norm() <= 1e-8 * norm(&y));
    }
}
