mod common;

use common::max_abs_diff;
use proptest::prelude::*;
use rrpursuit::problems::{
    add_noise_at_snr, add_noise_with_level, gaussian_entries, gen_gaussian_matrix, gen_identity_hadamard, gen_signal,
    NoiseModel, SignalModel, SparseSignal, SupportRule,
};
use rrpursuit::pursuit::{default_kmax, run_pursuit, Algorithm, KMax};
use rrpursuit::rng::stream;
use rrpursuit::selectors::{
    rrt_k, select_oracle_eps, select_oracle_k0, select_oracle_sigma, select_rrt, select_tf, sigma_stop_threshold, tf_k,
    Flag, Selector,
};
use rrpursuit::thresholds::train_gamma_lb;
use rrpursuit::verify::{guarantee_thresholds, ric_bruteforce, GuaranteeInputs};

#[test]
fn rule_examples() {
    assert_eq!(tf_k(&[0.9, 0.8, 0.05, 0.7]), Some(3));
    assert_eq!(rrt_k(&[0.9, 0.3, 0.95, 0.4], 0.5), Some(4));
    assert_eq!(rrt_k(&[0.9, 0.95], 0.5), None);
    assert!((sigma_stop_threshold(1.0, 100) - 11.954_9).abs() < 1e-4);
}

fn fig1_signal(values: [f64; 3]) -> SparseSignal {
    let mut beta = vec![0.0; 64];
    beta[..3].copy_from_slice(&values);
    SparseSignal::from_beta(beta)
}

#[test]
fn tf_on_three_spike_scenarios() {
    let x = gen_identity_hadamard(32).unwrap();
    let flat = fig1_signal([1.0, 1.0, 1.0]);
    let decaying = fig1_signal([1.0, 0.5, 0.25]);
    let mut flat_hits = 0;
    let mut under = 0;
    for seed in 0..50 {
        let mut rng = stream(seed, &[]);
        let sys = add_noise_at_snr(&x, &flat, 10.0, NoiseModel::Gaussian, &mut rng).unwrap();
        let trace = run_pursuit(Algorithm::Omp, &x, &sys.y, default_kmax(32)).unwrap();
        flat_hits += usize::from(select_tf(&trace).unwrap().k_hat == 3);
        let sys = add_noise_at_snr(&x, &decaying, 10.0, NoiseModel::Gaussian, &mut rng).unwrap();
        let trace = run_pursuit(Algorithm::Omp, &x, &sys.y, default_kmax(32)).unwrap();
        under += usize::from(select_tf(&trace).unwrap().k_hat < 3);
    }
    assert!(flat_hits >= 45, "{flat_hits}");
    assert!(under > 25, "{under}");
}

#[test]
fn oracle_examples() {
    let x = gen_gaussian_matrix(12, 24, 4);
    let y = gaussian_entries(12, &mut stream(4, &[1]));
    let trace = run_pursuit(Algorithm::Omp, &x, &y, default_kmax(12)).unwrap();
    let s = select_oracle_k0(&trace, 3).unwrap();
    assert_eq!(s.support(&trace), trace.support(3));
    let r = select_oracle_k0(&trace, 0).unwrap().estimate(&trace, &x, &y).unwrap();
    assert!(r.support.is_empty() && r.beta_hat.iter().all(|&b| b == 0.0));
    let norms = trace.residual_norms();
    assert_eq!(select_oracle_eps(&trace, norms[0]).unwrap().k_hat, 0);

    // y in the span of one column: zero residual after one step
    let y = x.column(5);
    let trace = run_pursuit(Algorithm::Omp, &x, &y, default_kmax(12)).unwrap();
    for sigma in [1e-6, 0.1, 10.0] {
        assert_eq!(select_oracle_sigma(&trace, sigma).unwrap().k_hat, 1);
    }
}

#[test]
fn oracle_eps_noiseless_stops_at_k0() {
    let x = gen_gaussian_matrix(16, 32, 2);
    let signal = gen_signal(32, 3, &SignalModel::Uniform, &SupportRule::UniformRandom, &mut stream(2, &[1])).unwrap();
    let y = x.mul_vec(signal.beta());
    let trace = run_pursuit(Algorithm::Omp, &x, &y, default_kmax(16)).unwrap();
    assert_eq!(select_oracle_eps(&trace, 0.0).unwrap().k_hat, 3);
}

#[test]
fn oracle_eps_bounded_noise_stops_at_first_covering_iteration() {
    let x = gen_identity_hadamard(16).unwrap();
    let signal = SparseSignal::from_beta({
        let mut b = vec![0.0; 32];
        b[3] = 1.0;
        b[20] = -1.0;
        b
    });
    let sys = add_noise_with_level(&x, &signal, 0.1, NoiseModel::L2Bounded, &mut stream(6, &[])).unwrap();
    let trace = run_pursuit(Algorithm::Omp, &x, &sys.y, default_kmax(16)).unwrap();
    // k_* from inspecting the trace: first support containing the truth
    let k_star = (1..=trace.k_reached())
        .find(|&k| signal.support().iter().all(|j| trace.support(k).contains(j)))
        .unwrap();
    assert_eq!(k_star, 2);
    assert_eq!(select_oracle_eps(&trace, 0.1).unwrap().k_hat, k_star);
}

#[test]
fn rrt_between_signal_and_noise_ratios_recovers_exactly() {
    let x = gen_identity_hadamard(16).unwrap();
    let mut beta = vec![0.0; 32];
    beta[1] = 1.0;
    beta[17] = 1.0;
    let signal = SparseSignal::from_beta(beta);
    let sys = add_noise_at_snr(&x, &signal, 40.0, NoiseModel::Gaussian, &mut stream(12, &[])).unwrap();
    let trace = run_pursuit(Algorithm::Omp, &x, &sys.y, default_kmax(16)).unwrap();
    let k0 = 2;
    let after = trace.rr_values()[k0..].iter().copied().fold(f64::INFINITY, f64::min);
    let at = trace.rr(k0);
    assert!(at < after);
    let gamma = 0.5 * (at + after);
    let sel = select_rrt(&trace, gamma).unwrap();
    assert_eq!(sel.k_hat, k0);
    let mut s = sel.support(&trace).to_vec();
    s.sort();
    assert_eq!(s, [1, 17]);

    // the guarantee machinery agrees that this noise level is safe
    let d2 = ric_bruteforce(&x, 2).unwrap().delta_k;
    let d3 = ric_bruteforce(&x, 3).unwrap().delta_k;
    let lb = train_gamma_lb(16, 32, 200, Algorithm::Omp, 1).unwrap().value;
    let report = guarantee_thresholds(&GuaranteeInputs {
        delta_ksup: d2,
        beta_min: 1.0,
        beta_max: 1.0,
        gamma: lb,
        gamma_lb: lb,
        delta_k0plus1: d3,
        k0,
    })
    .unwrap();
    assert!(common::norm(&sys.noise) < report.rrt_threshold().unwrap());
}

#[test]
fn rrt_without_crossing_flags() {
    let x = gen_gaussian_matrix(8, 16, 0);
    let y = gaussian_entries(8, &mut stream(0, &[1]));
    let trace = run_pursuit(Algorithm::Omp, &x, &y, default_kmax(8)).unwrap();
    let s = select_rrt(&trace, 1e-6).unwrap();
    assert_eq!(s.k_hat, 0);
    assert_eq!(s.flags, vec![Flag::NoThresholdCrossing]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tf_and_rrt_are_scale_invariant(n in 6usize..=20, seed in any::<u64>(), gamma in 0.05f64..0.99) {
        let x = gen_gaussian_matrix(n, 2 * n, seed);
        let signal = gen_signal(2 * n, 2, &SignalModel::RandomGaussian, &SupportRule::UniformRandom, &mut stream(seed, &[1])).unwrap();
        let sys = add_noise_at_snr(&x, &signal, 15.0, NoiseModel::Gaussian, &mut stream(seed, &[2])).unwrap();
        let base = run_pursuit(Algorithm::Omp, &x, &sys.y, default_kmax(n)).unwrap();
        for c in [0.1, 1.0, 100.0] {
            let y: Vec<f64> = sys.y.iter().map(|v| c * v).collect();
            let t = run_pursuit(Algorithm::Omp, &x, &y, default_kmax(n)).unwrap();
            prop_assert_eq!(t.selection_order(), base.selection_order());
            prop_assert_eq!(select_tf(&t).unwrap(), select_tf(&base).unwrap());
            prop_assert_eq!(select_rrt(&t, gamma).unwrap(), select_rrt(&base, gamma).unwrap());
        }
    }

    #[test]
    fn rrt_is_monotone_in_gamma(seed in any::<u64>(), g1 in 0.01f64..1.0, g2 in 0.01f64..1.0) {
        let x = gen_gaussian_matrix(16, 32, seed);
        let y = gaussian_entries(16, &mut stream(seed, &[1]));
        let t = run_pursuit(Algorithm::Ols, &x, &y, default_kmax(16)).unwrap();
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        prop_assert!(select_rrt(&t, lo).unwrap().k_hat <= select_rrt(&t, hi).unwrap().k_hat);
    }

    #[test]
    fn every_estimate_satisfies_the_normal_equations(seed in any::<u64>(), which in 0usize..5) {
        let n = 14;
        let x = gen_gaussian_matrix(n, 28, seed);
        let y = gaussian_entries(n, &mut stream(seed, &[1]));
        let t = run_pursuit(Algorithm::Omp, &x, &y, KMax::new(6, n).unwrap()).unwrap();
        let selector = [
            Selector::Tf,
            Selector::Rrt { gamma: 0.9 },
            Selector::OracleK0 { k0: 4 },
            Selector::OracleSigma { sigma: 0.2 },
            Selector::OracleEps { eps2: 1.5 },
        ][which];
        let r = selector.select(&t).unwrap().estimate(&t, &x, &y).unwrap();
        prop_assert_eq!(r.support.as_slice(), t.support(r.k_hat));
        let fit = x.mul_vec(&r.beta_hat);
        let res: Vec<f64> = y.iter().zip(&fit).map(|(a, b)| a - b).collect();
        for j in 0..28 {
            if r.support.contains(&j) {
                let g: f64 = x.column(j).iter().zip(&res).map(|(a, b)| a * b).sum();
                prop_assert!(g.abs() < 1e-8);
            } else {
                prop_assert_eq!(r.beta_hat[j], 0.0);
            }
        }
        if !r.support.is_empty() {
            let oracle = common::normal_equations(&x, &r.support, &y);
            let on: Vec<f64> = r.support.iter().map(|&j| r.beta_hat[j]).collect();
            prop_assert!(max_abs_diff(&on, &oracle) < 1e-8);
        }
    }
}

