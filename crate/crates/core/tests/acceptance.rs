//! End-to-end acceptance checks. Each test writes one `PASS`/`FAIL` line to
//! stderr (bypassing the harness capture) before asserting.

mod common;

use std::io::Write;
use std::time::Instant;

use common::{dense_residual, max_abs_diff, normal_equations, norm};
use rrpursuit::bench::{run_experiment, ExperimentConfig, MatrixKind, MetricsRecord, ThresholdSource};
use rrpursuit::linalg::ProjectionState;
use rrpursuit::problems::{
    add_noise_at_snr, gaussian_entries, gen_gaussian_matrix, gen_identity_hadamard, gen_signal, NoiseModel,
    SignalModel, SparseSignal, SupportRule,
};
use rrpursuit::pursuit::{default_kmax, run_pursuit, Algorithm, KMax, Pursuit, Termination};
use rrpursuit::rng::stream;
use rrpursuit::selectors::{select_oracle_k0, select_tf, SelectorKind};
use rrpursuit::thresholds::{gamma_rrt_alpha, train_gamma_lb};
use rrpursuit::verify::{
    beta_law_conformance, guarantee_thresholds, hsc_check, ric_inequality_spot_check, ric_bruteforce, snr_excess_rrt_simple,
    sufficient_noise_level, verify_sufficient_recovery, GuaranteeInputs, SufficiencyOptions,
};

fn report(id: u32, name: &str, pass: bool, start: Instant, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let secs = start.elapsed().as_secs_f64();
    let _ = writeln!(std::io::stderr(), "criterion {id:>2} [{name}]: {verdict} ({secs:.1}s) {detail}");
    assert!(pass, "criterion {id} failed: {detail}");
}

#[test]
fn c01_false_alarm_bound() {
    let start = Instant::now();
    let (n, p, trials) = (32, 64, 2000);
    let x = gen_gaussian_matrix(n, p, 1);
    let kmax = default_kmax(n);
    let mins: Vec<(f64, f64)> = (0..trials)
        .map(|t| {
            let w = gaussian_entries(n, &mut stream(1, &[t]));
            let rr = run_pursuit(Algorithm::Omp, &x, &w, kmax).unwrap().rr_values().to_vec();
            let from_two = rr[1..].iter().copied().fold(f64::INFINITY, f64::min);
            (from_two, from_two.min(rr[0]))
        })
        .collect();
    let mut pass = true;
    let mut detail = String::new();
    for alpha in [0.1, 0.5] {
        let g = gamma_rrt_alpha(n, p, kmax, alpha).unwrap().value;
        let rate = |f: fn(&(f64, f64)) -> f64| mins.iter().filter(|m| f(m) < g).count() as f64 / trials as f64;
        let (k_gt_1, k_ge_1) = (rate(|m| m.0), rate(|m| m.1));
        let cap = alpha + 3.0 * (alpha / trials as f64).sqrt();
        pass &= k_gt_1 <= cap;
        detail += &format!("alpha={alpha}: rate(k>1)={k_gt_1:.4} rate(k>=1)={k_ge_1:.4} cap={cap:.4}; ");
    }
    report(1, "false-alarm bound", pass, start, detail);
}

#[test]
fn c02_beta_law() {
    let start = Instant::now();
    let reports = beta_law_conformance(20, &[1, 5, 10], 10_000, 2).unwrap();
    let detail = reports
        .iter()
        .map(|r| format!("k={} ks={:.4}<{:.4}", r.k, r.ks_statistic, r.ks_critical_1pct))
        .collect::<Vec<_>>()
        .join(", ");
    report(2, "beta law", reports.iter().all(|r| r.pass), start, detail);
}

fn tf_k_counts(values: [f64; 3], snr_db: f64, trials: u64, salt: u64) -> (usize, usize) {
    let x = gen_identity_hadamard(32).unwrap();
    let mut beta = vec![0.0; 64];
    beta[..3].copy_from_slice(&values);
    let signal = SparseSignal::from_beta(beta);
    let (mut exact, mut under) = (0, 0);
    for t in 0..trials {
        let sys = add_noise_at_snr(&x, &signal, snr_db, NoiseModel::Gaussian, &mut stream(3, &[salt, t])).unwrap();
        let trace = run_pursuit(Algorithm::Omp, &x, &sys.y, default_kmax(32)).unwrap();
        let k = select_tf(&trace).unwrap().k_hat;
        exact += usize::from(k == 3);
        under += usize::from(k < 3);
    }
    (exact, under)
}

#[test]
fn c03_three_spike_tf() {
    let start = Instant::now();
    let trials = 500;
    let flat10 = tf_k_counts([1.0; 3], 10.0, trials, 0).0;
    let flat30 = tf_k_counts([1.0; 3], 30.0, trials, 1).0;
    let decay30 = tf_k_counts([1.0, 0.5, 0.25], 30.0, trials, 2).0;
    let decay10_under = tf_k_counts([1.0, 0.5, 0.25], 10.0, trials, 3).1;
    let t = trials as usize;
    let pass = flat10 * 100 >= 95 * t && flat30 * 100 >= 95 * t && decay30 * 100 >= 90 * t && 2 * decay10_under > t;
    let detail = format!(
        "flat 10dB {flat10}/{t}, flat 30dB {flat30}/{t}, decaying 30dB {decay30}/{t}, decaying 10dB k<3 {decay10_under}/{t}"
    );
    report(3, "three-spike TF", pass, start, detail);
}

#[test]
fn c04_closed_forms() {
    let start = Instant::now();
    let r = guarantee_thresholds(&GuaranteeInputs {
        delta_ksup: 0.0,
        beta_min: 1.0,
        beta_max: 1.0,
        gamma: 1.0,
        gamma_lb: 1.0,
        delta_k0plus1: 0.0,
        k0: 2,
    })
    .unwrap();
    let (a, b) = (snr_excess_rrt_simple(0.4), snr_excess_rrt_simple(0.8));
    let eps = [r.eps_sig, r.eps_x, r.eps_rrt, r.eps_exact.unwrap()];
    let close = eps.iter().zip([0.25, 0.5, 0.5, 0.5]).all(|(g, w)| (g - w).abs() < 1e-12);
    let pass = a == 1.75 && b == 1.125 && close;
    report(4, "closed forms", pass, start, format!("excess {a} / {b}, eps {eps:?}"));
}

#[test]
fn c05_trained_threshold_trend() {
    let start = Instant::now();
    let p = 256;
    let mut rows = Vec::new();
    for ratio in [0.2, 0.5, 0.8] {
        let n = (ratio * p as f64).round() as usize;
        let trained = train_gamma_lb(n, p, 200, Algorithm::Omp, 5).unwrap().value;
        let analytic = gamma_rrt_alpha(n, p, default_kmax(n), 0.1).unwrap().value;
        rows.push((n, trained, analytic));
    }
    let increasing = rows.windows(2).all(|w| w[1].1 > w[0].1);
    let high = rows[2].1 >= 0.8;
    let below = rows.iter().all(|r| r.2 < r.1);
    let detail = rows.iter().map(|(n, t, a)| format!("n={n}: trained {t:.4} analytic {a:.4}")).collect::<Vec<_>>().join(", ");
    report(5, "trained threshold trend", increasing && high && below, start, detail);
}

#[test]
fn c06_ric_oracle() {
    let start = Instant::now();
    let d2 = ric_bruteforce(&gen_identity_hadamard(4).unwrap(), 2).unwrap().delta_k;
    let exact = (d2 - 0.5).abs() < 1e-15;
    let mut monotone = true;
    let mut violations = 0;
    for seed in 0..20 {
        let x = gen_gaussian_matrix(8, 12, seed);
        let deltas: Vec<f64> = (1..=8).map(|k| ric_bruteforce(&x, k).unwrap().delta_k).collect();
        monotone &= deltas.windows(2).all(|w| w[1] >= w[0] - 1e-12);
        for k in [3, 4] {
            violations += ric_inequality_spot_check(&x, k, deltas[k - 1], 100, seed).unwrap().violations;
        }
    }
    let detail = format!("delta_2=[I4,H4] {d2}, monotone {monotone}, inequality violations {violations}");
    report(6, "RIC oracle", exact && monotone && violations == 0, start, detail);
}

#[test]
fn c07_high_snr_consistency() {
    let start = Instant::now();
    let r = hsc_check(32, 3, &[10.0, 20.0, 30.0, 40.0], 2000, Algorithm::Omp, 0.02, 7).unwrap();
    report(7, "high-SNR consistency", r.pass, start, format!("PE {:?}", r.pe));
}

fn nmse_of(records: &[MetricsRecord], sel: SelectorKind, snr: f64) -> f64 {
    records.iter().find(|r| r.selector == sel && r.snr_db == snr).unwrap().nmse_mean
}

#[test]
fn c08_nmse_against_oracles() {
    let start = Instant::now();
    let snrs = vec![20.0, 30.0, 40.0];
    let grid = |matrix, k0| ExperimentConfig {
        matrix,
        signal_model: SignalModel::Uniform,
        noise_model: NoiseModel::Gaussian,
        k0_list: vec![k0],
        snr_db_list: snrs.clone(),
        trials: 2000,
        algorithm: Algorithm::Omp,
        selectors: vec![SelectorKind::Tf, SelectorKind::Rrt, SelectorKind::OracleK0, SelectorKind::OracleSigma],
        threshold: ThresholdSource::Trained { ntr: 1000, seed: None },
    };
    let mut pass = true;
    let mut detail = String::new();
    for (name, cfg) in [
        ("IH16", grid(MatrixKind::IdentityHadamard { n: 16 }, 2)),
        ("G32x64", grid(MatrixKind::Gaussian { n: 32, p: 64 }, 3)),
    ] {
        let records = run_experiment(&cfg, 8, 0).unwrap();
        for &snr in &snrs {
            let oracle = nmse_of(&records, SelectorKind::OracleSigma, snr);
            for sel in [SelectorKind::Tf, SelectorKind::Rrt] {
                let ratio = nmse_of(&records, sel, snr) / oracle;
                pass &= ratio <= 1.6;
                detail += &format!("{name} {snr}dB {}/sigma={ratio:.3}; ", sel.name());
            }
        }
        if name == "G32x64" {
            let (k0, tf) = (nmse_of(&records, SelectorKind::OracleK0, 30.0), nmse_of(&records, SelectorKind::Tf, 30.0));
            pass &= k0 > tf;
            detail += &format!("G32x64 30dB oracle-k0 {k0:.3e} vs tf {tf:.3e}");
        }
    }
    report(8, "NMSE vs oracles", pass, start, detail);
}

#[test]
fn c09_pursuit_contracts() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for alg in [Algorithm::Omp, Algorithm::Ols] {
        for seed in 0..200u64 {
            let n = 4 + (seed % 9) as usize;
            let p = n + (seed % 13) as usize;
            let x = gen_gaussian_matrix(n, p, seed);
            let y = gaussian_entries(n, &mut stream(seed, &[9]));
            let trace = run_pursuit(alg, &x, &y, default_kmax(n)).unwrap();
            let kr = trace.k_reached();
            let norms = trace.residual_norms();
            let mut ok = true;
            for k in 1..=kr {
                ok &= trace.support(k).len() == k && trace.support(k)[..k - 1] == *trace.support(k - 1);
                ok &= norms[k] <= norms[k - 1];
                let zero_step = trace.termination() == Termination::ResidualZero && k == kr;
                ok &= trace.rr(k) <= 1.0 && (trace.rr(k) > 0.0 || zero_step);
            }
            for k in 1..kr {
                let r = ProjectionState::with_support(&x, trace.support(k), &y).unwrap().residual().to_vec();
                let rest = Pursuit::warm_start(alg, &x, &r, trace.support(k)).unwrap().run_to(KMax::new(kr, n).unwrap());
                ok &= rest.selection_order() == &trace.selection_order()[k..];
            }
            if n <= 12 {
                for k in 1..=kr {
                    worst = worst.max((norms[k] - norm(&dense_residual(&x, trace.support(k), &y))).abs());
                    let est = select_oracle_k0(&trace, k).unwrap().estimate(&trace, &x, &y).unwrap();
                    let on: Vec<f64> = est.support.iter().map(|&j| est.beta_hat[j]).collect();
                    worst = worst.max(max_abs_diff(&on, &normal_equations(&x, &est.support, &y)));
                }
            }
            if !ok {
                failures.push((alg, seed));
            }
        }
    }
    let pass = failures.is_empty() && worst < 1e-8;
    report(9, "pursuit contracts", pass, start, format!("failures {failures:?}, worst dense deviation {worst:.2e}"));
}

#[test]
fn c10_sufficient_recovery() {
    let start = Instant::now();
    let x = gen_identity_hadamard(16).unwrap();
    let signal =
        gen_signal(32, 2, &SignalModel::Uniform, &SupportRule::UniformRandom, &mut stream(10, &[u64::MAX])).unwrap();
    let opts = SufficiencyOptions::default();
    let (pass, detail) = match sufficient_noise_level(&x, &signal, 10, &opts) {
        Ok(level) => {
            let r = verify_sufficient_recovery(&x, &signal, 0.9 * level, 500, 10, &opts).unwrap();
            let d = format!(
                "support {:?}, threshold {level:.4}, eps2 {:.4}, tf failures {}, rrt failures {}",
                r.support, r.eps2, r.tf_failures, r.rrt_failures
            );
            (r.asserted && r.pass, d)
        }
        Err(e) => (false, e.to_string()),
    };
    report(10, "sufficient recovery", pass, start, detail);
}
