use std::fmt;
use std::path::{Path, PathBuf};

use rrpursuit::bench::{self, BenchError, ExperimentConfig, ThresholdSource};
use rrpursuit::io::{self, IoError};
use rrpursuit::linalg::{normalize_columns, SensingMatrix};
use rrpursuit::problems::{gen_gaussian_matrix, gen_identity_hadamard, gen_signal, SignalModel, SparseSignal, SupportRule};
use rrpursuit::pursuit::{default_kmax, run_pursuit, KMax, PursuitError};
use rrpursuit::rng::stream;
use rrpursuit::selectors::{Selector, SelectorError, SelectorKind};
use rrpursuit::thresholds::{cache_key, gamma_rrt_alpha, ThresholdCache, ThresholdError, ThresholdKind, ThresholdSpec};
use rrpursuit::verify::{self, GuaranteeInputs, SufficiencyOptions, VerifyError};
use serde::Serialize;
use serde_json::json;

use crate::manifest::{write_json, RunManifest};
use crate::{
    BetaLawArgs, ExperimentArgs, GammaAlphaArgs, GuaranteeArgs, HscArgs, RicInequalityArgs, MatrixSource, RecoveryArgs, RicArgs,
    SolveArgs, TrainArgs, VerifyArgs, VerifyCheck,
};

#[derive(Debug)]
pub enum CliError {
    /// Bad or inconsistent arguments (exit 2).
    Usage(String),
    /// Unreadable or inconsistent input data (exit 3).
    Data(String),
    /// Brute-force enumeration over budget (exit 4).
    Budget(String),
    /// A verification check ran and failed (exit 1).
    Failed(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Budget(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Budget(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(flag: &str, e: impl fmt::Display) -> CliError {
    CliError::Usage(format!("{flag}: {e}"))
}

fn data(flag: &str, e: impl fmt::Display) -> CliError {
    CliError::Data(format!("{flag}: {e}"))
}

fn threshold_error(flag: &str, e: ThresholdError) -> CliError {
    match e {
        ThresholdError::Cache { .. } | ThresholdError::Pursuit(_) => data(flag, e),
        _ => usage(flag, e),
    }
}

fn bench_error(e: BenchError) -> CliError {
    match e {
        BenchError::InvalidConfig(_) | BenchError::Pool(_) => usage("--config", e),
        BenchError::Threshold(t) => threshold_error("--config", t),
        BenchError::Csv(_) | BenchError::Io(_) => data("--out", e),
        _ => data("--config", e),
    }
}

fn verify_error(flag: &str, e: VerifyError) -> CliError {
    match e {
        VerifyError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
        VerifyError::InvalidOrder { .. } | VerifyError::InvalidInput(_) => usage(flag, e),
        VerifyError::Threshold(t) => threshold_error(flag, t),
        VerifyError::Bench(b) => bench_error(b),
        _ => data(flag, e),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| data("--out", format!("{}: {e}", dir.display())))
}

fn write_vector(path: &Path, values: &[f64]) -> Result<()> {
    io::write_vector(path, values).map_err(|e| data("--out", format!("{}: {e}", path.display())))
}

fn print_json(value: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable report"));
}

/// Reads a matrix file and normalizes its columns. The flag reports whether
/// normalization changed any entry.
fn load_matrix(flag: &str, path: &Path) -> Result<(SensingMatrix, bool)> {
    let raw = io::read_matrix(path).map_err(|e: IoError| data(flag, format!("{}: {e}", path.display())))?;
    let original = raw.data.clone();
    let m = normalize_columns(raw.n, raw.p, raw.data).map_err(|e| data(flag, e))?;
    let changed = original.iter().zip(m.as_slice()).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0));
    Ok((m, changed))
}

fn resolve_source(src: &MatrixSource, seed: u64, manifest: &mut RunManifest) -> Result<SensingMatrix> {
    if let Some(path) = &src.matrix {
        manifest.set("matrix", path);
        let (m, changed) = load_matrix("--matrix", path)?;
        if changed {
            eprintln!("note: --matrix columns were rescaled to unit norm");
        }
        Ok(m)
    } else if let Some(n) = src.identity_hadamard {
        manifest.set("identity_hadamard", n);
        gen_identity_hadamard(n).map_err(|e| usage("--identity-hadamard", e))
    } else {
        let dims = src.gaussian.as_deref().unwrap_or_default();
        let (n, p) = (dims[0], dims[1]);
        if n == 0 || p == 0 {
            return Err(usage("--gaussian", "dimensions must be positive"));
        }
        manifest.set("gaussian", [n, p]);
        manifest.set("matrix_seed", seed);
        Ok(gen_gaussian_matrix(n, p, seed))
    }
}

/// Parsed `--threshold` value.
enum ThresholdArg {
    Alpha(f64),
    Trained(PathBuf),
}

fn parse_threshold(text: &str) -> Result<ThresholdArg> {
    if let Some(a) = text.strip_prefix("alpha:") {
        let alpha = a.parse::<f64>().map_err(|_| usage("--threshold", format!("cannot parse '{a}' as a number")))?;
        Ok(ThresholdArg::Alpha(alpha))
    } else if let Some(p) = text.strip_prefix("trained:") {
        Ok(ThresholdArg::Trained(PathBuf::from(p)))
    } else {
        Err(usage("--threshold", format!("expected alpha:A or trained:PATH, got '{text}'")))
    }
}

fn build_selector(a: &SolveArgs, n: usize, p: usize, kmax: KMax) -> Result<(Selector, Option<ThresholdSpec>)> {
    let missing = |flag: &str| CliError::Usage(format!("{flag} is required for --selector {}", a.selector));
    Ok(match a.selector {
        SelectorKind::Tf => (Selector::Tf, None),
        SelectorKind::OracleK0 => (Selector::OracleK0 { k0: a.k0.ok_or_else(|| missing("--k0"))? }, None),
        SelectorKind::OracleSigma => (Selector::OracleSigma { sigma: a.sigma.ok_or_else(|| missing("--sigma"))? }, None),
        SelectorKind::OracleEps => (Selector::OracleEps { eps2: a.eps2.ok_or_else(|| missing("--eps2"))? }, None),
        SelectorKind::Rrt => {
            let spec = match (a.gamma, a.threshold.as_deref()) {
                (Some(value), _) => ThresholdSpec { kind: ThresholdKind::Fixed, n, p, kmax: kmax.get(), value },
                (None, Some(text)) => match parse_threshold(text)? {
                    ThresholdArg::Alpha(alpha) => {
                        gamma_rrt_alpha(n, p, kmax, alpha).map_err(|e| threshold_error("--threshold", e))?
                    }
                    ThresholdArg::Trained(path) => {
                        let cache = ThresholdCache::open(&path).map_err(|e| data("--threshold", e))?;
                        let key = cache_key(n, p, a.alg, a.ntr, a.train_seed);
                        let value = cache.get(&key).ok_or_else(|| {
                            data(
                                "--threshold",
                                format!("{} has no entry '{key}'; run `rrpursuit train` first", path.display()),
                            )
                        })?;
                        let kind = ThresholdKind::Trained { ntr: a.ntr, seed: a.train_seed, algorithm: a.alg };
                        ThresholdSpec { kind, n, p, kmax: default_kmax(n).get(), value }
                    }
                },
                (None, None) => return Err(missing("--gamma or --threshold")),
            };
            (Selector::Rrt { gamma: spec.value }, Some(spec))
        }
    })
}

fn selector_error(selector: SelectorKind, e: SelectorError) -> CliError {
    match e {
        SelectorError::K0ExceedsTrace { .. } => data("--k0", e),
        SelectorError::InvalidGamma(_) => usage(if selector == SelectorKind::Rrt { "--gamma" } else { "--selector" }, e),
        SelectorError::InvalidSigma(_) => usage("--sigma", e),
        SelectorError::InvalidEps(_) => usage("--eps2", e),
        SelectorError::EmptyTrace | SelectorError::Linalg(_) => data("--obs", e),
    }
}

pub fn solve(a: SolveArgs) -> Result<()> {
    if let Some(t) = &a.threshold {
        parse_threshold(t)?;
    }
    let (matrix, changed) = load_matrix("--matrix", &a.matrix)?;
    if changed {
        eprintln!("note: --matrix columns were rescaled to unit norm");
    }
    let y = io::read_vector(&a.obs).map_err(|e| data("--obs", format!("{}: {e}", a.obs.display())))?;
    if y.len() != matrix.n() {
        return Err(data("--obs", format!("has {} values but --matrix has {} rows", y.len(), matrix.n())));
    }
    let (n, p) = (matrix.n(), matrix.p());
    let kmax = match a.kmax {
        Some(k) => KMax::new(k, n).map_err(|e| usage("--kmax", e))?,
        None => default_kmax(n),
    };
    let (selector, threshold) = build_selector(&a, n, p, kmax)?;
    let trace = run_pursuit(a.alg, &matrix, &y, kmax).map_err(|e| match e {
        PursuitError::InvalidKmax { .. } => usage("--kmax", e),
        _ => data("--obs", e),
    })?;
    let selection = selector.select(&trace).map_err(|e| selector_error(a.selector, e))?;
    let result = selection.estimate(&trace, &matrix, &y).map_err(|e| selector_error(a.selector, e))?;

    create_dir(&a.out)?;
    write_vector(&a.out.join("beta_hat.csv"), &result.beta_hat)?;
    write_json(&a.out.join("support.json"), &result)?;
    write_json(&a.out.join("trace.json"), &trace)?;
    let mut manifest = RunManifest::new("solve", None);
    manifest.set("matrix", &a.matrix);
    manifest.set("obs", &a.obs);
    manifest.set("algorithm", a.alg);
    manifest.set("selector", a.selector);
    manifest.set("kmax", kmax.get());
    manifest.set("parameters", selector);
    manifest.set("threshold", threshold);
    manifest.outputs = ["beta_hat.csv", "support.json", "trace.json"].map(String::from).to_vec();
    manifest.write(&a.out)?;

    let norms = trace.residual_norms();
    println!("k_hat = {}", result.k_hat);
    println!("support = {:?}", result.support);
    for flag in &result.flags {
        println!("flag = {flag:?}");
    }
    print!("residual: ||y|| = {:.6e}, ||r_k_hat|| = {:.6e}", norms[0], norms[result.k_hat]);
    if let Some((k, rr)) = trace.rr_values().iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)) {
        print!(", min RR = {rr:.6} at k = {}", k + 1);
    }
    println!(", iterations = {} ({:?})", trace.k_reached(), trace.termination());
    Ok(())
}

fn check_dims(n: usize, p: usize) -> Result<()> {
    if n == 0 {
        return Err(usage("--n", "must be positive"));
    }
    if p == 0 {
        return Err(usage("--p", "must be positive"));
    }
    let km = default_kmax(n).get();
    if km > p {
        return Err(usage("--p", format!("must be at least k_max = {km}")));
    }
    Ok(())
}

pub fn train(a: TrainArgs) -> Result<()> {
    check_dims(a.n, a.p)?;
    if a.ntr == 0 {
        return Err(usage("--ntr", "must be positive"));
    }
    let mut cache = ThresholdCache::open(&a.cache).map_err(|e| data("--cache", e))?;
    let (spec, hit) = cache.train(a.n, a.p, a.ntr, a.alg, a.seed).map_err(|e| threshold_error("--cache", e))?;
    eprintln!("{} {}", if hit { "cache hit" } else { "trained and cached" }, cache_key(a.n, a.p, a.alg, a.ntr, a.seed));
    println!("{}", spec.value);
    Ok(())
}

pub fn gamma_alpha(a: GammaAlphaArgs) -> Result<()> {
    if a.n == 0 {
        return Err(usage("--n", "must be positive"));
    }
    let kmax = match a.kmax {
        Some(k) => KMax::new(k, a.n).map_err(|e| usage("--kmax", e))?,
        None => default_kmax(a.n),
    };
    let spec = gamma_rrt_alpha(a.n, a.p, kmax, a.alpha).map_err(|e| match e {
        ThresholdError::InvalidAlpha(_) => usage("--alpha", e),
        _ => usage("--n/--p/--kmax", e),
    })?;
    println!("{}", spec.value);
    Ok(())
}

pub fn experiment(a: ExperimentArgs) -> Result<()> {
    let (config, seed) = match &a.replay {
        Some(path) => {
            let m = RunManifest::read(path)?;
            if m.subcommand != "experiment" {
                return Err(data("--replay", format!("manifest records a '{}' run", m.subcommand)));
            }
            let cfg = m.config.get("experiment").cloned().ok_or_else(|| data("--replay", "manifest has no experiment"))?;
            let cfg: ExperimentConfig = serde_json::from_value(cfg).map_err(|e| data("--replay", e))?;
            let seed = m.base_seed.ok_or_else(|| data("--replay", "manifest has no base_seed"))?;
            (cfg, seed)
        }
        None => {
            let path = a.config.as_ref().expect("clap enforces --config");
            let text = std::fs::read_to_string(path).map_err(|e| data("--config", format!("{}: {e}", path.display())))?;
            let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| data("--config", e))?;
            (cfg, a.seed.expect("clap enforces --seed"))
        }
    };
    config.validate().map_err(bench_error)?;
    let threshold = if config.selectors.contains(&SelectorKind::Rrt) {
        Some(match (&a.cache, config.threshold) {
            (Some(path), ThresholdSource::Trained { ntr, seed: tseed }) => {
                let (n, p) = config.matrix.dims();
                let mut cache = ThresholdCache::open(path).map_err(|e| data("--cache", e))?;
                cache.train(n, p, ntr, config.algorithm, tseed.unwrap_or(seed)).map_err(|e| threshold_error("--cache", e))?.0
            }
            _ => bench::resolve_threshold(&config, seed).map_err(bench_error)?,
        })
    } else {
        None
    };
    let records = bench::run_experiment_with(&config, seed, a.workers, threshold.map(|t| t.value)).map_err(bench_error)?;

    create_dir(&a.out)?;
    let csv_path = a.out.join("metrics.csv");
    let file = std::fs::File::create(&csv_path).map_err(|e| data("--out", format!("{}: {e}", csv_path.display())))?;
    bench::write_metrics_csv(std::io::BufWriter::new(file), &records).map_err(bench_error)?;
    let mut manifest = RunManifest::new("experiment", Some(seed));
    manifest.set("experiment", &config);
    manifest.set("threshold", threshold);
    manifest.outputs = vec!["metrics.csv".into()];
    manifest.write(&a.out)?;
    println!("wrote {} rows to {}", records.len(), csv_path.display());
    Ok(())
}

pub fn ric(a: RicArgs) -> Result<()> {
    let mut manifest = RunManifest::new("ric", None);
    let matrix = resolve_source(&a.source, a.matrix_seed, &mut manifest)?;
    manifest.set("k", a.k);
    manifest.set("budget", a.budget.to_string());
    let est = verify::ric_bruteforce_with_budget(&matrix, a.k, a.budget).map_err(|e| verify_error("--k", e))?;
    print_json(&est);
    emit_report(a.out.as_deref(), manifest, &est)
}

fn emit_report(out: Option<&Path>, mut manifest: RunManifest, report: &impl Serialize) -> Result<()> {
    if let Some(dir) = out {
        create_dir(dir)?;
        write_json(&dir.join("report.json"), report)?;
        manifest.outputs = vec!["report.json".into()];
        manifest.write(dir)?;
    }
    Ok(())
}

fn finish(pass: bool, what: &str) -> Result<()> {
    if pass {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{what} check failed")))
    }
}

pub fn verify(a: VerifyArgs) -> Result<()> {
    let out = a.out.as_deref();
    match a.check {
        VerifyCheck::Recovery(r) => verify_recovery(r, out),
        VerifyCheck::BetaLaw(b) => verify_beta_law(b, out),
        VerifyCheck::Guarantees(g) => verify_guarantees(g, out),
        VerifyCheck::Hsc(h) => verify_hsc(h, out),
        VerifyCheck::RicInequalities(l) => verify_ric_inequalities(l, out),
    }
}

fn recovery_signal(r: &RecoveryArgs, p: usize) -> Result<SparseSignal> {
    match (&r.support, &r.values) {
        (Some(idx), Some(vals)) => {
            if idx.len() != vals.len() {
                return Err(usage("--values", format!("{} values for {} support indices", vals.len(), idx.len())));
            }
            let mut beta = vec![0.0; p];
            for (&j, &v) in idx.iter().zip(vals) {
                if j >= p || beta[j] != 0.0 {
                    return Err(usage("--support", format!("index {j} is out of range or repeated")));
                }
                if v == 0.0 || !v.is_finite() {
                    return Err(usage("--values", "coefficients must be finite and nonzero"));
                }
                beta[j] = v;
            }
            Ok(SparseSignal::from_beta(beta))
        }
        _ => {
            let k0 = r.k0.expect("clap enforces --k0 or --support");
            let mut rng = stream(r.seed, &[u64::MAX]);
            gen_signal(p, k0, &SignalModel::Uniform, &SupportRule::UniformRandom, &mut rng).map_err(|e| usage("--k0", e))
        }
    }
}

fn verify_recovery(r: RecoveryArgs, out: Option<&Path>) -> Result<()> {
    let mut manifest = RunManifest::new("verify recovery", Some(r.seed));
    let matrix = resolve_source(&r.source, r.matrix_seed, &mut manifest)?;
    let signal = recovery_signal(&r, matrix.p())?;
    if signal.k0() == 0 {
        return Err(usage("--k0", "the signal must have at least one nonzero"));
    }
    let opts = SufficiencyOptions {
        algorithm: r.alg,
        measure_runs: r.measure_runs,
        ntr: r.ntr,
        ..SufficiencyOptions::default()
    };
    let level = match verify::sufficient_noise_level(&matrix, &signal, r.seed, &opts) {
        Ok(v) => v,
        Err(VerifyError::PremiseUnmet { delta, bound }) => {
            let report = json!({ "status": "skipped", "delta_k0plus1": delta, "bound": bound });
            print_json(&report);
            return emit_report(out, manifest, &report);
        }
        Err(e) => return Err(verify_error("--k0", e)),
    };
    let eps2 = r.eps2.unwrap_or(r.eps_factor * level);
    manifest.set("support", signal.support());
    manifest.set("eps2", eps2);
    manifest.set("trials", r.trials);
    manifest.set("options", opts);
    let report = verify::verify_sufficient_recovery(&matrix, &signal, eps2, r.trials, r.seed, &opts)
        .map_err(|e| verify_error("--eps2", e))?;
    print_json(&report);
    emit_report(out, manifest, &report)?;
    finish(report.pass, "recovery")
}

fn verify_beta_law(b: BetaLawArgs, out: Option<&Path>) -> Result<()> {
    let mut manifest = RunManifest::new("verify beta-law", Some(b.seed));
    manifest.set("n", b.n);
    manifest.set("k", &b.k);
    manifest.set("samples", b.samples);
    let reports = verify::beta_law_conformance(b.n, &b.k, b.samples, b.seed).map_err(|e| verify_error("--k", e))?;
    print_json(&reports);
    emit_report(out, manifest, &reports)?;
    finish(reports.iter().all(|r| r.pass), "beta-law")
}

fn verify_guarantees(g: GuaranteeArgs, out: Option<&Path>) -> Result<()> {
    let inputs = GuaranteeInputs {
        delta_ksup: g.delta_ksup,
        beta_min: g.beta_min,
        beta_max: g.beta_max,
        gamma: g.gamma,
        gamma_lb: g.gamma_lb,
        delta_k0plus1: g.delta_k0plus1,
        k0: g.k0,
    };
    let mut manifest = RunManifest::new("verify guarantees", None);
    manifest.set("inputs", inputs);
    let report = verify::guarantee_thresholds(&inputs).map_err(|e| verify_error("--delta-ksup", e))?;
    print_json(&report);
    emit_report(out, manifest, &report)
}

fn verify_hsc(h: HscArgs, out: Option<&Path>) -> Result<()> {
    let mut manifest = RunManifest::new("verify hsc", Some(h.seed));
    manifest.set("n", h.n);
    manifest.set("k0", h.k0);
    manifest.set("snr_db", &h.snr);
    manifest.set("trials", h.trials);
    manifest.set("cap", h.cap);
    manifest.set("algorithm", h.alg);
    let report = verify::hsc_check(h.n, h.k0, &h.snr, h.trials, h.alg, h.cap, h.seed).map_err(|e| verify_error("--n", e))?;
    print_json(&report);
    emit_report(out, manifest, &report)?;
    finish(report.pass, "hsc")
}

fn verify_ric_inequalities(l: RicInequalityArgs, out: Option<&Path>) -> Result<()> {
    let mut manifest = RunManifest::new("verify ric-inequalities", Some(l.seed));
    let matrix = resolve_source(&l.source, l.matrix_seed, &mut manifest)?;
    manifest.set("k", l.k);
    manifest.set("draws", l.draws);
    let delta = verify::ric_bruteforce(&matrix, l.k).map_err(|e| verify_error("--k", e))?.delta_k;
    let report = verify::ric_inequality_spot_check(&matrix, l.k, delta, l.draws, l.seed).map_err(|e| verify_error("--k", e))?;
    print_json(&report);
    emit_report(out, manifest, &report)?;
    finish(report.pass, "ric-inequalities")
}
