use dpmean::dp::{CompositionLedger, PrivacyBudget};
use dpmean::experiment::{
    declared_budget, run_experiment, run_trial, summarize, write_csv, write_jsonl,
    ExperimentConfig, Mechanism, TrialSpec, CSV_COLUMNS,
};
use dpmean::linalg::{sample_mean, second_moment, spectral_sandwich, PsdMatrix};
use dpmean::rescaled::{discrete_rescaled_pipeline, RescaledConfig, TripleDataset};
use dpmean::rng::trial_rng;
use dpmean::synth::{synthesize, Family, SynthSpec};
use dpmean::tukey::DistanceMode;

const FAMILIES: [Family; 3] = [
    Family::Gaussian,
    Family::ScaledUniform,
    Family::RademacherMixture,
];

#[test]
fn large_samples_recover_mean_and_covariance() {
    let mu = vec![1.0, -2.0, 0.5];
    let sigma =
        PsdMatrix::from_row_slice(3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.3, 0.0, 0.3, 0.5]).unwrap();
    for (i, family) in FAMILIES.into_iter().enumerate() {
        let spec = SynthSpec::new(family, mu.clone(), sigma.clone(), 100_000).unwrap();
        let x = synthesize(&spec, &mut trial_rng(1, i as u64));
        let m = sample_mean(x.rows(), 3);
        for j in 0..3 {
            assert!((m[j] - mu[j]).abs() <= 0.02, "{family:?} mean {m:?}");
        }
        let centered = x
            .rows()
            .map(|r| r.iter().zip(&m).map(|(a, b)| a - b).collect::<Vec<f64>>());
        let cov = PsdMatrix::new(second_moment(centered, 3)).unwrap();
        assert!(spectral_sandwich(&sigma, &cov, 0.1).unwrap(), "{family:?}");
    }
}

#[test]
fn rademacher_values_are_signs() {
    let spec = SynthSpec::new(
        Family::RademacherMixture,
        vec![0.0],
        PsdMatrix::identity(1),
        10_000,
    )
    .unwrap();
    let x = synthesize(&spec, &mut trial_rng(2, 0));
    assert!(x.as_slice().iter().all(|&v| v == 1.0 || v == -1.0));
    let plus = x.as_slice().iter().filter(|&&v| v == 1.0).count();
    assert!((4800..=5200).contains(&plus));
    let u = SynthSpec::new(
        Family::ScaledUniform,
        vec![0.0],
        PsdMatrix::identity(1),
        10_000,
    )
    .unwrap();
    let y = synthesize(&u, &mut trial_rng(2, 1));
    assert!(y.as_slice().iter().all(|v| v.abs() <= 3f64.sqrt()));
}

const CONFIG: &str = r#"
master_seed = 17
trials = 3
workers = 2

[[sweep]]
mechanism = "tukey"
n = [2000]
d = [1]
eps = [1.0]
delta = [1e-6]
alpha = [0.25]
beta = [0.05]
sigma_diag = [4.0]
mean = 2.0

[[sweep]]
mechanism = "rescaled"
family = "scaled_uniform"
n = [300, 600]
d = [2]
eps = [1.0]
delta = [1e-6]
alpha = [0.3]
beta = [0.05]
"#;

fn render(cfg: &ExperimentConfig) -> (Vec<u8>, Vec<u8>) {
    let recs = run_experiment(cfg).unwrap();
    let mut jsonl = Vec::new();
    write_jsonl(&mut jsonl, cfg, &recs).unwrap();
    let mut csv = Vec::new();
    write_csv(&mut csv, &recs).unwrap();
    (jsonl, csv)
}

#[test]
fn zero_trials_writes_only_the_header() {
    let mut cfg = ExperimentConfig::parse(CONFIG).unwrap();
    cfg.trials = 0;
    let (jsonl, csv) = render(&cfg);
    let text = String::from_utf8(jsonl).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("{\"header\""));
    assert_eq!(
        String::from_utf8(csv).unwrap().trim_end(),
        CSV_COLUMNS.join(",")
    );
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = ExperimentConfig::parse(CONFIG).unwrap();
    let a = render(&cfg);
    let mut single = cfg.clone();
    single.workers = 1;
    assert_eq!(a, render(&cfg));
    // The header echoes the worker count; the records do not depend on it.
    let b = render(&single);
    let body = |v: &[u8]| {
        String::from_utf8(v.to_vec())
            .unwrap()
            .lines()
            .skip(1)
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(body(&a.0), body(&b.0));
    assert_eq!(a.1, b.1);
    let mut other = cfg.clone();
    other.master_seed = 18;
    assert_ne!(a.0, render(&other).0);
}

#[test]
fn records_carry_declared_budgets() {
    let cfg = ExperimentConfig::parse(CONFIG).unwrap();
    let recs = run_experiment(&cfg).unwrap();
    assert_eq!(recs.len(), 9);
    for (i, r) in recs.iter().enumerate() {
        assert_eq!(r.trial, i as u64);
        assert_eq!(
            (r.ledger_epsilon, r.ledger_delta),
            declared_budget(&r.config)
        );
        assert!(r.mahalanobis_error.is_none_or(|e| e >= 0.0));
        assert_eq!(r.outcome.is_fail(), r.mahalanobis_error.is_none());
        assert_eq!(r.seconds, None);
        // Any record replays on its own.
        assert_eq!(
            &run_trial(&r.config, cfg.master_seed, r.trial, false).unwrap(),
            r
        );
    }
    let e = 1f64.exp();
    assert_eq!(declared_budget(&recs[0].config), (5.0, 3e-6 + e * 1e-6));
    assert_eq!(
        declared_budget(&recs[3].config),
        (3.0, e * (1.0 + e) * 1e-6)
    );
}

#[test]
fn finite_rescaled_ledger_matches_declared() {
    let spec = TrialSpec {
        mechanism: Mechanism::Rescaled,
        family: Family::Gaussian,
        n: 20_000,
        d: 1,
        eps: 4.0,
        delta: 1e-6,
        alpha: 0.3,
        beta: 0.05,
        mean: 0.0,
        sigma_diag: vec![1.0],
        mode: DistanceMode::Certificate,
        c_g: 1.0,
        c_lambda: 2.0,
        finite: true,
    };
    let gen = SynthSpec::new(
        Family::Gaussian,
        vec![0.0],
        PsdMatrix::identity(1),
        3 * spec.n,
    )
    .unwrap();
    let x = TripleDataset::new(synthesize(&gen, &mut trial_rng(3, 0))).unwrap();
    let mut ledger = CompositionLedger::new();
    let b = PrivacyBudget::new(spec.eps, spec.delta).unwrap();
    discrete_rescaled_pipeline(
        &x,
        b,
        spec.alpha,
        spec.beta,
        1.0,
        &RescaledConfig::default(),
        &mut trial_rng(3, 1),
        &mut ledger,
    )
    .unwrap();
    let (e, d) = ledger.total();
    let (de, dd) = declared_budget(&spec);
    assert!((e - de).abs() < 1e-12);
    assert!((d - dd).abs() <= 1e-9 * dd);
}

#[test]
fn summaries_are_deterministic() {
    let cfg = ExperimentConfig::parse(CONFIG).unwrap();
    let recs = run_experiment(&cfg).unwrap();
    let s = summarize(&recs);
    assert_eq!(s, summarize(&recs));
    assert_eq!(s.len(), 3);
    for g in &s {
        assert_eq!(g.trials, 3);
        let (lo, hi) = g.fail_rate_ci;
        let rate = g.fails as f64 / 3.0;
        assert!(lo <= rate && rate <= hi);
        if let Some((lo, mid, hi)) = g.median_error {
            assert!(lo <= mid && mid <= hi);
        }
    }
    // The rescaled grid points sit far below the size gate.
    assert_eq!(s[1].fails, 3);
    assert_eq!(s[2].fails, 3);
}

#[test]
fn config_errors_name_the_line() {
    let bad = CONFIG.replace("n = [300, 600]", "n = []");
    let err = ExperimentConfig::parse(&bad).unwrap_err().to_string();
    assert!(err.contains("line 17"), "{err}");
    let bad = CONFIG
        .replace("d = [2]", "d = [3]")
        .replace("mechanism = \"rescaled\"", "mechanism = \"tukey\"");
    assert!(ExperimentConfig::parse(&bad).is_err());
    assert!(ExperimentConfig::parse("master_seed = 1\ntrials = 1\nbogus = 2\n").is_err());
}
