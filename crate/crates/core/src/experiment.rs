//! Config-driven sweeps: synthesize data, run a mechanism, record the error.
//!
//! Trial `i` of a sweep (counted across all grid points in config order)
//! draws everything from stream `i` of the master seed, so any record can be
//! replayed alone and reruns are byte-identical.

use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dp::{CompositionLedger, PrivacyBudget};
use crate::error::{Error, Result};
use crate::linalg::{mahalanobis, PsdMatrix};
use crate::outcome::Outcome;
use crate::rescaled::{
    discrete_rescaled_pipeline, record_rescaled, rescaled_gaussian_mechanism, RescaledConfig,
    TripleDataset, C_LAMBDA,
};
use crate::rng::{trial_rng, SEED_DERIVATION};
use crate::stats::{clopper_pearson, quantile_ci};
use crate::synth::{synthesize, Family, SynthSpec};
use crate::tukey::pipeline::{discrete_tukey_pipeline, TukeyPipelineConfig};
use crate::tukey::ptr::DistanceMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Tukey,
    Rescaled,
}

impl Mechanism {
    pub fn name(self) -> &'static str {
        match self {
            Mechanism::Tukey => "tukey",
            Mechanism::Rescaled => "rescaled",
        }
    }

    /// Samples drawn for mechanism size `n`: `2n` for Tukey, `3n` for the
    /// rescaled mechanism.
    pub fn samples(self, n: usize) -> usize {
        match self {
            Mechanism::Tukey => 2 * n,
            Mechanism::Rescaled => 3 * n,
        }
    }
}

impl std::str::FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tukey" => Ok(Mechanism::Tukey),
            "rescaled" => Ok(Mechanism::Rescaled),
            other => Err(Error::InvalidParameter(format!(
                "unknown mechanism `{other}`"
            ))),
        }
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(8)
}

fn one() -> f64 {
    1.0
}

fn default_c_lambda() -> f64 {
    C_LAMBDA
}

fn default_family() -> Family {
    Family::Gaussian
}

fn default_mode() -> DistanceMode {
    DistanceMode::Certificate
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub trials: u64,
    /// Record wall time per trial. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub timing: bool,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub sweep: Vec<SweepConfig>,
}

/// Every combination of the listed values is one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub mechanism: Mechanism,
    #[serde(default = "default_family")]
    pub family: Family,
    pub n: Vec<usize>,
    pub d: Vec<usize>,
    pub eps: Vec<f64>,
    pub delta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Every coordinate of the true mean.
    #[serde(default)]
    pub mean: f64,
    /// Diagonal of the true covariance; identity when absent.
    #[serde(default)]
    pub sigma_diag: Option<Vec<f64>>,
    #[serde(default = "default_mode")]
    pub mode: DistanceMode,
    #[serde(default = "one")]
    pub c_g: f64,
    #[serde(default = "default_c_lambda")]
    pub c_lambda: f64,
    /// Run the rescaled mechanism through its finite pipeline.
    #[serde(default)]
    pub finite: bool,
}

/// One fully specified run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub mechanism: Mechanism,
    pub family: Family,
    pub n: usize,
    pub d: usize,
    pub eps: f64,
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mean: f64,
    pub sigma_diag: Vec<f64>,
    pub mode: DistanceMode,
    pub c_g: f64,
    pub c_lambda: f64,
    pub finite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub trial: u64,
    pub seed: u64,
    pub config: TrialSpec,
    pub outcome: Outcome,
    pub mahalanobis_error: Option<f64>,
    pub seconds: Option<f64>,
    pub ledger_epsilon: f64,
    pub ledger_delta: f64,
}

fn toml_line(text: &str, e: &toml::de::Error) -> usize {
    e.span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(1)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config {
            line: toml_line(text, &e),
            message: e.message().to_string(),
        })?;
        cfg.validate(text)?;
        Ok(cfg)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        ExperimentConfig::parse(&std::fs::read_to_string(path)?)
    }

    fn validate(&self, text: &str) -> Result<()> {
        // Line of the i-th `[[sweep]]` header, for diagnostics.
        let sweep_lines: Vec<usize> = text
            .lines()
            .enumerate()
            .filter(|(_, l)| l.trim() == "[[sweep]]")
            .map(|(i, _)| i + 1)
            .collect();
        if self.workers == 0 {
            return Err(Error::Config {
                line: 1,
                message: "workers must be positive".into(),
            });
        }
        for (i, s) in self.sweep.iter().enumerate() {
            let line = sweep_lines.get(i).copied().unwrap_or(1);
            let bad = |message: String| Error::Config { line, message };
            for (name, empty) in [
                ("n", s.n.is_empty()),
                ("d", s.d.is_empty()),
                ("eps", s.eps.is_empty()),
                ("delta", s.delta.is_empty()),
                ("alpha", s.alpha.is_empty()),
                ("beta", s.beta.is_empty()),
            ] {
                if empty {
                    return Err(bad(format!("`{name}` needs at least one value")));
                }
            }
            if s.n.contains(&0) || s.d.contains(&0) {
                return Err(bad("n and d must be positive".into()));
            }
            if s.mechanism == Mechanism::Tukey && s.d.iter().any(|&d| d > 2) {
                return Err(bad("the Tukey mechanism supports d <= 2".into()));
            }
            for &e in &s.eps {
                if !(e > 0.0 && e.is_finite()) {
                    return Err(bad(format!("eps must be positive, got {e}")));
                }
            }
            for &v in s.delta.iter().chain(&s.beta) {
                if !(v > 0.0 && v < 1.0) {
                    return Err(bad(format!("delta and beta must lie in (0, 1), got {v}")));
                }
            }
            if let Some(diag) = &s.sigma_diag {
                if s.d.iter().any(|&d| d != diag.len()) {
                    return Err(bad("sigma_diag length must equal every d".into()));
                }
                if diag.iter().any(|&v| !(v > 0.0)) {
                    return Err(bad("sigma_diag entries must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Grid points in config order, `n` varying slowest.
    pub fn points(&self) -> Vec<TrialSpec> {
        let mut out = Vec::new();
        for s in &self.sweep {
            for &n in &s.n {
                for &d in &s.d {
                    for &eps in &s.eps {
                        for &delta in &s.delta {
                            for &alpha in &s.alpha {
                                for &beta in &s.beta {
                                    out.push(TrialSpec {
                                        mechanism: s.mechanism,
                                        family: s.family,
                                        n,
                                        d,
                                        eps,
                                        delta,
                                        alpha,
                                        beta,
                                        mean: s.mean,
                                        sigma_diag: s.sigma_diag.clone().unwrap_or(vec![1.0; d]),
                                        mode: s.mode,
                                        c_g: s.c_g,
                                        c_lambda: s.c_lambda,
                                        finite: s.finite,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Budget a run of `spec` is declared to consume under basic composition.
pub fn declared_budget(spec: &TrialSpec) -> (f64, f64) {
    let (e, d) = (spec.eps, spec.delta);
    match (spec.mechanism, spec.finite) {
        (Mechanism::Tukey, _) => (3.0 * e + 2.0 * e, 3.0 * d + e.exp() * d),
        (Mechanism::Rescaled, false) => (3.0 * e, e.exp() * (1.0 + e.exp()) * d),
        (Mechanism::Rescaled, true) => (3.0 * e + 3.0 * e, 3.0 * d + e.exp() * (1.0 + e.exp()) * d),
    }
}

/// Runs one trial on stream `trial` of `seed`. Library errors become FAIL
/// outcomes carrying the error text.
pub fn run_trial(
    spec: &TrialSpec,
    seed: u64,
    trial: u64,
    timing: bool,
) -> Result<ExperimentRecord> {
    let mut rng = trial_rng(seed, trial);
    let sigma = PsdMatrix::diagonal(&spec.sigma_diag)?;
    let mu = vec![spec.mean; spec.d];
    let synth = SynthSpec::new(
        spec.family,
        mu.clone(),
        sigma.clone(),
        spec.mechanism.samples(spec.n),
    )?;
    let x = synthesize(&synth, &mut rng);
    let budget = PrivacyBudget::new(spec.eps, spec.delta)?;
    let start = Instant::now();
    let mut ledger = CompositionLedger::new();
    let result = match spec.mechanism {
        Mechanism::Tukey => {
            let cfg = TukeyPipelineConfig {
                c_g: spec.c_g,
                mode: spec.mode,
                ..TukeyPipelineConfig::default()
            };
            discrete_tukey_pipeline(
                &x,
                budget,
                spec.alpha,
                spec.beta,
                &cfg,
                &mut rng,
                &mut ledger,
            )
        }
        Mechanism::Rescaled => {
            let cfg = RescaledConfig {
                c_lambda: spec.c_lambda,
                ..RescaledConfig::default()
            };
            let triple = TripleDataset::new(x)?;
            if spec.finite {
                discrete_rescaled_pipeline(
                    &triple,
                    budget,
                    spec.alpha,
                    spec.beta,
                    spec.family.subgaussian_constant(),
                    &cfg,
                    &mut rng,
                    &mut ledger,
                )
            } else {
                let out = rescaled_gaussian_mechanism(&triple, budget, spec.beta, &cfg, &mut rng);
                record_rescaled(&mut ledger, budget);
                out
            }
        }
    };
    let seconds = timing.then(|| start.elapsed().as_secs_f64());
    let completed = result.is_ok();
    let outcome = match result {
        Ok(o) => o,
        Err(e) => Outcome::fail(e.to_string()),
    };
    let mahalanobis_error = match &outcome {
        Outcome::Estimate(y) => {
            let diff: Vec<f64> = y.iter().zip(&mu).map(|(a, b)| a - b).collect();
            Some(mahalanobis(&diff, &sigma)?)
        }
        Outcome::Fail { .. } => None,
    };
    // Early aborts still count against the full declared budget.
    let (ledger_epsilon, ledger_delta) = declared_budget(spec);
    if completed {
        let (e, d) = ledger.total();
        debug_assert!(
            (e - ledger_epsilon).abs() <= 1e-9 * ledger_epsilon
                && (d - ledger_delta).abs() <= 1e-9 * ledger_delta,
            "ledger ({e}, {d}) differs from declared ({ledger_epsilon}, {ledger_delta})"
        );
    }
    Ok(ExperimentRecord {
        trial,
        seed,
        config: spec.clone(),
        outcome,
        mahalanobis_error,
        seconds,
        ledger_epsilon,
        ledger_delta,
    })
}

/// All records of a config, in trial order. Trials run on a pool of
/// `config.workers` threads.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    let points = config.points();
    let jobs: Vec<(u64, &TrialSpec)> = points
        .iter()
        .flat_map(|p| std::iter::repeat_n(p, config.trials as usize))
        .enumerate()
        .map(|(i, p)| (i as u64, p))
        .collect();
    let slots: Mutex<Vec<Option<Result<ExperimentRecord>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..config.workers.min(jobs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(trial, spec)) = jobs.get(i) else {
                    break;
                };
                let r = run_trial(spec, config.master_seed, trial, config.timing);
                slots.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

/// First JSONL line: the seed derivation and the config echo.
pub fn jsonl_header(config: &ExperimentConfig) -> String {
    serde_json::json!({
        "header": {
            "master_seed": config.master_seed,
            "seed_derivation": SEED_DERIVATION,
            "trial_index": "counts trials across grid points in config order",
            "config": config,
        }
    })
    .to_string()
}

pub fn write_jsonl(
    out: &mut impl Write,
    config: &ExperimentConfig,
    records: &[ExperimentRecord],
) -> Result<()> {
    writeln!(out, "{}", jsonl_header(config))?;
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub const CSV_COLUMNS: [&str; 10] = [
    "mechanism",
    "n",
    "d",
    "eps",
    "delta",
    "outcome",
    "mahalanobis_error",
    "seconds",
    "seed",
    "trial",
];

pub fn write_csv(out: impl Write, records: &[ExperimentRecord]) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for r in records {
        let c = &r.config;
        let outcome = if r.outcome.is_fail() {
            "FAIL"
        } else {
            "estimate"
        };
        w.write_record([
            c.mechanism.name().to_string(),
            c.n.to_string(),
            c.d.to_string(),
            c.eps.to_string(),
            c.delta.to_string(),
            outcome.to_string(),
            r.mahalanobis_error
                .map(|v| v.to_string())
                .unwrap_or_default(),
            r.seconds.map(|v| v.to_string()).unwrap_or_default(),
            r.seed.to_string(),
            r.trial.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<out>` (JSONL records) and `<out>.csv`.
pub fn write_results(
    out: impl AsRef<Path>,
    config: &ExperimentConfig,
    records: &[ExperimentRecord],
) -> Result<()> {
    let out = out.as_ref();
    let mut f = std::io::BufWriter::new(std::fs::File::create(out)?);
    write_jsonl(&mut f, config, records)?;
    f.flush()?;
    let mut csv_path = out.as_os_str().to_owned();
    csv_path.push(".csv");
    write_csv(std::fs::File::create(csv_path)?, records)
}

/// Per grid point: FAIL rate and error quantiles with 99% intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: TrialSpec,
    pub trials: u64,
    pub fails: u64,
    pub fail_rate_ci: (f64, f64),
    /// `(lo, median, hi)` of the error among non-FAIL trials.
    pub median_error: Option<(f64, f64, f64)>,
    /// Fraction of all trials that succeeded with error at most `α`.
    pub success_rate: f64,
    pub success_rate_ci: (f64, f64),
}

pub fn summarize(records: &[ExperimentRecord]) -> Vec<Summary> {
    let mut groups: Vec<(TrialSpec, Vec<&ExperimentRecord>)> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|(c, _)| *c == r.config) {
            Some((_, v)) => v.push(r),
            None => groups.push((r.config.clone(), vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(config, rs)| {
            let trials = rs.len() as u64;
            let fails = rs.iter().filter(|r| r.outcome.is_fail()).count() as u64;
            let mut errs: Vec<f64> = rs.iter().filter_map(|r| r.mahalanobis_error).collect();
            errs.sort_by(f64::total_cmp);
            let successes = errs.iter().filter(|&&e| e <= config.alpha).count() as u64;
            Summary {
                trials,
                fails,
                fail_rate_ci: clopper_pearson(fails, trials, 0.99),
                median_error: (!errs.is_empty()).then(|| quantile_ci(&errs, 0.5, 0.99)),
                success_rate: successes as f64 / trials.max(1) as f64,
                success_rate_ci: clopper_pearson(successes, trials, 0.99),
                config,
            }
        })
        .collect()
}
