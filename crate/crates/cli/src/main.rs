//! `dpmean`: command-line front end for the private mean estimators.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use dpmean::audit::{
    adjacent_pair, mc_hockey_stick, tukey_neighbor_audit, AuditDistance, OutputBinning,
    PairStrategy,
};
use dpmean::calibrate::{goodness_rate, grid_constant_rate, stable_histogram_rate};
use dpmean::experiment::{run_experiment, summarize, write_results, ExperimentConfig, Mechanism};
use dpmean::linalg::PsdMatrix;
use dpmean::rescaled::{
    discrete_rescaled_pipeline, record_rescaled, rescaled_gaussian_mechanism, RescaledConfig,
    TripleDataset,
};
use dpmean::rng::{rng_from_seed, trial_rng};
use dpmean::synth::{synthesize, Family, SynthSpec};
use dpmean::tukey::exact::ExactSafety;
use dpmean::tukey::pipeline::{discrete_tukey_pipeline, TukeyPipelineConfig};
use dpmean::tukey::{tukey_depth, DistanceMode, GridSpec};
use dpmean::{CompositionLedger, Dataset, PrivacyBudget};

#[derive(Parser)]
#[command(
    name = "dpmean",
    version,
    about = "Differentially private mean estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one mechanism on a data file.
    Estimate(EstimateArgs),
    /// Run a config-driven sweep and write records.
    Bench(BenchArgs),
    /// Audit a mechanism's privacy on adjacent datasets.
    Audit(AuditArgs),
    /// Sweep one of the calibrated constants.
    Calibrate(CalibrateArgs),
    /// Tukey depth of points with respect to a data file.
    Depth(DepthArgs),
}

#[derive(Args)]
struct Privacy {
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Privacy {
    fn budget(&self) -> Result<PrivacyBudget> {
        Ok(PrivacyBudget::new(self.eps, self.delta)?)
    }
}

#[derive(Args)]
struct EstimateArgs {
    /// Data file: header `# dim=<d> n=<n>`, then one sample per line.
    data: PathBuf,
    #[arg(long, default_value = "rescaled")]
    mechanism: Mechanism,
    #[command(flatten)]
    privacy: Privacy,
    #[arg(long, default_value_t = 0.25)]
    alpha: f64,
    #[arg(long, default_value = "certificate")]
    mode: DistanceMode,
    /// Run the rescaled mechanism through its finite grid pipeline.
    #[arg(long)]
    finite: bool,
    /// Subgaussian constant of the data, used by the finite pipeline.
    #[arg(long, default_value_t = 1.0)]
    c_s: f64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// JSONL records; a CSV export is written next to it with `.csv` appended.
    #[arg(long)]
    out: PathBuf,
    /// Overrides `master_seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `trials` from the config.
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, default_value = "tukey")]
    mechanism: Mechanism,
    #[command(flatten)]
    privacy: Privacy,
    /// Tukey: dataset size (at most 6). Rescaled: points per third.
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Tukey: grid cells (at most 12).
    #[arg(long, default_value_t = 5)]
    cells: u64,
    #[arg(long, default_value = "exact")]
    mode: DistanceMode,
    /// Rescaled: Monte-Carlo runs per side.
    #[arg(long, default_value_t = 2000)]
    trials: u64,
    #[arg(long, default_value = "random_swap")]
    strategy: PairStrategy,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Target {
    Lambda,
    Histogram,
    Grid,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, value_enum)]
    target: Target,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    #[arg(long, default_value_t = 0.25)]
    alpha: f64,
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    /// Constants to try; a built-in list when omitted.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
}

#[derive(Args)]
struct DepthArgs {
    data: PathBuf,
    /// Query point, comma separated; repeatable.
    #[arg(long = "point", value_delimiter = ',', num_args = 1, action = clap::ArgAction::Append, required = true)]
    points: Vec<f64>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Estimate(a) => estimate(a, &mut out),
        Command::Bench(a) => bench(a, &mut out),
        Command::Audit(a) => audit(a, &mut out),
        Command::Calibrate(a) => calibrate(a, &mut out),
        Command::Depth(a) => depth(a, &mut out),
    }
}

fn estimate(a: EstimateArgs, out: &mut impl Write) -> Result<()> {
    let x = Dataset::read_file(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
    let budget = a.privacy.budget()?;
    let mut rng = rng_from_seed(a.privacy.seed);
    let mut ledger = CompositionLedger::new();
    let outcome = match a.mechanism {
        Mechanism::Tukey => {
            let cfg = TukeyPipelineConfig {
                mode: a.mode,
                ..TukeyPipelineConfig::default()
            };
            discrete_tukey_pipeline(
                &x,
                budget,
                a.alpha,
                a.privacy.beta,
                &cfg,
                &mut rng,
                &mut ledger,
            )
        }
        Mechanism::Rescaled => {
            let triple = TripleDataset::new(x)?;
            let cfg = RescaledConfig::default();
            if a.finite {
                discrete_rescaled_pipeline(
                    &triple,
                    budget,
                    a.alpha,
                    a.privacy.beta,
                    a.c_s,
                    &cfg,
                    &mut rng,
                    &mut ledger,
                )
            } else {
                let o =
                    rescaled_gaussian_mechanism(&triple, budget, a.privacy.beta, &cfg, &mut rng);
                record_rescaled(&mut ledger, budget);
                o
            }
        }
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => dpmean::Outcome::fail(e.to_string()),
    };
    let (le, ld) = ledger.total();
    writeln!(
        out,
        "{}",
        json!({ "outcome": outcome, "ledger": ledger.entries(), "ledger_total": [le, ld] })
    )?;
    Ok(())
}

fn bench(a: BenchArgs, out: &mut impl Write) -> Result<()> {
    let mut cfg = ExperimentConfig::read_file(&a.config)
        .with_context(|| format!("reading {}", a.config.display()))?;
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    let records = run_experiment(&cfg)?;
    write_results(&a.out, &cfg, &records)?;
    for s in summarize(&records) {
        writeln!(out, "{}", serde_json::to_string(&s)?)?;
    }
    Ok(())
}

fn audit(a: AuditArgs, out: &mut impl Write) -> Result<()> {
    let budget = a.privacy.budget()?;
    match a.mechanism {
        Mechanism::Tukey => {
            if a.d != 1 {
                bail!("the exact Tukey audit is one-dimensional");
            }
            let grid = GridSpec::with_cells(a.cells, 1.0, 1)?;
            let t = a.n as f64 / 4.0;
            let safety = ExactSafety::build(&grid, a.n, budget, t)?;
            let distance = match a.mode {
                DistanceMode::Exact => AuditDistance::Exact,
                DistanceMode::Certificate => AuditDistance::Certificate,
            };
            let bound = budget.epsilon().exp() * budget.delta();
            let mut worst = 0.0f64;
            let mut audited = 0;
            for counts in safety.multisets() {
                if !safety.is_safe_counts(counts) {
                    continue;
                }
                let r = tukey_neighbor_audit(&safety, counts, 2.0 * budget.epsilon(), distance)?;
                worst = worst.max(r.delta_hat);
                audited += 1;
                writeln!(
                    out,
                    "{}",
                    json!({ "counts": counts, "delta_hat": r.delta_hat, "bound": bound, "ok": r.delta_hat <= bound })
                )?;
            }
            writeln!(
                out,
                "{}",
                json!({ "summary": { "instances": audited, "epsilon_tested": 2.0 * budget.epsilon(), "worst_delta_hat": worst, "bound": bound, "ok": worst <= bound } })
            )?;
        }
        Mechanism::Rescaled => {
            let spec = SynthSpec::new(
                Family::Gaussian,
                vec![0.0; a.d],
                PsdMatrix::identity(a.d),
                3 * a.n,
            )?;
            let mut rng = trial_rng(a.privacy.seed, 0);
            let x = synthesize(&spec, &mut rng);
            let pair = adjacent_pair(&x, a.strategy, Some(&spec), &mut rng)?;
            let binning = OutputBinning::new(
                vec![-0.5; a.d],
                vec![0.5; a.d],
                if a.d == 1 { 100 } else { 20 },
            )?;
            let cfg = RescaledConfig::default();
            let beta = a.privacy.beta;
            let mech = |x: &Dataset, r: &mut dpmean::rng::DpRng| {
                TripleDataset::new(x.clone())
                    .and_then(|t| rescaled_gaussian_mechanism(&t, budget, beta, &cfg, r))
                    .unwrap_or_else(|e| dpmean::Outcome::fail(e.to_string()))
            };
            let eps_tested = 3.0 * budget.epsilon();
            let report = mc_hockey_stick(
                mech,
                &pair,
                &binning,
                eps_tested,
                a.trials,
                &mut trial_rng(a.privacy.seed, 1),
            );
            let e = budget.epsilon().exp();
            let bound = e * (1.0 + e) * budget.delta();
            writeln!(
                out,
                "{}",
                json!({ "strategy": a.strategy, "changed_index": pair.changed_index, "report": report, "bound": bound, "ok": report.confidence_interval.0 <= bound })
            )?;
        }
    }
    Ok(())
}

fn calibrate(a: CalibrateArgs, out: &mut impl Write) -> Result<()> {
    let budget = PrivacyBudget::new(a.eps, a.delta)?;
    let defaults: &[f64] = match a.target {
        Target::Lambda => &[0.5, 1.0, 1.5, 2.0, 4.0],
        Target::Histogram => &[5.0, 10.0, 20.0, 40.0],
        Target::Grid => &[0.5, 1.0, 2.0],
    };
    let values = if a.values.is_empty() {
        defaults.to_vec()
    } else {
        a.values.clone()
    };
    for c in values {
        let p = match a.target {
            Target::Lambda => goodness_rate(c, a.n, a.d, a.beta, a.trials, a.seed),
            Target::Histogram => stable_histogram_rate(c, budget, a.beta, a.trials, a.seed),
            Target::Grid => {
                if a.d > 2 {
                    bail!("the Tukey pipeline supports d <= 2");
                }
                grid_constant_rate(c, a.n, a.d, budget, a.alpha, a.beta, a.trials, a.seed)
            }
        };
        writeln!(
            out,
            "{}",
            json!({ "constant": p.constant, "successes": p.successes, "trials": p.trials, "rate": p.rate() })
        )?;
    }
    Ok(())
}

fn depth(a: DepthArgs, out: &mut impl Write) -> Result<()> {
    let x = Dataset::read_file(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
    let d = x.dim();
    if !a.points.len().is_multiple_of(d) {
        bail!("query coordinates do not split into points of dimension {d}");
    }
    for y in a.points.chunks(d) {
        let t = tukey_depth(&x, y)?;
        writeln!(
            out,
            "{}",
            json!({ "point": y, "depth": t, "count": (t * x.len() as f64).round() })
        )?;
    }
    Ok(())
}
