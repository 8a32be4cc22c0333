use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use private_online::adaptive::ReplicaMode;
use private_online::harness::config::{resolve, ConfigFile};
use private_online::harness::experiment::trial_seeds;
use private_online::harness::{run_experiment, AdversaryKind, BoundConstants, ExperimentConfig, LearnerKind};
use private_online::hypothesis::{ClassKind, HypothesisClass};
use private_online::pipeline::PipelineMode;
use private_online::privacy::{
    audit_privacy, exhaustive_group_audit, exhaustive_neighbor_audit, CalibrationCache, CalibrationOptions,
    ExponentialMechanism, LearnerOracle, LearningParams, PrivacyParams, DEFAULT_EPSILON,
};

#[derive(Parser)]
#[command(name = "private-online", version, about = "Online learners built from a private PAC learner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play repeated games and write transcripts plus summary.json.
    ///
    /// Faithful mode replays each weak learner's history on every prediction,
    /// so its cost grows like T² times the number of boosted learners; keep
    /// T at a few thousand or below, or use fast mode with an oblivious
    /// adversary.
    Run(RunArgs),
    /// Find the smallest sample size at which the private learner is a weak PAC learner.
    Calibrate(CalibrateArgs),
    /// Check the privacy guarantee on every pair of samples up to a size.
    AuditPrivacy(AuditArgs),
    /// Repeat `run` for several horizons.
    Sweep(SweepArgs),
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// key = value file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    class: Option<ClassKind>,
    #[arg(long)]
    domain_size: Option<usize>,
    #[arg(long = "T")]
    horizon: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum)]
    adversary: Option<AdversaryKind>,
    /// Target concept index; drawn per trial when omitted.
    #[arg(long)]
    target: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<PipelineMode>,
    #[arg(long, value_enum)]
    replica: Option<ReplicaMode>,
    #[arg(long, value_enum)]
    learner: Option<LearnerKind>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dummy-sample size; calibrated (and cached) when omitted.
    #[arg(long)]
    m0: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    pool_size: Option<usize>,
    #[arg(long)]
    boosters: Option<usize>,
    #[arg(long)]
    bbm_c: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    calibration_cache: Option<PathBuf>,
    #[arg(long)]
    calibration_trials: Option<usize>,
}

const RUN_KEYS: &[&str] = &[
    "class",
    "domain-size",
    "T",
    "trials",
    "adversary",
    "target",
    "mode",
    "replica",
    "learner",
    "seed",
    "out",
    "m0",
    "eps",
    "pool-size",
    "boosters",
    "bbm-c",
    "c1",
    "c2",
    "calibration-cache",
    "calibration-trials",
];

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, value_enum, default_value_t = ClassKind::Thresholds)]
    class: ClassKind,
    #[arg(long, default_value_t = 8)]
    domain_size: usize,
    #[arg(long, default_value_t = 0.25)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, value_enum, default_value_t = ClassKind::Thresholds)]
    class: ClassKind,
    #[arg(long, default_value_t = 8)]
    domain_size: usize,
    /// Sample size for the single-pair spot check.
    #[arg(long, default_value_t = 4)]
    m: usize,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    eps: f64,
    /// Exhaustive audits run for every sample size up to this one.
    #[arg(long, default_value_t = 4)]
    exhaustive_limit: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long = "T-list", value_delimiter = ',', required = true)]
    horizons: Vec<usize>,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run(args) => {
            let cfg = experiment_config(&args, None)?;
            let summary = run_experiment(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&summary_line(&summary))?);
            Ok(summary.all_pass())
        }
        Command::Sweep(args) => {
            let base_out = out_dir(&args.run)?;
            let mut rows = Vec::new();
            let mut ok = true;
            for &t in &args.horizons {
                let mut run = args.run.clone();
                run.horizon = Some(t);
                run.out = Some(base_out.join(format!("T{t}")));
                let summary = run_experiment(&experiment_config(&run, Some(&base_out))?)?;
                ok &= summary.all_pass();
                rows.push(summary_line(&summary));
            }
            std::fs::create_dir_all(&base_out).with_context(|| format!("creating {}", base_out.display()))?;
            let path = base_out.join("sweep.json");
            std::fs::write(&path, serde_json::to_string_pretty(&rows)?)
                .with_context(|| format!("writing {}", path.display()))?;
            println!("{}", serde_json::to_string_pretty(&rows)?);
            Ok(ok)
        }
        Command::Calibrate(args) => {
            let class = HypothesisClass::new(args.class, args.domain_size)?;
            let oracle = ExponentialMechanism::new(class, PrivacyParams::new(args.eps)?);
            let params = LearningParams::new(args.alpha, args.beta)?;
            let options = CalibrationOptions {
                trials: args.trials,
                seed: args.seed,
                ..Default::default()
            };
            let calibration = match &args.cache {
                Some(path) => CalibrationCache::open(path)?.calibrate(&oracle, params, options)?,
                None => private_online::privacy::calibrate_sample_complexity(&oracle, params, options)?,
            };
            println!("{}", serde_json::to_string_pretty(&calibration)?);
            Ok(true)
        }
        Command::AuditPrivacy(args) => {
            let class = HypothesisClass::new(args.class, args.domain_size)?;
            let mut ok = true;
            let mut reports = Vec::new();
            for m in 1..=args.exhaustive_limit {
                let single = exhaustive_neighbor_audit(&class, m, args.eps)?;
                let group = exhaustive_group_audit(&class, m, args.eps)?;
                ok &= single.pass() && group.pass();
                reports.push(json!({ "m": m, "neighbors": single, "groups": group }));
            }
            let spot = spot_check(&class, args.m, args.eps)?;
            ok &= spot.pass;
            let out = json!({ "exhaustive": reports, "spot_check": spot });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(ok)
        }
    }
}

/// All-zeros against all-ones at instance 0: the pair differing in every position.
fn spot_check(
    class: &HypothesisClass,
    m: usize,
    eps: f64,
) -> anyhow::Result<private_online::privacy::PrivacyAuditReport> {
    use private_online::domain::{Example, LabeledSample};
    if m == 0 {
        bail!("--m must be positive");
    }
    let a = LabeledSample::repeated(Example::new(0, 0)?, m);
    let b = LabeledSample::repeated(Example::new(0, 1)?, m);
    Ok(audit_privacy(class, &a, &b, eps)?)
}

fn summary_line(s: &private_online::harness::MetricsSummary) -> serde_json::Value {
    json!({
        "T": s.config_echo.horizon,
        "trials": s.config_echo.trials,
        "m0": s.config_echo.m0,
        "mean_mistakes": s.mean_mistakes,
        "stderr": s.stderr,
        "bounds": s.bounds,
        "pass_flags": s.pass_flags,
        "out": s.config_echo.out,
    })
}

fn load_file(args: &RunArgs) -> anyhow::Result<ConfigFile> {
    match &args.config {
        Some(path) => {
            let file = ConfigFile::load(path)?;
            file.check_keys(RUN_KEYS)?;
            Ok(file)
        }
        None => Ok(ConfigFile::default()),
    }
}

fn out_dir(args: &RunArgs) -> anyhow::Result<PathBuf> {
    let file = load_file(args)?;
    Ok(resolve(args.out.clone(), &file, "out", PathBuf::from("out"))?)
}

fn experiment_config(args: &RunArgs, cache_dir: Option<&Path>) -> anyhow::Result<ExperimentConfig> {
    let file = load_file(args)?;
    let class = resolve(args.class, &file, "class", ClassKind::Thresholds)?;
    let domain_size = resolve(args.domain_size, &file, "domain-size", 8)?;
    let horizon = resolve(args.horizon, &file, "T", 200)?;
    let trials = resolve(args.trials, &file, "trials", 20)?;
    let seed = resolve(args.seed, &file, "seed", 0)?;
    let eps = resolve(args.eps, &file, "eps", DEFAULT_EPSILON)?;
    let out = resolve(args.out.clone(), &file, "out", PathBuf::from("out"))?;

    let m0 = match args.m0.or(file.get("m0")?) {
        Some(m) => m,
        None => {
            let default_cache = cache_dir.unwrap_or(Path::new(".")).join("calibration.json");
            let cache_path = resolve(args.calibration_cache.clone(), &file, "calibration-cache", default_cache)?;
            let trials = resolve(args.calibration_trials, &file, "calibration-trials", 2000)?;
            let c = HypothesisClass::new(class, domain_size)?;
            let oracle: Arc<dyn LearnerOracle> = Arc::new(ExponentialMechanism::new(c, PrivacyParams::new(eps)?));
            let options = CalibrationOptions {
                trials,
                ..Default::default()
            };
            CalibrationCache::open(&cache_path)?
                .calibrate(oracle.as_ref(), LearningParams::weak(), options)?
                .m0
        }
    };

    let mut cfg = ExperimentConfig::new(class, domain_size, horizon, trials, seed, m0);
    cfg.seeds = trial_seeds(seed, trials);
    cfg.adversary = resolve(args.adversary, &file, "adversary", AdversaryKind::Iid)?;
    cfg.target = args.target.or(file.get("target")?);
    cfg.learner = resolve(args.learner, &file, "learner", LearnerKind::Pipeline)?;
    cfg.mode = resolve(args.mode, &file, "mode", PipelineMode::Faithful)?;
    cfg.replica = resolve(args.replica, &file, "replica", ReplicaMode::Replay)?;
    cfg.epsilon = eps;
    cfg.pool_size = args.pool_size.or(file.get("pool-size")?);
    cfg.boosters = args.boosters.or(file.get("boosters")?);
    let d = BoundConstants::default();
    cfg.constants = BoundConstants {
        bbm_c: resolve(args.bbm_c, &file, "bbm-c", d.bbm_c)?,
        c1: resolve(args.c1, &file, "c1", d.c1)?,
        c2: resolve(args.c2, &file, "c2", d.c2)?,
    };
    cfg.out = Some(out);
    cfg.validate()?;
    Ok(cfg)
}
