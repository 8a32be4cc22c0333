use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::{AdaptiveWrapper, ReplicaMode};
use crate::boosting::{bbm_mistake_bound, boost_schedule};
use crate::domain::Transcript;
use crate::error::{Error, Result};
use crate::harness::adversary::{AdversaryKind, AdversarySpec};
use crate::harness::game::run_game;
use crate::hypothesis::{ClassKind, HypothesisClass, HypothesisId};
use crate::mw::mw_regret_bound;
use crate::online::OnlineLearner;
use crate::pipeline::{build_pipeline, theorem1_bound, PipelineMode, PipelineOptions};
use crate::pool::pool_size;
use crate::privacy::{ExponentialMechanism, LearnerOracle, PrivacyParams};
use crate::rng::{child_rng, derive_seed};
use crate::weak::{pool_mistake_bound, WeakGuarantee, WeakLearnerConfig, WEAK_EDGE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    /// Boosted, wrapped weak learners.
    #[default]
    Pipeline,
    /// A single weak learner with no wrapper.
    Weak,
    /// A single weak learner behind the adaptive wrapper.
    Wrapped,
}

impl std::fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LearnerKind::Pipeline => "pipeline",
            LearnerKind::Weak => "weak",
            LearnerKind::Wrapped => "wrapped",
        })
    }
}

impl std::str::FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pipeline" => Ok(LearnerKind::Pipeline),
            "weak" => Ok(LearnerKind::Weak),
            "wrapped" => Ok(LearnerKind::Wrapped),
            _ => Err(Error::Config(format!("unknown learner {s:?}"))),
        }
    }
}

/// Constants for the reference bounds that have no closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub bbm_c: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        BoundConstants {
            bbm_c: 1.0,
            c1: 1.0,
            c2: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub class: ClassKind,
    pub domain_size: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub trials: usize,
    pub seeds: Vec<u64>,
    pub adversary: AdversaryKind,
    pub target: Option<HypothesisId>,
    pub learner: LearnerKind,
    pub mode: PipelineMode,
    pub replica: ReplicaMode,
    pub m0: usize,
    pub epsilon: f64,
    pub pool_size: Option<usize>,
    pub boosters: Option<usize>,
    pub constants: BoundConstants,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults everywhere else; trial `k` uses seed `derive_seed(seed, k)`.
    pub fn new(class: ClassKind, domain_size: usize, horizon: usize, trials: usize, seed: u64, m0: usize) -> Self {
        ExperimentConfig {
            class,
            domain_size,
            horizon,
            trials,
            seeds: trial_seeds(seed, trials),
            adversary: AdversaryKind::Iid,
            target: None,
            learner: LearnerKind::Pipeline,
            mode: PipelineMode::Faithful,
            replica: ReplicaMode::Replay,
            m0,
            epsilon: crate::privacy::DEFAULT_EPSILON,
            pool_size: None,
            boosters: None,
            constants: BoundConstants::default(),
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.horizon == 0 {
            return Err(Error::Config("trials and T must be at least 1".into()));
        }
        if self.seeds.len() != self.trials {
            return Err(Error::Config(format!(
                "{} seeds given for {} trials",
                self.seeds.len(),
                self.trials
            )));
        }
        if self.m0 == 0 {
            return Err(Error::Config("m0 must be at least 1".into()));
        }
        if self.learner == LearnerKind::Pipeline && self.mode == PipelineMode::Fast && !self.adversary.is_oblivious() {
            return Err(Error::Config(format!(
                "fast mode drops the adaptive wrapper and needs an oblivious adversary, got {}",
                self.adversary
            )));
        }
        Ok(())
    }

    pub fn class(&self) -> Result<HypothesisClass> {
        HypothesisClass::new(self.class, self.domain_size)
    }

    pub fn oracle(&self) -> Result<Arc<dyn LearnerOracle>> {
        Ok(Arc::new(ExponentialMechanism::new(self.class()?, PrivacyParams::new(self.epsilon)?)))
    }

    pub fn effective_pool_size(&self) -> Result<usize> {
        match self.pool_size {
            Some(n) => Ok(n),
            None => pool_size(self.m0, self.epsilon),
        }
    }

    pub fn effective_boosters(&self) -> Result<usize> {
        match self.boosters {
            Some(n) => Ok(n),
            None => boost_schedule(self.horizon, WEAK_EDGE),
        }
    }

    fn weak_config(&self, oracle: Arc<dyn LearnerOracle>) -> Result<WeakLearnerConfig> {
        Ok(WeakLearnerConfig {
            oracle,
            m0: self.m0,
            pool_size: self.effective_pool_size()?,
            horizon: self.horizon,
        })
    }

    pub fn build_learner(&self, oracle: &Arc<dyn LearnerOracle>, seed: u64) -> Result<Box<dyn OnlineLearner>> {
        Ok(match self.learner {
            LearnerKind::Pipeline => {
                let options = PipelineOptions {
                    mode: self.mode,
                    replica: self.replica,
                    pool_size: self.pool_size,
                    boosters: self.boosters,
                };
                Box::new(build_pipeline(oracle.clone(), self.m0, self.horizon, seed, options)?)
            }
            LearnerKind::Weak => Box::new(self.weak_config(oracle.clone())?.build(seed)?),
            LearnerKind::Wrapped => {
                let factory = self.weak_config(oracle.clone())?.factory();
                Box::new(AdaptiveWrapper::new(factory, self.horizon, seed, self.replica)?)
            }
        })
    }

    pub fn adversary_spec(&self) -> AdversarySpec {
        AdversarySpec {
            target: self.target,
            ..AdversarySpec::new(self.adversary)
        }
    }

    /// The reference bounds evaluated at this config's parameters.
    pub fn bounds(&self) -> Result<ReferenceBounds> {
        let n = self.effective_pool_size()?;
        let t = self.horizon;
        Ok(ReferenceBounds {
            mw: mw_regret_bound(n, t),
            weak: pool_mistake_bound(n, t),
            bbm: bbm_mistake_bound(
                self.effective_boosters()?,
                WEAK_EDGE,
                t,
                WeakGuarantee::for_pool(n).excess_loss,
                self.constants.bbm_c,
            ),
            theorem1: theorem1_bound(self.m0, t, self.constants.c1, self.constants.c2),
        })
    }
}

pub fn trial_seeds(seed: u64, trials: usize) -> Vec<u64> {
    (0..trials as u64).map(|k| derive_seed(seed, k)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBounds {
    pub mw: f64,
    pub weak: f64,
    pub bbm: f64,
    pub theorem1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub config_echo: ExperimentConfig,
    pub mistakes: Vec<usize>,
    pub mean_mistakes: f64,
    pub stderr: f64,
    pub bounds: ReferenceBounds,
    pub pass_flags: BTreeMap<String, bool>,
}

impl MetricsSummary {
    pub fn all_pass(&self) -> bool {
        self.pass_flags.values().all(|&p| p)
    }
}

/// Sample mean and `σ/√n` with the unbiased sample deviation; zero spread
/// when `n = 1`.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One game: learner seeded by `derive_seed(seed, 0)`, adversary randomness
/// from `child_rng(seed, 1)`, game randomness from `derive_seed(seed, 2)`.
pub fn run_trial(config: &ExperimentConfig, oracle: &Arc<dyn LearnerOracle>, seed: u64) -> Result<Transcript> {
    let class = Arc::new(oracle.class().clone());
    let mut adversary = config
        .adversary_spec()
        .build(&class, config.horizon, &mut child_rng(seed, 1))?;
    let mut learner = config.build_learner(oracle, derive_seed(seed, 0))?;
    run_game(&mut *learner, &mut *adversary, &class, config.horizon, derive_seed(seed, 2))
}

pub fn transcript_path(dir: &Path, trial: usize) -> PathBuf {
    dir.join(format!("transcript_{trial}.csv"))
}

/// Runs every trial, writes `transcript_<trial>.csv` and `summary.json` when
/// `config.out` is set, and returns the summary.
pub fn run_experiment(config: &ExperimentConfig) -> Result<MetricsSummary> {
    config.validate()?;
    let oracle = config.oracle()?;
    let bounds = config.bounds()?;
    if let Some(dir) = &config.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let transcripts: Vec<Transcript> = config
        .seeds
        .par_iter()
        .enumerate()
        .map(|(k, &seed)| {
            let t = run_trial(config, &oracle, seed)?;
            if let Some(dir) = &config.out {
                let path = transcript_path(dir, k);
                let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
                t.write_csv(BufWriter::new(file))?;
            }
            Ok(t)
        })
        .collect::<Result<_>>()?;

    let class = oracle.class();
    let mistakes: Vec<usize> = transcripts.iter().map(Transcript::mistakes).collect();
    let values: Vec<f64> = mistakes.iter().map(|&m| m as f64).collect();
    let (mean, se) = mean_and_stderr(&values);
    let mut pass_flags = BTreeMap::new();
    pass_flags.insert(
        "realizable".to_string(),
        transcripts.iter().all(|t| t.realizing_hypotheses(class).next().is_some()),
    );
    match config.learner {
        LearnerKind::Weak | LearnerKind::Wrapped => {
            pass_flags.insert("weak_bound".to_string(), mean <= bounds.weak + 3.0 * se);
        }
        LearnerKind::Pipeline => {
            pass_flags.insert("bbm_bound".to_string(), mean <= bounds.bbm + 3.0 * se);
        }
    }
    let summary = MetricsSummary {
        config_echo: config.clone(),
        mistakes,
        mean_mistakes: mean,
        stderr: se,
        bounds,
        pass_flags,
    };
    if let Some(dir) = &config.out {
        let path = dir.join("summary.json");
        let text = serde_json::to_string_pretty(&summary)?;
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Transcript;

    fn small(learner: LearnerKind) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(ClassKind::Thresholds, 4, 30, 3, 11, 4);
        c.learner = learner;
        c.boosters = Some(5);
        c
    }

    #[test]
    fn single_trial_matches_run_game() {
        let mut cfg = small(LearnerKind::Weak);
        cfg.trials = 1;
        cfg.seeds = vec![77];
        let summary = run_experiment(&cfg).unwrap();
        let oracle = cfg.oracle().unwrap();
        let direct = run_trial(&cfg, &oracle, 77).unwrap();
        assert_eq!(summary.mistakes, vec![direct.mistakes()]);
        assert_eq!(summary.stderr, 0.0);
    }

    #[test]
    fn constant_data_stats() {
        assert_eq!(mean_and_stderr(&[4.0, 4.0, 4.0]), (4.0, 0.0));
        let (m, se) = mean_and_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bounds_match_bound_ops() {
        let cfg = small(LearnerKind::Pipeline);
        let b = cfg.bounds().unwrap();
        let n = pool_size(4, 0.1).unwrap();
        assert_eq!(b.mw, mw_regret_bound(n, 30));
        assert_eq!(b.weak, pool_mistake_bound(n, 30));
        assert_eq!(b.bbm, bbm_mistake_bound(5, 0.125, 30, 16.0 * (n as f64).ln(), 1.0));
        assert_eq!(b.theorem1, theorem1_bound(4, 30, 1.0, 0.0));
    }

    #[test]
    fn writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(LearnerKind::Pipeline);
        cfg.adversary = AdversaryKind::Tracker;
        cfg.out = Some(dir.path().to_path_buf());
        let summary = run_experiment(&cfg).unwrap();
        for k in 0..3 {
            let text = std::fs::read_to_string(transcript_path(dir.path(), k)).unwrap();
            let t = Transcript::read_csv(text.as_bytes(), 30, cfg.seeds[k]).unwrap();
            assert_eq!(t.mistakes(), summary.mistakes[k]);
        }
        let text = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
        let back: MetricsSummary = serde_json::from_str(&text).unwrap();
        assert_eq!(back, summary);
        assert!(summary.pass_flags["realizable"]);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = small(LearnerKind::Pipeline);
        cfg.seeds.pop();
        assert!(cfg.validate().is_err());
        let mut cfg = small(LearnerKind::Pipeline);
        cfg.mode = PipelineMode::Fast;
        cfg.adversary = AdversaryKind::Tracker;
        assert!(cfg.validate().is_err());
        cfg.adversary = AdversaryKind::Iid;
        assert!(cfg.validate().is_ok());
    }
}
