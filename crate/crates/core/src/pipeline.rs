//! The strong online learner: boosting-by-majority over wrapped copies of the
//! pool-based weak learner.

use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::adaptive::{AdaptiveWrapper, ReplicaMode};
use crate::boosting::{boost_schedule, Booster};
use crate::domain::{Instance, Label};
use crate::error::{Error, Result};
use crate::online::OnlineLearner;
use crate::privacy::LearnerOracle;
use crate::rng::derive_seed;
use crate::weak::{WeakLearnerConfig, WEAK_EDGE};

/// Whether weak learners sit behind the adaptive wrapper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PipelineMode {
    #[default]
    Faithful,
    /// Weak learners used directly. Only sound against oblivious adversaries.
    Fast,
}

impl std::fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PipelineMode::Faithful => "faithful",
            PipelineMode::Fast => "fast",
        })
    }
}

impl std::str::FromStr for PipelineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "faithful" => Ok(PipelineMode::Faithful),
            "fast" => Ok(PipelineMode::Fast),
            _ => Err(Error::Config(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub mode: PipelineMode,
    pub replica: ReplicaMode,
    /// Replaces `pool_size(m0, ε)` when set.
    pub pool_size: Option<usize>,
    /// Replaces `boost_schedule(T, 1/8)` when set.
    pub boosters: Option<usize>,
}

pub struct Pipeline {
    booster: Booster,
    weak: WeakLearnerConfig,
}

/// Booster over `boost_schedule(T, 1/8)` weak learners; learner `i` is seeded
/// with `derive_seed(seed, i + 1)`.
pub fn build_pipeline(
    oracle: Arc<dyn LearnerOracle>,
    m0: usize,
    horizon: usize,
    seed: u64,
    options: PipelineOptions,
) -> Result<Pipeline> {
    if horizon == 0 || m0 == 0 {
        return Err(Error::Precondition("pipeline needs T >= 1 and m0 >= 1".into()));
    }
    let mut weak = WeakLearnerConfig::faithful(oracle, m0, horizon)?;
    if let Some(n) = options.pool_size {
        if n == 0 {
            return Err(Error::Precondition("pool size must be positive".into()));
        }
        weak.pool_size = n;
    }
    let n_boost = match options.boosters {
        Some(n) => n,
        None => boost_schedule(horizon, WEAK_EDGE)?,
    };
    let factory = weak.factory();
    let learners = (0..n_boost)
        .map(|i| -> Result<Box<dyn OnlineLearner>> {
            let s = derive_seed(seed, i as u64 + 1);
            Ok(match options.mode {
                PipelineMode::Faithful => Box::new(AdaptiveWrapper::new(factory.clone(), horizon, s, options.replica)?),
                PipelineMode::Fast => factory(s)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Pipeline {
        booster: Booster::new(learners, WEAK_EDGE)?,
        weak,
    })
}

impl Pipeline {
    pub fn boosters(&self) -> usize {
        self.booster.len()
    }

    pub fn pool_size(&self) -> usize {
        self.weak.pool_size
    }

    pub fn weak_config(&self) -> &WeakLearnerConfig {
        &self.weak
    }

    pub fn booster(&self) -> &Booster {
        &self.booster
    }
}

impl OnlineLearner for Pipeline {
    fn predict(&mut self, x: Instance, rng: &mut dyn RngCore) -> Result<Label> {
        self.booster.booster_predict(x, rng)
    }

    fn update(&mut self, x: Instance, y: Label, rng: &mut dyn RngCore) -> Result<()> {
        self.booster.booster_update(x, y, rng)
    }
}

/// `c1 m0 ln T + c2`, a reference curve only.
pub fn theorem1_bound(m0: usize, horizon: usize, c1: f64, c2: f64) -> f64 {
    c1 * m0 as f64 * (horizon as f64).ln() + c2
}
