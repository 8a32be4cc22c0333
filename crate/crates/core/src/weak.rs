//! Weak online learner for oblivious adversaries: Multiplicative Weights run
//! over an expert pool drawn from the private learner.

use std::sync::Arc;

use rand::RngCore;

use crate::domain::{Instance, Label};
use crate::error::{Error, Result};
use crate::hypothesis::HypothesisClass;
use crate::mw::{mw_init, MwState};
use crate::online::{LearnerFactory, OnlineLearner};
use crate::pool::{pool_size, sample_pool, ExpertPool};
use crate::privacy::LearnerOracle;
use crate::rng::derive_seed;

/// Edge the weak learner guarantees.
pub const WEAK_EDGE: f64 = 0.125;

/// Constant `C` in the excess loss `T0 = C ln N`.
///
/// It is the smallest `C` with `2 sqrt(T ln N) + T/4 + T/16 <= (1/2 - 1/8) T + C ln N`
/// for every `T`: the left minus `3T/8` is `2 sqrt(T L) - T/16`, maximized at
/// `T = 256 L` with value `16 L`.
pub const EXCESS_LOSS_CONSTANT: f64 = 16.0;

/// Expected-mistake guarantee `(1/2 - γ) T + T0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakGuarantee {
    pub edge: f64,
    pub excess_loss: f64,
}

impl WeakGuarantee {
    /// Guarantee of the pool-plus-MW learner with `n` experts.
    pub fn for_pool(n: usize) -> Self {
        WeakGuarantee {
            edge: WEAK_EDGE,
            excess_loss: EXCESS_LOSS_CONSTANT * (n as f64).ln(),
        }
    }

    pub fn mistake_bound(&self, horizon: usize) -> f64 {
        (0.5 - self.edge) * horizon as f64 + self.excess_loss
    }
}

/// `2 sqrt(T ln N) + T/4 + T/16`, the mistake bound before it is relaxed to
/// edge form.
pub fn pool_mistake_bound(n: usize, horizon: usize) -> f64 {
    let t = horizon as f64;
    2.0 * (t * (n as f64).ln()).sqrt() + t / 4.0 + t / 16.0
}

#[derive(Debug, Clone)]
pub struct WeakLearner {
    class: Arc<HypothesisClass>,
    pool: ExpertPool,
    mw: MwState,
    horizon: usize,
}

impl WeakLearner {
    pub fn new(class: Arc<HypothesisClass>, pool: ExpertPool, horizon: usize) -> Result<Self> {
        for &h in &pool.experts {
            class.check_hypothesis(h)?;
        }
        let mw = mw_init(pool.len(), horizon)?;
        Ok(WeakLearner {
            class,
            pool,
            mw,
            horizon,
        })
    }

    pub fn pool(&self) -> &ExpertPool {
        &self.pool
    }

    pub fn mw(&self) -> &MwState {
        &self.mw
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Rounds whose labels have been consumed.
    pub fn rounds(&self) -> usize {
        self.mw.round()
    }

    /// Probability that the next prediction on `x` is 1.
    pub fn prob_one(&self, x: Instance) -> f64 {
        let total: f64 = self.mw.weights().iter().sum();
        let ones: f64 = self
            .pool
            .experts
            .iter()
            .zip(self.mw.weights())
            .filter(|(&h, _)| self.class.eval(h, x) == 1)
            .map(|(_, w)| w)
            .sum();
        ones / total
    }

    fn check_round(&self, x: Instance) -> Result<()> {
        if self.rounds() >= self.horizon {
            return Err(Error::HorizonExhausted(self.horizon));
        }
        self.class.check_instance(x)
    }
}

/// Draws `pool_size(m0, ε)` experts and initializes MW over them.
pub fn weak_init(oracle: &dyn LearnerOracle, m0: usize, horizon: usize, seed: u64) -> Result<WeakLearner> {
    let n = pool_size(m0, oracle.epsilon())?;
    weak_init_with_pool_size(oracle, m0, n, horizon, seed)
}

/// As [`weak_init`] with an explicit pool size.
pub fn weak_init_with_pool_size(
    oracle: &dyn LearnerOracle,
    m0: usize,
    n: usize,
    horizon: usize,
    seed: u64,
) -> Result<WeakLearner> {
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    let pool = sample_pool(oracle, m0, n, seed)?;
    WeakLearner::new(Arc::new(oracle.class().clone()), pool, horizon)
}

impl OnlineLearner for WeakLearner {
    fn predict(&mut self, x: Instance, rng: &mut dyn RngCore) -> Result<Label> {
        self.check_round(x)?;
        let j = self.mw.sample(rng);
        Ok(self.class.eval(self.pool.experts[j], x))
    }

    fn update(&mut self, x: Instance, y: Label, _: &mut dyn RngCore) -> Result<()> {
        self.check_round(x)?;
        let (class, experts) = (&self.class, &self.pool.experts);
        self.mw.penalize(|j| class.eval(experts[j], x) != y);
        Ok(())
    }
}

/// Everything needed to build weak learners from seeds.
#[derive(Clone)]
pub struct WeakLearnerConfig {
    pub oracle: Arc<dyn LearnerOracle>,
    pub m0: usize,
    pub pool_size: usize,
    pub horizon: usize,
}

impl WeakLearnerConfig {
    /// Config with the pool size `pool_size(m0, ε)`.
    pub fn faithful(oracle: Arc<dyn LearnerOracle>, m0: usize, horizon: usize) -> Result<Self> {
        let pool_size = pool_size(m0, oracle.epsilon())?;
        Ok(WeakLearnerConfig {
            oracle,
            m0,
            pool_size,
            horizon,
        })
    }

    pub fn guarantee(&self) -> WeakGuarantee {
        WeakGuarantee::for_pool(self.pool_size)
    }

    pub fn build(&self, seed: u64) -> Result<WeakLearner> {
        if self.horizon == 0 {
            return Err(Error::Precondition("horizon must be at least 1".into()));
        }
        let pool = sample_pool(self.oracle.as_ref(), self.m0, self.pool_size, derive_seed(seed, 0))?;
        let class = Arc::new(self.oracle.class().clone());
        WeakLearner::new(class, pool, self.horizon)
    }

    pub fn factory(&self) -> LearnerFactory {
        let cfg = self.clone();
        Arc::new(move |seed| Ok(Box::new(cfg.build(seed)?) as Box<dyn OnlineLearner>))
    }
}
