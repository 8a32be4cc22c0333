//! Expert pools: hypotheses drawn from the private learner's output
//! distribution on a constant dummy sample.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Example, FiniteDistribution, Instance, LabeledSample};
use crate::error::{Error, Result};
use crate::hypothesis::HypothesisId;
use crate::privacy::LearnerOracle;
use crate::rng::{child_rng, rng_from_seed};

/// Largest pool `pool_size` will return.
pub const MAX_POOL_SIZE: usize = 1 << 24;

/// `m0` copies of `(x̄, 0)` with `x̄ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DummySample {
    pub m0: usize,
    pub instance: Instance,
}

impl DummySample {
    pub const LABEL: u8 = 0;

    pub fn new(m0: usize) -> Self {
        DummySample { m0, instance: 0 }
    }

    pub fn to_sample(&self) -> LabeledSample {
        LabeledSample::repeated(
            Example {
                x: self.instance,
                y: Self::LABEL,
            },
            self.m0,
        )
    }
}

/// Smallest `N` with `(1 - e^{-ε m0}/2)^N <= 1/16` under `1 - x <= e^{-x}`:
/// `N = ceil(2 e^{ε m0} ln 16)`.
pub fn pool_size(m0: usize, epsilon: f64) -> Result<usize> {
    pool_size_with_ceiling(m0, epsilon, MAX_POOL_SIZE)
}

pub fn pool_size_with_ceiling(m0: usize, epsilon: f64, ceiling: usize) -> Result<usize> {
    if m0 == 0 {
        return Err(Error::Precondition("m0 must be at least 1".into()));
    }
    let exponent = epsilon * m0 as f64;
    let n = (2.0 * exponent.exp() * 16f64.ln()).ceil();
    if !n.is_finite() || n > ceiling as f64 {
        return Err(Error::InfeasiblePool {
            exponent,
            ceiling: ceiling as u64,
        });
    }
    Ok(n as usize)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertPool {
    pub m0: usize,
    #[serde(rename = "N")]
    pub size: usize,
    pub seed: u64,
    pub experts: Vec<HypothesisId>,
}

impl ExpertPool {
    pub fn len(&self) -> usize {
        self.experts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experts.is_empty()
    }

    /// Population risk of the best expert.
    pub fn best_risk(&self, oracle: &dyn LearnerOracle, dist: &FiniteDistribution) -> f64 {
        self.experts
            .iter()
            .map(|&h| dist.risk(oracle.class(), h))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `n` independent outputs of the learner on the dummy sample, in draw order.
pub fn sample_pool(oracle: &dyn LearnerOracle, m0: usize, n: usize, seed: u64) -> Result<ExpertPool> {
    if n == 0 {
        return Err(Error::Precondition("pool size must be at least 1".into()));
    }
    let dummy = DummySample::new(m0).to_sample();
    let mut rng = rng_from_seed(seed);
    let experts = (0..n)
        .map(|_| oracle.train(&dummy, &mut rng as &mut dyn RngCore))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExpertPool {
        m0,
        size: n,
        seed,
        experts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageEstimate {
    pub trials: usize,
    pub covered: usize,
    pub frequency: f64,
    pub std_error: f64,
}

/// Fraction of independent pools containing an expert with risk at most 1/4.
pub fn coverage_estimate(
    oracle: &dyn LearnerOracle,
    m0: usize,
    n: usize,
    dist: &FiniteDistribution,
    trials: usize,
    seed: u64,
) -> Result<CoverageEstimate> {
    if trials < 200 {
        return Err(Error::Precondition(format!("need at least 200 trials, got {trials}")));
    }
    if dist.realizing_hypothesis(oracle.class()).is_none() {
        return Err(Error::NotRealizable);
    }
    let hits: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let pool_seed = rand::Rng::random(&mut child_rng(seed, k as u64));
            let pool = sample_pool(oracle, m0, n, pool_seed)?;
            Ok(pool.best_risk(oracle, dist) <= 0.25)
        })
        .collect::<Result<_>>()?;
    let covered = hits.iter().filter(|&&h| h).count();
    let p = covered as f64 / trials as f64;
    Ok(CoverageEstimate {
        trials,
        covered,
        frequency: p,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
    })
}
