use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::FiniteDistribution;
use crate::error::{Error, Result};
use crate::hypothesis::{HypothesisClass, HypothesisId};
use crate::rng::{child_rng, GameRng};

use super::exponential::LearnerOracle;

/// Accuracy `alpha` and confidence `beta`, both strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningParams {
    pub alpha: f64,
    pub beta: f64,
}

impl LearningParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let inside = |v: f64| v > 0.0 && v < 1.0;
        if inside(alpha) && inside(beta) {
            Ok(LearningParams { alpha, beta })
        } else {
            Err(Error::Precondition(format!(
                "alpha and beta must lie in (0,1), got ({alpha}, {beta})"
            )))
        }
    }

    /// The `(1/4, 1/2)` accuracy/confidence pair the expert pool relies on.
    pub fn weak() -> Self {
        LearningParams { alpha: 0.25, beta: 0.5 }
    }
}

/// `ceil((8 / (ε α)) (ln|H| + ln(2/β)))`.
pub fn sample_complexity_formula(class_size: usize, params: LearningParams, epsilon: f64) -> usize {
    let m = (8.0 / (epsilon * params.alpha)) * ((class_size as f64).ln() + (2.0 / params.beta).ln());
    (m.ceil() as usize).max(1)
}

const MAX_ATOMS: usize = 16;

/// A uniformly random target from the class and an instance marginal drawn
/// uniformly from the simplex over up to 16 evenly spaced grid atoms.
pub fn random_realizable_distribution<R: Rng + ?Sized>(
    class: &HypothesisClass,
    rng: &mut R,
) -> (FiniteDistribution, HypothesisId) {
    let d = class.domain_size();
    let target = rng.random_range(0..class.size());
    let atoms = d.min(MAX_ATOMS);
    let weights: Vec<f64> = (0..atoms).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = weights.iter().sum();
    let marginal: Vec<(usize, f64)> = (0..atoms)
        .map(|i| (i * d / atoms, weights[i] / total))
        .collect();
    let dist = FiniteDistribution::realizable(class, target, &marginal)
        .expect("grid atoms are distinct and inside the domain");
    (dist, target)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacEstimate {
    pub trials: usize,
    pub successes: usize,
    pub frequency: f64,
    pub std_error: f64,
}

impl PacEstimate {
    fn from_counts(successes: usize, trials: usize) -> Self {
        let p = successes as f64 / trials as f64;
        PacEstimate {
            trials,
            successes,
            frequency: p,
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }
}

fn trial_success(oracle: &dyn LearnerOracle, m: usize, alpha: f64, rng: &mut GameRng) -> Result<bool> {
    let class = oracle.class();
    let (dist, _) = random_realizable_distribution(class, rng);
    let sample = dist.sample(m, rng);
    let h = oracle.train(&sample, rng as &mut dyn RngCore)?;
    Ok(dist.risk(class, h) <= alpha)
}

/// Monte Carlo estimate of `Pr[L_D(A(S)) <= alpha]` over random realizable
/// `D` and `S ~ D^m`. Trial `k` uses the child stream `k` of `seed`, so the
/// same `(D, c)` sequence is seen for every `m`.
pub fn pac_validate(
    oracle: &dyn LearnerOracle,
    m: usize,
    params: LearningParams,
    trials: usize,
    seed: u64,
) -> Result<PacEstimate> {
    if m == 0 {
        return Err(Error::Precondition("sample size must be positive".into()));
    }
    if trials < 1000 {
        return Err(Error::Precondition(format!("need at least 1000 trials, got {trials}")));
    }
    let outcomes: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|k| trial_success(oracle, m, params.alpha, &mut child_rng(seed, k as u64)))
        .collect::<Result<_>>()?;
    Ok(PacEstimate::from_counts(outcomes.iter().filter(|&&s| s).count(), trials))
}

#[derive(Debug, Clone, Copy)]
pub struct CalibrationOptions {
    pub trials: usize,
    pub seed: u64,
    /// Largest sample size the search may try.
    pub ceiling: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            trials: 2000,
            seed: 0,
            ceiling: 1 << 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub m0: usize,
    pub estimate: PacEstimate,
    /// Success frequency a candidate had to reach.
    pub threshold: f64,
    pub formula_bound: usize,
}

/// Smallest `m` whose Monte Carlo success frequency reaches `(1-β) + 2σ`,
/// with `σ` the binomial standard error at `p = 1-β`.
///
/// Candidates grow by doubling (the formula bound is tried before the first
/// power of two that exceeds it), then a binary search below the first passing
/// candidate returns the smallest passing `m`.
pub fn calibrate_sample_complexity(
    oracle: &dyn LearnerOracle,
    params: LearningParams,
    options: CalibrationOptions,
) -> Result<Calibration> {
    let CalibrationOptions { trials, seed, ceiling } = options;
    let sigma = (params.beta * (1.0 - params.beta) / trials as f64).sqrt();
    let threshold = (1.0 - params.beta) + 2.0 * sigma;
    let formula = sample_complexity_formula(oracle.class().size(), params, oracle.epsilon());

    let mut cache: BTreeMap<usize, PacEstimate> = BTreeMap::new();
    let mut passes = |m: usize| -> Result<bool> {
        let est = match cache.get(&m) {
            Some(e) => *e,
            None => *cache
                .entry(m)
                .or_insert(pac_validate(oracle, m, params, trials, seed)?),
        };
        Ok(est.frequency >= threshold)
    };

    let mut lo = 0; // largest known failing size
    let mut hi = None;
    let mut m = 1;
    let mut formula_tried = false;
    while m <= ceiling {
        if m > formula && !formula_tried {
            formula_tried = true;
            if formula > lo && passes(formula)? {
                hi = Some(formula);
                break;
            }
            lo = lo.max(formula);
        }
        if passes(m)? {
            hi = Some(m);
            break;
        }
        lo = m;
        m *= 2;
    }
    let mut hi = hi.ok_or(Error::CalibrationFailed(ceiling))?;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if passes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let estimate = cache[&hi];
    Ok(Calibration {
        m0: hi,
        estimate,
        threshold,
        formula_bound: formula,
    })
}

/// Calibrated sample sizes persisted as JSON, keyed by class and parameters.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct CalibrationCache {
    #[serde(skip)]
    path: Option<PathBuf>,
    entries: BTreeMap<String, Calibration>,
}

impl CalibrationCache {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cache = if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text)?
        } else {
            CalibrationCache::default()
        };
        cache.path = Some(path.to_path_buf());
        Ok(cache)
    }

    pub fn key(oracle: &dyn LearnerOracle, params: LearningParams, options: &CalibrationOptions) -> String {
        let class = oracle.class();
        format!(
            "{}:d={}:alpha={}:beta={}:eps={}:trials={}:seed={}",
            class.kind(),
            class.domain_size(),
            params.alpha,
            params.beta,
            oracle.epsilon(),
            options.trials,
            options.seed
        )
    }

    pub fn get(&self, key: &str) -> Option<&Calibration> {
        self.entries.get(key)
    }

    /// Cached calibration, computing and persisting it on a miss.
    pub fn calibrate(
        &mut self,
        oracle: &dyn LearnerOracle,
        params: LearningParams,
        options: CalibrationOptions,
    ) -> Result<Calibration> {
        let key = Self::key(oracle, params, &options);
        if let Some(c) = self.entries.get(&key) {
            return Ok(c.clone());
        }
        let c = calibrate_sample_complexity(oracle, params, options)?;
        self.entries.insert(key, c.clone());
        self.save()?;
        Ok(c)
    }

    fn save(&self) -> Result<()> {
        if let Some(path) = &self.path {
            if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            let text = serde_json::to_string_pretty(self)?;
            std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}
