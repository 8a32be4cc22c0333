use rand::{Rng, RngCore};

use crate::domain::LabeledSample;
use crate::error::{Error, Result};
use crate::hypothesis::{HypothesisClass, HypothesisId};

pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyParams {
    epsilon: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon > 0.0 && epsilon.is_finite() {
            Ok(PrivacyParams { epsilon })
        } else {
            Err(Error::Precondition(format!("epsilon must be positive, got {epsilon}")))
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl Default for PrivacyParams {
    fn default() -> Self {
        PrivacyParams {
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// Black-box access to a pure-DP learner whose range is a finite class.
pub trait LearnerOracle: Send + Sync {
    fn class(&self) -> &HypothesisClass;

    /// Privacy budget the learner claims.
    fn epsilon(&self) -> f64;

    fn train(&self, sample: &LabeledSample, rng: &mut dyn RngCore) -> Result<HypothesisId>;
}

/// Exponential mechanism with score `-m * L_S(h)` (sensitivity 1).
#[derive(Debug, Clone)]
pub struct ExponentialMechanism {
    class: HypothesisClass,
    params: PrivacyParams,
}

impl ExponentialMechanism {
    pub fn new(class: HypothesisClass, params: PrivacyParams) -> Self {
        ExponentialMechanism { class, params }
    }

    pub fn with_default_epsilon(class: HypothesisClass) -> Self {
        Self::new(class, PrivacyParams::default())
    }

    pub fn distribution(&self, sample: &LabeledSample) -> Result<Vec<f64>> {
        exponential_mechanism_distribution(&self.class, sample, self.params.epsilon)
    }
}

impl LearnerOracle for ExponentialMechanism {
    fn class(&self) -> &HypothesisClass {
        &self.class
    }

    fn epsilon(&self) -> f64 {
        self.params.epsilon
    }

    fn train(&self, sample: &LabeledSample, rng: &mut dyn RngCore) -> Result<HypothesisId> {
        train(&self.class, sample, self.params.epsilon, rng)
    }
}

/// Mistake count of every hypothesis on `sample`. Runs of identical
/// consecutive examples are evaluated once.
fn error_counts(class: &HypothesisClass, sample: &LabeledSample) -> Vec<usize> {
    let mut counts = vec![0usize; class.size()];
    let examples = sample.examples();
    let mut i = 0;
    while i < examples.len() {
        let e = examples[i];
        let run = examples[i..].iter().take_while(|&&o| o == e).count();
        for (h, c) in counts.iter_mut().enumerate() {
            if class.eval(h, e.x) != e.y {
                *c += run;
            }
        }
        i += run;
    }
    counts
}

/// Natural-log output probabilities, `log p_j = -(ε/2)·errors_j - log Z`.
pub fn exponential_mechanism_log_distribution(
    class: &HypothesisClass,
    sample: &LabeledSample,
    epsilon: f64,
) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    PrivacyParams::new(epsilon)?;
    for e in sample.examples() {
        class.check_instance(e.x)?;
    }
    let scores: Vec<f64> = error_counts(class, sample)
        .into_iter()
        .map(|c| -0.5 * epsilon * c as f64)
        .collect();
    Ok(log_softmax(&scores))
}

pub(crate) fn log_softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    scores.iter().map(|s| s - log_z).collect()
}

pub fn exponential_mechanism_distribution(
    class: &HypothesisClass,
    sample: &LabeledSample,
    epsilon: f64,
) -> Result<Vec<f64>> {
    Ok(exponential_mechanism_log_distribution(class, sample, epsilon)?
        .into_iter()
        .map(f64::exp)
        .collect())
}

pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// One draw from the exponential mechanism.
pub fn train(
    class: &HypothesisClass,
    sample: &LabeledSample,
    epsilon: f64,
    rng: &mut dyn RngCore,
) -> Result<HypothesisId> {
    let probs = exponential_mechanism_distribution(class, sample, epsilon)?;
    Ok(sample_index(&probs, rng))
}
