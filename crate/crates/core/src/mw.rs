//! Multiplicative Weights over a finite set of experts with 0/1 losses.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};

// Weights are rescaled by their maximum once it drops below this; the
// normalized distribution is unaffected.
const RESCALE_BELOW: f64 = 1e-150;

#[derive(Debug, Clone, PartialEq)]
pub struct MwState {
    weights: Vec<f64>,
    eta: f64,
    /// `exp(-eta)`, the factor applied to an expert that errs.
    penalty: f64,
    t: usize,
    horizon: usize,
}

/// Fresh state for `n` experts over `horizon` rounds, `η = sqrt(ln n / T)`.
pub fn mw_init(n: usize, horizon: usize) -> Result<MwState> {
    if n == 0 || horizon == 0 {
        return Err(Error::Precondition(format!(
            "MW needs at least one expert and one round, got N={n}, T={horizon}"
        )));
    }
    let eta = ((n as f64).ln() / horizon as f64).sqrt();
    Ok(MwState::with_eta(vec![1.0; n], eta, horizon))
}

impl MwState {
    /// State with explicit weights and step size.
    pub fn with_eta(weights: Vec<f64>, eta: f64, horizon: usize) -> Self {
        assert!(!weights.is_empty() && weights.iter().all(|&w| w > 0.0 && w.is_finite()));
        MwState {
            weights,
            eta,
            penalty: (-eta).exp(),
            t: 0,
            horizon,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Rounds of updates applied so far.
    pub fn round(&self) -> usize {
        self.t
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn distribution(&self) -> Vec<f64> {
        mw_distribution(self)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total: f64 = self.weights.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if target < acc {
                return i;
            }
        }
        self.weights.len() - 1
    }

    /// Multiplies expert `j`'s weight by `exp(-η)` wherever `errs(j)` holds.
    pub fn penalize(&mut self, mut errs: impl FnMut(usize) -> bool) {
        let mut max: f64 = 0.0;
        for (j, w) in self.weights.iter_mut().enumerate() {
            if errs(j) {
                *w *= self.penalty;
            }
            max = max.max(*w);
        }
        if max < RESCALE_BELOW {
            for w in &mut self.weights {
                *w /= max;
            }
        }
        self.t += 1;
    }
}

pub fn mw_distribution(state: &MwState) -> Vec<f64> {
    let total: f64 = state.weights.iter().sum();
    state.weights.iter().map(|w| w / total).collect()
}

/// One expert index drawn proportionally to the current weights.
pub fn mw_sample_expert(state: &MwState, rng: &mut dyn RngCore) -> usize {
    state.sample(rng)
}

/// `w_j <- w_j · exp(-η ℓ_j)` for binary losses.
pub fn mw_update(state: &mut MwState, losses: &[u8]) -> Result<()> {
    if losses.len() != state.len() {
        return Err(Error::LengthMismatch {
            expected: state.len(),
            got: losses.len(),
        });
    }
    if let Some(bad) = losses.iter().find(|&&l| l > 1) {
        return Err(Error::Precondition(format!("loss {bad} is not in {{0,1}}")));
    }
    state.penalize(|j| losses[j] == 1);
    Ok(())
}

/// `sqrt(2 T ln N)`.
pub fn mw_regret_bound(n: usize, horizon: usize) -> f64 {
    (2.0 * horizon as f64 * (n as f64).ln()).sqrt()
}

/// Exact expected loss of MW (η tuned to the matrix height) on a fixed loss
/// matrix with one row per round: `Σ_t ⟨p_t, ℓ_t⟩`.
pub fn mw_expected_loss_exact(losses: &[Vec<u8>]) -> Result<f64> {
    let n = losses.first().map(Vec::len).ok_or(Error::Precondition("empty loss matrix".into()))?;
    let mut state = mw_init(n, losses.len())?;
    let mut total = 0.0;
    for row in losses {
        if row.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: row.len(),
            });
        }
        let p = mw_distribution(&state);
        total += p.iter().zip(row).map(|(p, &l)| p * l as f64).sum::<f64>();
        mw_update(&mut state, row)?;
    }
    Ok(total)
}
