//! Oblivious-to-adaptive conversion. Round `t` is answered by replica `t`,
//! an independently seeded copy of the base learner that has been fed the
//! revealed history but whose own earlier predictions were never shown to
//! the adversary.

use std::collections::VecDeque;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::domain::{Example, Instance, Label};
use crate::error::{Error, Result};
use crate::harness::adversary::Adversary;
use crate::online::{LearnerFactory, OnlineLearner};
use crate::rng::{child_rng, derive_seed, GameRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReplicaMode {
    /// Build replica `t` at round `t` and replay the history into it.
    #[default]
    Replay,
    /// Keep every not-yet-used replica alive and feed it each round.
    Live,
}

impl std::fmt::Display for ReplicaMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReplicaMode::Replay => "replay",
            ReplicaMode::Live => "live",
        })
    }
}

impl std::str::FromStr for ReplicaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "replay" => Ok(ReplicaMode::Replay),
            "live" => Ok(ReplicaMode::Live),
            _ => Err(Error::Config(format!("unknown replica mode {s:?}"))),
        }
    }
}

struct Replica {
    learner: Box<dyn OnlineLearner>,
    rng: GameRng,
}

impl Replica {
    fn new(factory: &LearnerFactory, base_seed: u64, index: usize) -> Result<Self> {
        let seed = derive_seed(base_seed, index as u64);
        Ok(Replica {
            learner: factory(derive_seed(seed, 0))?,
            rng: child_rng(seed, 1),
        })
    }

    /// One full round whose prediction is thrown away.
    fn absorb(&mut self, e: Example) -> Result<()> {
        self.learner.predict(e.x, &mut self.rng)?;
        self.learner.update(e.x, e.y, &mut self.rng)
    }

    fn predict(&mut self, x: Instance) -> Result<Label> {
        self.learner.predict(x, &mut self.rng)
    }
}

pub struct AdaptiveWrapper {
    factory: LearnerFactory,
    seed: u64,
    horizon: usize,
    mode: ReplicaMode,
    history: Vec<Example>,
    /// Predictions made so far; the next prediction uses replica `predictions + 1`.
    predictions: usize,
    /// Instance of the current round with the replica that answered it.
    pending: Option<(Instance, Option<Replica>)>,
    /// Live mode: replicas `predictions + 1 ..= horizon`, front first.
    live: VecDeque<Replica>,
}

impl AdaptiveWrapper {
    pub fn new(factory: LearnerFactory, horizon: usize, seed: u64, mode: ReplicaMode) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Precondition("horizon must be at least 1".into()));
        }
        let live = match mode {
            ReplicaMode::Replay => VecDeque::new(),
            ReplicaMode::Live => (1..=horizon)
                .map(|j| Replica::new(&factory, seed, j))
                .collect::<Result<_>>()?,
        };
        Ok(AdaptiveWrapper {
            factory,
            seed,
            horizon,
            mode,
            history: Vec::new(),
            predictions: 0,
            pending: None,
            live,
        })
    }

    pub fn history(&self) -> &[Example] {
        &self.history
    }

    pub fn predictions(&self) -> usize {
        self.predictions
    }

    pub fn mode(&self) -> ReplicaMode {
        self.mode
    }

    /// Prediction of replica `t` on `x` after replaying the current history.
    pub fn wrap_predict(&mut self, x: Instance) -> Result<Label> {
        if self.predictions >= self.horizon {
            return Err(Error::HorizonExhausted(self.horizon));
        }
        let index = self.predictions + 1;
        let mut replica = match self.mode {
            ReplicaMode::Replay => {
                let mut r = Replica::new(&self.factory, self.seed, index)?;
                for &e in &self.history {
                    r.absorb(e)?;
                }
                r
            }
            ReplicaMode::Live => self.live.pop_front().expect("one live replica per remaining round"),
        };
        let yhat = replica.predict(x)?;
        self.predictions = index;
        self.pending = Some((x, Some(replica)));
        Ok(yhat)
    }

    /// Appends the revealed example to the shared history.
    pub fn wrap_update(&mut self, x: Instance, y: Label) -> Result<()> {
        let (px, replica) = self
            .pending
            .take()
            .ok_or_else(|| Error::Protocol("update without a preceding prediction".into()))?;
        if px != x {
            self.pending = Some((px, replica));
            return Err(Error::Protocol(format!("update for instance {x} after predicting on {px}")));
        }
        let e = Example::new(x, y)?;
        if self.mode == ReplicaMode::Live {
            for r in &mut self.live {
                r.absorb(e)?;
            }
        }
        drop(replica);
        self.history.push(e);
        Ok(())
    }
}

impl OnlineLearner for AdaptiveWrapper {
    fn predict(&mut self, x: Instance, _: &mut dyn RngCore) -> Result<Label> {
        self.wrap_predict(x)
    }

    fn update(&mut self, x: Instance, y: Label, _: &mut dyn RngCore) -> Result<()> {
        self.wrap_update(x, y)
    }
}

/// Per-trial losses `ℓ_t^{(j)}` of every replica `j` at every round `t`, with
/// the adversary driven by the wrapper's actual predictions `ŷ_t = ŷ_t^{(t)}`.
#[derive(Debug, Clone)]
pub struct ReplicaProfile {
    pub horizon: usize,
    /// `losses[trial][t][j]`, zero-based.
    pub losses: Vec<Vec<Vec<u8>>>,
}

impl ReplicaProfile {
    pub fn trials(&self) -> usize {
        self.losses.len()
    }

    /// Estimate of `E[ℓ_t^{(j)}]` (zero-based indices).
    pub fn mean(&self, t: usize, j: usize) -> f64 {
        self.losses.iter().map(|l| l[t][j] as f64).sum::<f64>() / self.trials() as f64
    }

    /// Matrix of means with `None` for `j < t`.
    pub fn mean_matrix(&self) -> Vec<Vec<Option<f64>>> {
        (0..self.horizon)
            .map(|t| (0..self.horizon).map(|j| (j >= t).then(|| self.mean(t, j))).collect())
            .collect()
    }

    /// Mean and standard error of the paired difference `ℓ_t^{(a)} - ℓ_t^{(b)}`.
    pub fn paired_difference(&self, t: usize, a: usize, b: usize) -> (f64, f64) {
        let n = self.trials() as f64;
        let diffs: Vec<f64> = self
            .losses
            .iter()
            .map(|l| l[t][a] as f64 - l[t][b] as f64)
            .collect();
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (mean, (var / n).sqrt())
    }

    /// Largest `|mean difference| / standard error` over pairs `t <= a < b`.
    /// Pairs whose difference never varies count as 0 when their mean is 0.
    pub fn max_pairwise_z(&self, t: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for a in t..self.horizon {
            for b in a + 1..self.horizon {
                let (m, se) = self.paired_difference(t, a, b);
                let z = if se > 0.0 {
                    m.abs() / se
                } else if m == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(z);
            }
        }
        worst
    }
}

/// Monte Carlo profile of replica losses. Every replica runs live for the
/// whole game; round `t`'s surfaced prediction is replica `t`'s.
pub fn replica_loss_profile(
    factory: &LearnerFactory,
    make_adversary: &(dyn Fn(u64) -> Result<Box<dyn Adversary>> + Sync),
    horizon: usize,
    trials: usize,
    seed: u64,
) -> Result<ReplicaProfile> {
    if trials < 200 {
        return Err(Error::Precondition(format!("need at least 200 trials, got {trials}")));
    }
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    use rayon::prelude::*;
    let losses = (0..trials)
        .into_par_iter()
        .map(|k| {
            let trial_seed = derive_seed(seed, k as u64);
            let mut adversary = make_adversary(derive_seed(trial_seed, 0))?;
            let wrapper_seed = derive_seed(trial_seed, 1);
            let mut replicas: Vec<Replica> = (1..=horizon)
                .map(|j| Replica::new(factory, wrapper_seed, j))
                .collect::<Result<_>>()?;
            let mut rows = Vec::with_capacity(horizon);
            for t in 0..horizon {
                let x = adversary.next_instance()?;
                let preds: Vec<Label> = replicas.iter_mut().map(|r| r.predict(x)).collect::<Result<_>>()?;
                let y = adversary.label(x)?;
                rows.push(preds.iter().map(|&p| (p != y) as u8).collect());
                adversary.observe(x, y, preds[t]);
                for r in &mut replicas {
                    r.learner.update(x, y, &mut r.rng)?;
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicaProfile { horizon, losses })
}
