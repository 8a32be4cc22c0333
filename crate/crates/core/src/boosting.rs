//! Online boosting-by-majority.
//!
//! `N` weak learners vote by unweighted majority. After the label is revealed
//! the example is offered to the learners in order; learner `i` receives it
//! with probability `p_i(s)`, where `s` is the margin (correct minus incorrect
//! votes) of learners `1..i`. The probabilities come from the potential
//! `Φ_k(s)`: the chance that a ±1 walk stepping up with probability `1/2 + γ`
//! ends at or below 0 after `k` steps when started from `s`.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::domain::{Instance, Label};
use crate::error::{Error, Result};
use crate::hypothesis::{HypothesisClass, HypothesisId};
use crate::online::OnlineLearner;

#[derive(Debug, Clone)]
pub struct PotentialTable {
    n: usize,
    gamma: f64,
    // phi[k * width + (s + offset)] for s in -(n+1)..=n+1
    phi: Vec<f64>,
    width: usize,
    offset: i64,
    // max over s in -n..=n of w_i(s), indexed by i - 1
    max_weight: Vec<f64>,
}

fn check_edge(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 0.5 {
        Ok(())
    } else {
        Err(Error::Precondition(format!("edge must lie in (0, 1/2), got {gamma}")))
    }
}

/// Table of `Φ_k(s)` for `k` in `0..=n`.
pub fn build_potential_table(n: usize, gamma: f64) -> Result<PotentialTable> {
    if n == 0 {
        return Err(Error::Precondition("need at least one weak learner".into()));
    }
    check_edge(gamma)?;
    let offset = n as i64 + 1;
    let width = 2 * n + 3;
    let mut table = PotentialTable {
        n,
        gamma,
        phi: vec![0.0; (n + 1) * width],
        width,
        offset,
        max_weight: Vec::with_capacity(n),
    };
    let (up, down) = (0.5 + gamma, 0.5 - gamma);
    for s in -offset..=offset {
        table.set(0, s, if s <= 0 { 1.0 } else { 0.0 });
    }
    for k in 1..=n {
        for s in -offset..=offset {
            let v = up * table.phi(k - 1, s + 1) + down * table.phi(k - 1, s - 1);
            table.set(k, s, v);
        }
    }
    let span = n as i64;
    table.max_weight = (1..=n)
        .map(|i| (-span..=span).map(|s| table.weight(i, s)).fold(0.0, f64::max))
        .collect();
    Ok(table)
}

impl PotentialTable {
    fn set(&mut self, k: usize, s: i64, v: f64) {
        let idx = k * self.width + (s + self.offset) as usize;
        self.phi[idx] = v;
    }

    pub fn learners(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `Φ_k(s)`; outside the stored range the walk's outcome is already decided.
    pub fn phi(&self, k: usize, s: i64) -> f64 {
        assert!(k <= self.n, "k = {k} exceeds table depth {}", self.n);
        if s < -self.offset {
            1.0
        } else if s > self.offset {
            0.0
        } else {
            self.phi[k * self.width + (s + self.offset) as usize]
        }
    }

    /// `w_i(s) = (Φ_{N-i}(s-1) - Φ_{N-i}(s+1)) / 2` for learner `i` in `1..=N`.
    pub fn weight(&self, i: usize, s: i64) -> f64 {
        assert!((1..=self.n).contains(&i), "learner index {i} out of range");
        let k = self.n - i;
        (self.phi(k, s - 1) - self.phi(k, s + 1)) / 2.0
    }

    /// `w_i(s) / max_s' w_i(s')`, or 1 when the maximum is 0.
    pub fn pass_probability(&self, i: usize, s: i64) -> f64 {
        let max = self.max_weight[i - 1];
        if max > 0.0 {
            (self.weight(i, s) / max).clamp(0.0, 1.0)
        } else {
            1.0
        }
    }

    /// CSV with header `k,s,phi` over `k` in `0..=N`, `s` in `-N..=N`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["k", "s", "phi"])?;
        let span = self.n as i64;
        for k in 0..=self.n {
            for s in -span..=span {
                w.write_record([k.to_string(), s.to_string(), format!("{:e}", self.phi(k, s))])?;
            }
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

pub struct Booster {
    learners: Vec<Box<dyn OnlineLearner>>,
    table: PotentialTable,
    votes: Option<(Instance, Vec<Label>)>,
    passes: Vec<u64>,
}

impl Booster {
    pub fn new(learners: Vec<Box<dyn OnlineLearner>>, gamma: f64) -> Result<Self> {
        let table = build_potential_table(learners.len(), gamma)?;
        let n = learners.len();
        Ok(Booster {
            learners,
            table,
            votes: None,
            passes: vec![0; n],
        })
    }

    pub fn table(&self) -> &PotentialTable {
        &self.table
    }

    pub fn len(&self) -> usize {
        self.learners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.learners.is_empty()
    }

    /// How many examples each weak learner has received.
    pub fn pass_counts(&self) -> &[u64] {
        &self.passes
    }

    /// Majority vote over all weak learners; an even split predicts 1.
    pub fn booster_predict(&mut self, x: Instance, rng: &mut dyn RngCore) -> Result<Label> {
        let votes: Vec<Label> = self
            .learners
            .iter_mut()
            .map(|l| l.predict(x, rng))
            .collect::<Result<_>>()?;
        let yhat = majority(&votes);
        self.votes = Some((x, votes));
        Ok(yhat)
    }

    /// Offers `(x, y)` to each learner in turn with probability `p_i(s)`.
    pub fn booster_update(&mut self, x: Instance, y: Label, rng: &mut dyn RngCore) -> Result<()> {
        let (vx, votes) = self
            .votes
            .take()
            .ok_or_else(|| Error::Protocol("booster update without a preceding prediction".into()))?;
        if vx != x {
            self.votes = Some((vx, votes));
            return Err(Error::Protocol(format!("update for instance {x} after predicting on {vx}")));
        }
        let mut margin: i64 = 0;
        for (i, learner) in self.learners.iter_mut().enumerate() {
            let p = self.table.pass_probability(i + 1, margin);
            if rng.random::<f64>() < p {
                learner.update(x, y, rng)?;
                self.passes[i] += 1;
            }
            margin += if votes[i] == y { 1 } else { -1 };
        }
        Ok(())
    }
}

pub fn majority(votes: &[Label]) -> Label {
    let ones = votes.iter().filter(|&&v| v == 1).count();
    (2 * ones >= votes.len()) as Label
}

impl OnlineLearner for Booster {
    fn predict(&mut self, x: Instance, rng: &mut dyn RngCore) -> Result<Label> {
        self.booster_predict(x, rng)
    }

    fn update(&mut self, x: Instance, y: Label, rng: &mut dyn RngCore) -> Result<()> {
        self.booster_update(x, y, rng)
    }
}

/// `exp(-Nγ²/2) T + c sqrt(N) (T0 + 1/γ) ln(N + 1)`.
pub fn bbm_mistake_bound(n: usize, gamma: f64, horizon: usize, excess_loss: f64, c: f64) -> f64 {
    bbm_leading_term(n, gamma, horizon) + c * (n as f64).sqrt() * (excess_loss + 1.0 / gamma) * ((n + 1) as f64).ln()
}

/// `exp(-Nγ²/2) T`.
pub fn bbm_leading_term(n: usize, gamma: f64, horizon: usize) -> f64 {
    (-(n as f64) * gamma * gamma / 2.0).exp() * horizon as f64
}

/// `N = ceil(2 ln T / γ²)`, at least 1.
pub fn boost_schedule(horizon: usize, gamma: f64) -> Result<usize> {
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    check_edge(gamma)?;
    Ok(learners_for_log_horizon((horizon as f64).ln(), gamma))
}

fn learners_for_log_horizon(ln_t: f64, gamma: f64) -> usize {
    ((2.0 * ln_t / (gamma * gamma)).ceil() as usize).max(1)
}

/// Weak learner that knows the target and is right with probability
/// exactly `1/2 + edge`, independently each round.
#[derive(Debug, Clone)]
pub struct EdgeOracleLearner {
    pub class: Arc<HypothesisClass>,
    pub target: HypothesisId,
    pub edge: f64,
}

impl OnlineLearner for EdgeOracleLearner {
    fn predict(&mut self, x: Instance, rng: &mut dyn RngCore) -> Result<Label> {
        let truth = self.class.eval(self.target, x);
        Ok(if rng.random::<f64>() < 0.5 + self.edge {
            truth
        } else {
            1 - truth
        })
    }

    fn update(&mut self, _: Instance, _: Label, _: &mut dyn RngCore) -> Result<()> {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::online::{ConstantLearner, HypothesisLearner};
    use crate::rng::rng_from_seed;

    #[test]
    fn table_examples() {
        let t = build_potential_table(5, 0.125).unwrap();
        assert_eq!(t.phi(0, 0), 1.0);
        assert_eq!(t.phi(0, 1), 0.0);
        assert!((t.phi(1, 0) - 0.375).abs() < 1e-15);
        for k in 0..=5 {
            assert_eq!(t.phi(k, -(k as i64) - 1), 1.0);
        }
    }

    #[test]
    fn table_is_monotone_and_weights_nonnegative() {
        for gamma in [0.05, 0.125, 0.3, 0.499] {
            let t = build_potential_table(40, gamma).unwrap();
            for k in 0..=40 {
                for s in -41..=41i64 {
                    let v = t.phi(k, s);
                    assert!((0.0..=1.0).contains(&v));
                    assert!(t.phi(k, s + 1) <= v + 1e-15);
                }
            }
            for i in 1..=40 {
                for s in -40..=40 {
                    assert!(t.weight(i, s) >= -1e-15);
                    let p = t.pass_probability(i, s);
                    assert!((0.0..=1.0).contains(&p) && p.is_finite());
                }
            }
        }
    }

    #[test]
    fn invalid_edges() {
        assert!(build_potential_table(3, 0.0).is_err());
        assert!(build_potential_table(3, 0.5).is_err());
        assert!(build_potential_table(0, 0.1).is_err());
        assert!(boost_schedule(10, 0.7).is_err());
    }

    #[test]
    fn near_half_edge_guard() {
        let t = build_potential_table(6, 0.5 - 1e-12).unwrap();
        for i in 1..=6 {
            for s in -6..=6 {
                assert!(t.pass_probability(i, s).is_finite());
            }
        }
    }

    #[test]
    fn single_learner_always_trained() {
        let t = build_potential_table(1, 0.125).unwrap();
        assert_eq!(t.pass_probability(1, 0), 1.0);
    }

    #[test]
    fn majority_rule() {
        assert_eq!(majority(&[1, 1, 0]), 1);
        assert_eq!(majority(&[0, 0, 1]), 0);
        assert_eq!(majority(&[0, 1]), 1);
        assert_eq!(majority(&[0, 0, 1, 1]), 1);
        assert_eq!(majority(&[0; 5]), 0);
    }

    #[test]
    fn booster_votes() {
        let mut rng = rng_from_seed(0);
        let make = |v: &[u8]| -> Vec<Box<dyn OnlineLearner>> {
            v.iter().map(|&l| Box::new(ConstantLearner(l)) as Box<dyn OnlineLearner>).collect()
        };
        let mut b = Booster::new(make(&[0, 0, 0]), 0.125).unwrap();
        assert_eq!(b.booster_predict(2, &mut rng).unwrap(), 0);
        let mut b = Booster::new(make(&[1, 1, 0]), 0.125).unwrap();
        assert_eq!(b.booster_predict(2, &mut rng).unwrap(), 1);
        let mut b = Booster::new(make(&[1, 0, 0, 1]), 0.125).unwrap();
        for _ in 0..10 {
            assert_eq!(b.booster_predict(2, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn update_protocol() {
        let mut rng = rng_from_seed(0);
        let mut b = Booster::new(vec![Box::new(ConstantLearner(1))], 0.125).unwrap();
        assert!(matches!(b.booster_update(0, 1, &mut rng), Err(Error::Protocol(_))));
        b.booster_predict(3, &mut rng).unwrap();
        assert!(b.booster_update(2, 1, &mut rng).is_err());
        b.booster_update(3, 1, &mut rng).unwrap();
        assert_eq!(b.pass_counts(), &[1]);
    }

    #[test]
    fn perfect_learners_never_err() {
        let class = Arc::new(HypothesisClass::thresholds(8).unwrap());
        let learners: Vec<Box<dyn OnlineLearner>> = (0..9)
            .map(|_| {
                Box::new(HypothesisLearner {
                    class: class.clone(),
                    hypothesis: 5,
                }) as Box<dyn OnlineLearner>
            })
            .collect();
        let mut b = Booster::new(learners, 0.125).unwrap();
        let mut rng = rng_from_seed(1);
        for t in 0..200 {
            let x = t % 8;
            let y = class.eval(5, x);
            assert_eq!(b.booster_predict(x, &mut rng).unwrap(), y);
            b.booster_update(x, y, &mut rng).unwrap();
        }
    }

    #[test]
    fn pass_frequencies_match_table() {
        // learners 1..3 vote (right, wrong, right): margins before learners
        // 1..4 are 0, 1, 0, 1
        let class = Arc::new(HypothesisClass::thresholds(2).unwrap());
        let y_target = 1; // h_1 labels x = 1 as 1
        let votes = [1u8, 0, 1, 1];
        let learners: Vec<Box<dyn OnlineLearner>> =
            votes.iter().map(|&v| Box::new(ConstantLearner(v)) as Box<dyn OnlineLearner>).collect();
        let mut b = Booster::new(learners, 0.125).unwrap();
        let mut rng = rng_from_seed(4);
        let rounds = 10_000;
        for _ in 0..rounds {
            b.booster_predict(1, &mut rng).unwrap();
            b.booster_update(1, y_target, &mut rng).unwrap();
        }
        let margins = [0i64, 1, 0, 1];
        for (i, &s) in margins.iter().enumerate() {
            let p = b.table().pass_probability(i + 1, s);
            let f = b.pass_counts()[i] as f64 / rounds as f64;
            let sigma = (p * (1.0 - p) / rounds as f64).sqrt();
            assert!((f - p).abs() <= 3.0 * sigma + 1e-12, "learner {i}: {f} vs {p}");
        }
        let _ = class;
    }

    #[test]
    fn bound_formulas() {
        let lead = bbm_leading_term(640, 0.125, 10_000);
        assert!((lead - 67.379).abs() < 1e-3);
        assert!((lead - (-5f64).exp() * 1e4).abs() < 1e-9);
        let additive = bbm_mistake_bound(640, 0.125, 0, 0.0, 1.0);
        assert!((additive - 640f64.sqrt() * 8.0 * 641f64.ln()).abs() < 1e-9);
        // exp term <= 1 once N >= 2 ln T / γ²
        let n = boost_schedule(10_000, 0.125).unwrap();
        assert!(bbm_leading_term(n, 0.125, 10_000) <= 1.0 + 1e-12);
        assert!(bbm_leading_term(n - 1, 0.125, 10_000) > 1.0);
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(boost_schedule(1, 0.125).unwrap(), 1);
        assert_eq!(learners_for_log_horizon(4.0, 0.125), 512);
        let mut prev = 0;
        for t in 1..5000 {
            let n = boost_schedule(t, 0.125).unwrap();
            assert!(n >= prev);
            prev = n;
        }
    }
}
