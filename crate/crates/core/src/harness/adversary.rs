//! Environments that choose instances and reveal labels.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Example, FiniteDistribution, Instance, Label};
use crate::error::{Error, Result};
use crate::hypothesis::{ClassKind, HypothesisClass, HypothesisId};

/// One side of the repeated game. Each round the runner calls
/// `next_instance`, asks the learner, calls `label`, then `observe` with the
/// learner's prediction. An adversary sees predictions only through `observe`.
pub trait Adversary: Send {
    fn next_instance(&mut self) -> Result<Instance>;

    fn label(&mut self, x: Instance) -> Result<Label>;

    fn observe(&mut self, x: Instance, y: Label, yhat: Label);

    /// The target concept, when it is fixed up front.
    fn target(&self) -> Option<HypothesisId>;
}

/// Plays a sequence fixed before the game.
#[derive(Debug, Clone)]
pub struct FixedSequence {
    examples: Vec<Example>,
    target: Option<HypothesisId>,
    next: usize,
}

impl FixedSequence {
    /// Checks every example is labeled by `target`.
    pub fn new(class: &HypothesisClass, target: HypothesisId, examples: Vec<Example>) -> Result<Self> {
        class.check_hypothesis(target)?;
        for e in &examples {
            class.check_instance(e.x)?;
            if class.eval(target, e.x) != e.y {
                return Err(Error::NotRealizable);
            }
        }
        Ok(FixedSequence {
            examples,
            target: Some(target),
            next: 0,
        })
    }

    /// Labels each instance by `target`.
    pub fn from_instances(class: &HypothesisClass, target: HypothesisId, xs: &[Instance]) -> Result<Self> {
        class.check_hypothesis(target)?;
        let examples = xs
            .iter()
            .map(|&x| {
                class.check_instance(x)?;
                Ok(Example {
                    x,
                    y: class.eval(target, x),
                })
            })
            .collect::<Result<_>>()?;
        Self::new(class, target, examples)
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }
}

impl Adversary for FixedSequence {
    fn next_instance(&mut self) -> Result<Instance> {
        self.examples
            .get(self.next)
            .map(|e| e.x)
            .ok_or(Error::HorizonExhausted(self.examples.len()))
    }

    fn label(&mut self, x: Instance) -> Result<Label> {
        let e = self
            .examples
            .get(self.next)
            .ok_or(Error::HorizonExhausted(self.examples.len()))?;
        if e.x != x {
            return Err(Error::Protocol(format!("label requested for {x}, round instance is {}", e.x)));
        }
        self.next += 1;
        Ok(e.y)
    }

    fn observe(&mut self, _: Instance, _: Label, _: Label) {}

    fn target(&self) -> Option<HypothesisId> {
        self.target
    }
}

/// `T` i.i.d. instances from the marginal of `dist`, labeled by `target`,
/// frozen before the game.
pub fn make_oblivious_iid<R: Rng + ?Sized>(
    class: &HypothesisClass,
    dist: &FiniteDistribution,
    target: HypothesisId,
    horizon: usize,
    rng: &mut R,
) -> Result<FixedSequence> {
    class.check_hypothesis(target)?;
    for (e, p) in dist.support() {
        class.check_instance(e.x)?;
        if *p > 0.0 && class.eval(target, e.x) != e.y {
            return Err(Error::NotRealizable);
        }
    }
    let xs: Vec<Instance> = (0..horizon).map(|_| dist.sample_example(rng).x).collect();
    FixedSequence::from_instances(class, target, &xs)
}

/// Greedy adversary that replays the instance on which the learner has
/// erred most often. Unseen instances are played first, in index order;
/// afterwards the highest empirical error rate wins, ties to the lowest index.
#[derive(Debug, Clone)]
pub struct Tracker {
    class: Arc<HypothesisClass>,
    target: HypothesisId,
    plays: Vec<u64>,
    errors: Vec<u64>,
}

pub fn make_adaptive_tracker(class: Arc<HypothesisClass>, target: HypothesisId) -> Result<Tracker> {
    class.check_hypothesis(target)?;
    let d = class.domain_size();
    Ok(Tracker {
        class,
        target,
        plays: vec![0; d],
        errors: vec![0; d],
    })
}

impl Tracker {
    pub fn error_rate(&self, x: Instance) -> Option<f64> {
        (self.plays[x] > 0).then(|| self.errors[x] as f64 / self.plays[x] as f64)
    }
}

impl Adversary for Tracker {
    fn next_instance(&mut self) -> Result<Instance> {
        if let Some(x) = self.plays.iter().position(|&p| p == 0) {
            return Ok(x);
        }
        let mut best = 0;
        for x in 1..self.plays.len() {
            // cross-multiplied comparison of errors/plays
            if self.errors[x] * self.plays[best] > self.errors[best] * self.plays[x] {
                best = x;
            }
        }
        Ok(best)
    }

    fn label(&mut self, x: Instance) -> Result<Label> {
        self.class.check_instance(x)?;
        Ok(self.class.eval(self.target, x))
    }

    fn observe(&mut self, x: Instance, y: Label, yhat: Label) {
        self.plays[x] += 1;
        self.errors[x] += (y != yhat) as u64;
    }

    fn target(&self) -> Option<HypothesisId> {
        Some(self.target)
    }
}

/// Bisects the set of thresholds consistent with the labels revealed so far.
/// Consistent thresholds form `lo..=hi`; the queried instance is the midpoint
/// `(lo + hi) / 2`, and once a single threshold remains it keeps querying the
/// boundary instance next to it.
#[derive(Debug, Clone)]
pub struct BinarySearch {
    class: Arc<HypothesisClass>,
    target: HypothesisId,
    lo: usize,
    hi: usize,
}

pub fn make_adaptive_binary_search(class: Arc<HypothesisClass>, target: HypothesisId) -> Result<BinarySearch> {
    if class.kind() != ClassKind::Thresholds {
        return Err(Error::Config(format!(
            "binary search adversary needs thresholds, got {}",
            class.kind()
        )));
    }
    class.check_hypothesis(target)?;
    let hi = class.domain_size();
    Ok(BinarySearch { class, target, lo: 0, hi })
}

impl BinarySearch {
    /// Consistent thresholds as an inclusive range.
    pub fn feasible(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }

    fn query(&self) -> Instance {
        let d = self.class.domain_size();
        if self.lo < self.hi {
            (self.lo + self.hi) / 2
        } else {
            self.lo.min(d - 1)
        }
    }
}

impl Adversary for BinarySearch {
    fn next_instance(&mut self) -> Result<Instance> {
        Ok(self.query())
    }

    fn label(&mut self, x: Instance) -> Result<Label> {
        self.class.check_instance(x)?;
        Ok(self.class.eval(self.target, x))
    }

    fn observe(&mut self, x: Instance, y: Label, _: Label) {
        // threshold j labels x as 1 iff j <= x
        if y == 1 {
            self.hi = self.hi.min(x);
        } else {
            self.lo = self.lo.max(x + 1);
        }
    }

    fn target(&self) -> Option<HypothesisId> {
        Some(self.target)
    }
}

/// Threshold adversary that never commits to a target: it bisects the
/// version space and labels each query with the side keeping more consistent
/// thresholds, breaking ties against the learner's previous prediction.
#[derive(Debug, Clone)]
pub struct VersionSpace {
    class: Arc<HypothesisClass>,
    lo: usize,
    hi: usize,
    last_prediction: Label,
}

pub fn make_version_space(class: Arc<HypothesisClass>) -> Result<VersionSpace> {
    if class.kind() != ClassKind::Thresholds {
        return Err(Error::Config(format!(
            "version-space adversary needs thresholds, got {}",
            class.kind()
        )));
    }
    let hi = class.domain_size();
    Ok(VersionSpace {
        class,
        lo: 0,
        hi,
        last_prediction: 0,
    })
}

impl Adversary for VersionSpace {
    fn next_instance(&mut self) -> Result<Instance> {
        let d = self.class.domain_size();
        Ok(if self.lo < self.hi {
            (self.lo + self.hi) / 2
        } else {
            self.lo.min(d - 1)
        })
    }

    fn label(&mut self, x: Instance) -> Result<Label> {
        self.class.check_instance(x)?;
        // label 1 keeps lo..=min(hi, x); label 0 keeps max(lo, x+1)..=hi
        let ones = (self.hi.min(x) + 1).saturating_sub(self.lo);
        let zeros = (self.hi + 1).saturating_sub(self.lo.max(x + 1));
        Ok(match ones.cmp(&zeros) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Equal => 1 - self.last_prediction,
        })
    }

    fn observe(&mut self, x: Instance, y: Label, yhat: Label) {
        if y == 1 {
            self.hi = self.hi.min(x);
        } else {
            self.lo = self.lo.max(x + 1);
        }
        self.last_prediction = yhat;
    }

    fn target(&self) -> Option<HypothesisId> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryKind {
    /// Oblivious: i.i.d. draws from a random marginal.
    Iid,
    /// Oblivious: a fixed round-robin sweep of the domain.
    Fixed,
    /// Adaptive: replays the instance with the highest observed error rate.
    Tracker,
    /// Adaptive: bisection over thresholds.
    Bisect,
    /// Adaptive: lazy version-space labels over thresholds.
    Lazy,
}

impl AdversaryKind {
    pub fn is_oblivious(&self) -> bool {
        matches!(self, AdversaryKind::Iid | AdversaryKind::Fixed)
    }
}

impl std::fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AdversaryKind::Iid => "iid",
            AdversaryKind::Fixed => "fixed",
            AdversaryKind::Tracker => "tracker",
            AdversaryKind::Bisect => "bisect",
            AdversaryKind::Lazy => "lazy",
        })
    }
}

impl std::str::FromStr for AdversaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "iid" => AdversaryKind::Iid,
            "fixed" => AdversaryKind::Fixed,
            "tracker" => AdversaryKind::Tracker,
            "bisect" => AdversaryKind::Bisect,
            "lazy" => AdversaryKind::Lazy,
            other => return Err(Error::Config(format!("unknown adversary `{other}`"))),
        })
    }
}

/// How to build an adversary for one game.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarySpec {
    pub kind: AdversaryKind,
    /// Target concept; `None` draws one uniformly per game (ignored by `Lazy`).
    pub target: Option<HypothesisId>,
    /// Instance marginal for `Iid`; `None` draws a random one per game.
    pub marginal: Option<Vec<(Instance, f64)>>,
    /// Instance sequence for `Fixed`; `None` sweeps `0..d` cyclically.
    pub sequence: Option<Vec<Instance>>,
}

impl AdversarySpec {
    pub fn new(kind: AdversaryKind) -> Self {
        AdversarySpec {
            kind,
            target: None,
            marginal: None,
            sequence: None,
        }
    }

    pub fn with_target(mut self, target: HypothesisId) -> Self {
        self.target = Some(target);
        self
    }

    pub fn build<R: Rng + ?Sized>(
        &self,
        class: &Arc<HypothesisClass>,
        horizon: usize,
        rng: &mut R,
    ) -> Result<Box<dyn Adversary>> {
        let target = match self.target {
            Some(t) => {
                class.check_hypothesis(t)?;
                t
            }
            None => rng.random_range(0..class.size()),
        };
        Ok(match self.kind {
            AdversaryKind::Iid => {
                let dist = match &self.marginal {
                    Some(m) => FiniteDistribution::realizable(class, target, m)?,
                    None => {
                        let (d, _) = crate::privacy::random_realizable_distribution(class, rng);
                        // relabel the random marginal by the chosen target
                        let m: Vec<_> = d.support().iter().map(|(e, p)| (e.x, *p)).collect();
                        FiniteDistribution::realizable(class, target, &m)?
                    }
                };
                Box::new(make_oblivious_iid(class, &dist, target, horizon, rng)?)
            }
            AdversaryKind::Fixed => {
                let xs: Vec<Instance> = match &self.sequence {
                    Some(s) => s.clone(),
                    None => (0..horizon).map(|t| t % class.domain_size()).collect(),
                };
                Box::new(FixedSequence::from_instances(class, target, &xs)?)
            }
            AdversaryKind::Tracker => Box::new(make_adaptive_tracker(class.clone(), target)?),
            AdversaryKind::Bisect => Box::new(make_adaptive_binary_search(class.clone(), target)?),
            AdversaryKind::Lazy => Box::new(make_version_space(class.clone())?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn thresholds(d: usize) -> Arc<HypothesisClass> {
        Arc::new(HypothesisClass::thresholds(d).unwrap())
    }

    #[test]
    fn iid_point_mass_is_constant() {
        let c = thresholds(4);
        let dist = FiniteDistribution::realizable(&c, 2, &[(3, 1.0)]).unwrap();
        let seq = make_oblivious_iid(&c, &dist, 2, 50, &mut rng_from_seed(1)).unwrap();
        assert!(seq.examples().iter().all(|e| e.x == 3 && e.y == 1));
    }

    #[test]
    fn iid_uniform_frequencies() {
        let c = thresholds(4);
        let dist = FiniteDistribution::realizable(&c, 1, &[(0, 0.25), (1, 0.25), (2, 0.25), (3, 0.25)]).unwrap();
        let t = 10_000;
        let seq = make_oblivious_iid(&c, &dist, 1, t, &mut rng_from_seed(2)).unwrap();
        let sigma = (0.25 * 0.75 / t as f64).sqrt();
        for x in 0..4 {
            let f = seq.examples().iter().filter(|e| e.x == x).count() as f64 / t as f64;
            assert!((f - 0.25).abs() <= 3.0 * sigma);
        }
        assert!(seq.examples().iter().all(|e| e.y == c.eval(1, e.x)));
    }

    #[test]
    fn iid_rejects_inconsistent_labels() {
        let c = thresholds(4);
        let dist = FiniteDistribution::new(vec![(Example { x: 0, y: 1 }, 1.0)]).unwrap();
        assert!(matches!(
            make_oblivious_iid(&c, &dist, 4, 10, &mut rng_from_seed(0)),
            Err(Error::NotRealizable)
        ));
    }

    #[test]
    fn tracker_round_robin_then_greedy() {
        let c = thresholds(4);
        let mut adv = make_adaptive_tracker(c.clone(), 2).unwrap();
        for expected in 0..4 {
            let x = adv.next_instance().unwrap();
            assert_eq!(x, expected);
            let y = adv.label(x).unwrap();
            // learner errs only on instance 0
            let yhat = if x == 0 { 1 - y } else { y };
            adv.observe(x, y, yhat);
        }
        for _ in 0..20 {
            let x = adv.next_instance().unwrap();
            assert_eq!(x, 0);
            let y = adv.label(x).unwrap();
            adv.observe(x, y, 1 - y);
        }
    }

    #[test]
    fn tracker_ties_go_to_lowest_index() {
        let mut adv = make_adaptive_tracker(thresholds(3), 1).unwrap();
        for _ in 0..3 {
            let x = adv.next_instance().unwrap();
            let y = adv.label(x).unwrap();
            adv.observe(x, y, y);
        }
        assert_eq!(adv.next_instance().unwrap(), 0);
    }

    #[test]
    fn bisection_on_eight() {
        let c = thresholds(8);
        for target in 0..=8 {
            let mut adv = make_adaptive_binary_search(c.clone(), target).unwrap();
            assert_eq!(adv.next_instance().unwrap(), 4);
            let mut counts = vec![9usize];
            for _ in 0..8 {
                let x = adv.next_instance().unwrap();
                let y = adv.label(x).unwrap();
                adv.observe(x, y, 0);
                let (lo, hi) = adv.feasible();
                assert!(lo <= target && target <= hi, "target excluded");
                counts.push(hi - lo + 1);
            }
            for r in 2..counts.len() {
                assert!(counts[r] <= counts[r - 2].div_ceil(2).max(1), "{counts:?}");
            }
            assert_eq!(adv.feasible(), (target, target));
        }
    }

    #[test]
    fn bisection_needs_thresholds() {
        let c = Arc::new(HypothesisClass::points(4).unwrap());
        assert!(make_adaptive_binary_search(c.clone(), 0).is_err());
        assert!(make_version_space(c).is_err());
    }

    #[test]
    fn version_space_stays_realizable() {
        let c = thresholds(8);
        let mut adv = make_version_space(c.clone()).unwrap();
        let mut seen = Vec::new();
        let mut rng = rng_from_seed(5);
        for _ in 0..30 {
            let x = adv.next_instance().unwrap();
            let y = adv.label(x).unwrap();
            let yhat = rng.random_range(0..2);
            adv.observe(x, y, yhat);
            seen.push((x, y));
            assert!(c.consistent_with(seen.clone()).next().is_some());
        }
    }

    #[test]
    fn spec_builds_each_kind() {
        let c = thresholds(6);
        let mut rng = rng_from_seed(3);
        for kind in [
            AdversaryKind::Iid,
            AdversaryKind::Fixed,
            AdversaryKind::Tracker,
            AdversaryKind::Bisect,
            AdversaryKind::Lazy,
        ] {
            let mut adv = AdversarySpec::new(kind).build(&c, 20, &mut rng).unwrap();
            let x = adv.next_instance().unwrap();
            assert!(x < 6);
            assert_eq!(kind.to_string().parse::<AdversaryKind>().unwrap(), kind);
        }
    }
}
