//! Examples, samples, finite distributions and game transcripts, together
//! with the 0/1 loss and the exact risk computations every other module is
//! checked against.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{HypothesisClass, HypothesisId};

/// Index into the finite instance grid `0..d`.
pub type Instance = usize;

/// Binary label, always 0 or 1.
pub type Label = u8;

/// 0/1 loss: 1 iff the labels differ.
#[inline]
pub fn zero_one_loss(a: Label, b: Label) -> u8 {
    (a != b) as u8
}

pub fn check_label(y: Label) -> Result<Label> {
    if y <= 1 {
        Ok(y)
    } else {
        Err(Error::Precondition(format!("label {y} is not in {{0,1}}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Example {
    pub x: Instance,
    pub y: Label,
}

impl Example {
    pub fn new(x: Instance, y: Label) -> Result<Self> {
        Ok(Example { x, y: check_label(y)? })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabeledSample {
    examples: Vec<Example>,
}

impl LabeledSample {
    pub fn new(examples: Vec<Example>) -> Self {
        LabeledSample { examples }
    }

    /// `m` copies of the same example.
    pub fn repeated(example: Example, m: usize) -> Self {
        LabeledSample {
            examples: vec![example; m],
        }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    /// Number of positions at which the two samples differ.
    pub fn hamming_distance(&self, other: &LabeledSample) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(self
            .examples
            .iter()
            .zip(&other.examples)
            .filter(|(a, b)| a != b)
            .count())
    }

    /// Number of mistakes `h` makes on the sample.
    pub fn errors(&self, class: &HypothesisClass, h: HypothesisId) -> usize {
        self.examples
            .iter()
            .filter(|e| class.eval(h, e.x) != e.y)
            .count()
    }
}

impl FromIterator<Example> for LabeledSample {
    fn from_iter<I: IntoIterator<Item = Example>>(iter: I) -> Self {
        LabeledSample::new(iter.into_iter().collect())
    }
}

/// Mean 0/1 loss of `h` on `sample`.
pub fn empirical_risk(class: &HypothesisClass, h: HypothesisId, sample: &LabeledSample) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(sample.errors(class, h) as f64 / sample.len() as f64)
}

/// A probability distribution over finitely many labeled examples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDistribution {
    support: Vec<(Example, f64)>,
}

impl FiniteDistribution {
    pub fn new(support: Vec<(Example, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let mut seen = std::collections::HashSet::new();
        let mut total = 0.0;
        for &(e, p) in &support {
            check_label(e.y)?;
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::InvalidDistribution(format!("mass {p} for {e:?}")));
            }
            if !seen.insert(e) {
                return Err(Error::InvalidDistribution(format!("duplicate atom {e:?}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("masses sum to {total}")));
        }
        Ok(FiniteDistribution { support })
    }

    /// Uniform distribution on the multiset of examples in `sample`.
    pub fn empirical(sample: &LabeledSample) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        let mut counts: BTreeMap<Example, usize> = BTreeMap::new();
        for &e in sample.examples() {
            *counts.entry(e).or_default() += 1;
        }
        let m = sample.len() as f64;
        Self::new_renormalized(counts.into_iter().map(|(e, c)| (e, c as f64 / m)).collect())
    }

    /// Labels each instance of a marginal by `target`.
    pub fn realizable(
        class: &HypothesisClass,
        target: HypothesisId,
        marginal: &[(Instance, f64)],
    ) -> Result<Self> {
        class.check_hypothesis(target)?;
        let mut support = Vec::with_capacity(marginal.len());
        for &(x, p) in marginal {
            class.check_instance(x)?;
            support.push((Example { x, y: class.eval(target, x) }, p));
        }
        Self::new_renormalized(support)
    }

    // Absorbs floating-point drift from constructed masses before validation.
    fn new_renormalized(mut support: Vec<(Example, f64)>) -> Result<Self> {
        let total: f64 = support.iter().map(|s| s.1).sum();
        if total > 0.0 {
            for s in &mut support {
                s.1 /= total;
            }
        }
        Self::new(support)
    }

    pub fn support(&self) -> &[(Example, f64)] {
        &self.support
    }

    /// Exact expected 0/1 loss of `h`.
    pub fn risk(&self, class: &HypothesisClass, h: HypothesisId) -> f64 {
        self.support
            .iter()
            .filter(|(e, _)| class.eval(h, e.x) != e.y)
            .map(|(_, p)| p)
            .sum()
    }

    /// A hypothesis with zero population risk, if one exists.
    pub fn realizing_hypothesis(&self, class: &HypothesisClass) -> Option<HypothesisId> {
        self.support
            .iter()
            .all(|(e, _)| e.x < class.domain_size())
            .then(|| {
                class.hypotheses().find(|&h| {
                    self.support
                        .iter()
                        .filter(|(_, p)| *p > 0.0)
                        .all(|(e, _)| class.eval(h, e.x) == e.y)
                })
            })
            .flatten()
    }

    pub fn sample_example<R: Rng + ?Sized>(&self, rng: &mut R) -> Example {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &(e, p) in &self.support {
            acc += p;
            if u < acc {
                return e;
            }
        }
        // u landed in the rounding gap above the cumulative sum
        self.support
            .iter()
            .rev()
            .find(|(_, p)| *p > 0.0)
            .map(|(e, _)| *e)
            .expect("distribution has positive mass")
    }

    pub fn sample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> LabeledSample {
        (0..m).map(|_| self.sample_example(rng)).collect()
    }
}

/// Exact population risk: sum over the support of mass times loss.
pub fn population_risk_exact(class: &HypothesisClass, h: HypothesisId, dist: &FiniteDistribution) -> f64 {
    dist.risk(class, h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub x: Instance,
    pub y: Label,
    pub yhat: Label,
    pub loss: u8,
}

impl Round {
    pub fn new(x: Instance, y: Label, yhat: Label) -> Self {
        Round {
            x,
            y,
            yhat,
            loss: zero_one_loss(yhat, y),
        }
    }
}

/// Record of one learner-versus-adversary game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub horizon: usize,
    pub seed: u64,
    pub rounds: Vec<Round>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    round: usize,
    x: Instance,
    y: Label,
    yhat: Label,
    loss: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptSummary {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub mistakes: usize,
    pub seed: u64,
}

impl Transcript {
    pub fn new(horizon: usize, seed: u64) -> Self {
        Transcript {
            horizon,
            seed,
            rounds: Vec::with_capacity(horizon),
        }
    }

    pub fn push(&mut self, round: Round) -> Result<()> {
        if self.rounds.len() >= self.horizon {
            return Err(Error::HorizonExhausted(self.horizon));
        }
        self.rounds.push(round);
        Ok(())
    }

    pub fn mistakes(&self) -> usize {
        self.rounds.iter().map(|r| r.loss as usize).sum()
    }

    /// Every stored loss equals the loss recomputed from `(y, yhat)`.
    pub fn is_consistent(&self) -> bool {
        self.rounds.len() <= self.horizon
            && self.rounds.iter().all(|r| r.loss == zero_one_loss(r.yhat, r.y))
    }

    pub fn summary(&self) -> TranscriptSummary {
        TranscriptSummary {
            horizon: self.horizon,
            mistakes: self.mistakes(),
            seed: self.seed,
        }
    }

    /// CSV with header `round,x,y,yhat,loss`; rounds are 1-based.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (i, r) in self.rounds.iter().enumerate() {
            w.serialize(CsvRow {
                round: i + 1,
                x: r.x,
                y: r.y,
                yhat: r.yhat,
                loss: r.loss,
            })?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    /// Parses the CSV form; the horizon and seed are not part of it.
    pub fn read_csv<R: Read>(reader: R, horizon: usize, seed: u64) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(reader);
        let mut t = Transcript::new(horizon, seed);
        for (i, row) in rd.deserialize::<CsvRow>().enumerate() {
            let row = row?;
            if row.round != i + 1 {
                return Err(Error::Protocol(format!("round {} out of order", row.round)));
            }
            check_label(row.y)?;
            check_label(row.yhat)?;
            let round = Round {
                x: row.x,
                y: row.y,
                yhat: row.yhat,
                loss: row.loss,
            };
            if round.loss != zero_one_loss(round.yhat, round.y) {
                return Err(Error::Protocol(format!("inconsistent loss at round {}", row.round)));
            }
            t.push(round)?;
        }
        Ok(t)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Hypotheses of `class` with zero loss on every round.
    pub fn realizing_hypotheses<'a>(&'a self, class: &'a HypothesisClass) -> impl Iterator<Item = HypothesisId> + 'a {
        class.hypotheses().filter(move |&h| {
            self.rounds
                .iter()
                .all(|r| r.x < class.domain_size() && class.eval(h, r.x) == r.y)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(x: usize, y: u8) -> Example {
        Example::new(x, y).unwrap()
    }

    #[test]
    fn zero_one_loss_table() {
        assert_eq!(zero_one_loss(1, 1), 0);
        assert_eq!(zero_one_loss(0, 1), 1);
        assert_eq!(zero_one_loss(1, 0), 1);
        for a in 0..2u8 {
            for b in 0..2u8 {
                assert_eq!(zero_one_loss(a, b), zero_one_loss(b, a));
                assert_eq!(zero_one_loss(a, b), (a as i8 - b as i8).unsigned_abs());
            }
            assert_eq!(zero_one_loss(a, a), 0);
            assert_eq!(zero_one_loss(a, 1 - a), 1);
        }
    }

    #[test]
    fn empirical_risk_examples() {
        // thresholds on d=2: h_2 is constant 0, h_0 is constant 1
        let c = HypothesisClass::thresholds(2).unwrap();
        let s = LabeledSample::repeated(ex(1, 0), 3);
        assert_eq!(empirical_risk(&c, 2, &s).unwrap(), 0.0);
        assert_eq!(empirical_risk(&c, 0, &s).unwrap(), 1.0);

        let s = LabeledSample::new(vec![ex(0, 0), ex(1, 0), ex(0, 0), ex(1, 0)]);
        // h_1 labels x=1 as 1: two disagreements of four
        assert!((empirical_risk(&c, 1, &s).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empirical_risk_rejects_empty() {
        let c = HypothesisClass::thresholds(2).unwrap();
        assert!(matches!(
            empirical_risk(&c, 0, &LabeledSample::default()),
            Err(Error::EmptySample)
        ));
    }

    #[test]
    fn population_risk_examples() {
        let c = HypothesisClass::thresholds(2).unwrap();
        let point = FiniteDistribution::new(vec![(ex(1, 1), 1.0)]).unwrap();
        assert_eq!(population_risk_exact(&c, 1, &point), 0.0);

        let two = FiniteDistribution::new(vec![(ex(0, 0), 0.5), (ex(1, 0), 0.5)]).unwrap();
        assert_eq!(population_risk_exact(&c, 1, &two), 0.5);

        let skewed = FiniteDistribution::new(vec![(ex(0, 0), 0.75), (ex(1, 1), 0.25)]).unwrap();
        assert!((population_risk_exact(&c, 2, &skewed) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn invalid_distributions() {
        assert!(FiniteDistribution::new(vec![]).is_err());
        assert!(FiniteDistribution::new(vec![(ex(0, 0), 0.6), (ex(1, 0), 0.5)]).is_err());
        assert!(FiniteDistribution::new(vec![(ex(0, 0), 0.5), (ex(0, 0), 0.5)]).is_err());
        assert!(FiniteDistribution::new(vec![(ex(0, 0), -0.5), (ex(1, 0), 1.5)]).is_err());
        assert!(Example::new(0, 2).is_err());
    }

    #[test]
    fn realizing_hypothesis_found() {
        let c = HypothesisClass::thresholds(4).unwrap();
        let d = FiniteDistribution::realizable(&c, 3, &[(0, 0.5), (3, 0.5)]).unwrap();
        let h = d.realizing_hypothesis(&c).unwrap();
        assert_eq!(d.risk(&c, h), 0.0);

        let noisy = FiniteDistribution::new(vec![(ex(1, 1), 0.5), (ex(2, 0), 0.5)]).unwrap();
        assert_eq!(noisy.realizing_hypothesis(&c), None);
    }

    #[test]
    fn transcript_csv_roundtrip() {
        let mut t = Transcript::new(5, 42);
        t.push(Round::new(0, 1, 1)).unwrap();
        t.push(Round::new(3, 0, 1)).unwrap();
        let text = t.to_csv_string().unwrap();
        assert!(text.starts_with("round,x,y,yhat,loss\n1,0,1,1,0\n2,3,0,1,1\n"));
        let back = Transcript::read_csv(text.as_bytes(), 5, 42).unwrap();
        assert_eq!(back, t);
        assert_eq!(t.summary().mistakes, 1);
        let json = serde_json::to_string(&t.summary()).unwrap();
        assert_eq!(json, r#"{"T":5,"mistakes":1,"seed":42}"#);
    }

    #[test]
    fn transcript_rejects_overflow_and_bad_loss() {
        let mut t = Transcript::new(1, 0);
        t.push(Round::new(0, 0, 0)).unwrap();
        assert!(t.push(Round::new(0, 0, 0)).is_err());
        let bad = "round,x,y,yhat,loss\n1,0,1,1,1\n";
        assert!(Transcript::read_csv(bad.as_bytes(), 4, 0).is_err());
    }
}
