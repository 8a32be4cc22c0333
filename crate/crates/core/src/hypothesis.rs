use serde::{Deserialize, Serialize};

use crate::domain::{Instance, Label};
use crate::error::{Error, Result};

/// Index of a hypothesis within its class.
pub type HypothesisId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[derive(clap::ValueEnum)]
pub enum ClassKind {
    /// `h_j(x) = 1[x >= j]` for `j` in `0..=d`.
    Thresholds,
    /// `h_j(x) = 1[x == j]` for `j` in `0..d`.
    Points,
    /// The empty interval (index 0) followed by every `[a, b]` with `a <= b < d`.
    Intervals,
}

impl std::fmt::Display for ClassKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClassKind::Thresholds => "thresholds",
            ClassKind::Points => "points",
            ClassKind::Intervals => "intervals",
        })
    }
}

impl std::str::FromStr for ClassKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thresholds" => Ok(ClassKind::Thresholds),
            "points" => Ok(ClassKind::Points),
            "intervals" => Ok(ClassKind::Intervals),
            other => Err(Error::Config(format!("unknown class kind `{other}`"))),
        }
    }
}

/// A finite family of deterministic classifiers over the grid `0..d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HypothesisClass {
    kind: ClassKind,
    domain_size: usize,
    // (a, b) bounds for interval hypotheses 1..; empty for other kinds.
    intervals: Vec<(usize, usize)>,
}

impl HypothesisClass {
    pub fn new(kind: ClassKind, domain_size: usize) -> Result<Self> {
        if domain_size == 0 {
            return Err(Error::Precondition("domain size must be positive".into()));
        }
        let intervals = match kind {
            ClassKind::Intervals => (0..domain_size)
                .flat_map(|a| (a..domain_size).map(move |b| (a, b)))
                .collect(),
            _ => Vec::new(),
        };
        Ok(HypothesisClass {
            kind,
            domain_size,
            intervals,
        })
    }

    pub fn thresholds(domain_size: usize) -> Result<Self> {
        Self::new(ClassKind::Thresholds, domain_size)
    }

    pub fn points(domain_size: usize) -> Result<Self> {
        Self::new(ClassKind::Points, domain_size)
    }

    pub fn intervals(domain_size: usize) -> Result<Self> {
        Self::new(ClassKind::Intervals, domain_size)
    }

    pub fn kind(&self) -> ClassKind {
        self.kind
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn size(&self) -> usize {
        let d = self.domain_size;
        match self.kind {
            ClassKind::Thresholds => d + 1,
            ClassKind::Points => d,
            ClassKind::Intervals => d * (d + 1) / 2 + 1,
        }
    }

    /// Label that hypothesis `h` assigns to instance `x`.
    ///
    /// Panics if either index is out of range; callers validate indices at
    /// the boundary (samples, pools, adversaries).
    #[inline]
    pub fn eval(&self, h: HypothesisId, x: Instance) -> Label {
        assert!(h < self.size(), "hypothesis {h} out of range");
        assert!(x < self.domain_size, "instance {x} out of range");
        let hit = match self.kind {
            ClassKind::Thresholds => x >= h,
            ClassKind::Points => x == h,
            ClassKind::Intervals => match h {
                0 => false,
                _ => {
                    let (a, b) = self.intervals[h - 1];
                    a <= x && x <= b
                }
            },
        };
        hit as Label
    }

    pub fn hypotheses(&self) -> std::ops::Range<HypothesisId> {
        0..self.size()
    }

    pub fn check_instance(&self, x: Instance) -> Result<()> {
        if x < self.domain_size {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "instance {x} outside domain of size {}",
                self.domain_size
            )))
        }
    }

    pub fn check_hypothesis(&self, h: HypothesisId) -> Result<()> {
        if h < self.size() {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "hypothesis {h} outside class of size {}",
                self.size()
            )))
        }
    }

    /// Hypotheses with zero loss on every `(x, y)` pair.
    pub fn consistent_with<'a>(
        &'a self,
        pairs: impl IntoIterator<Item = (Instance, Label)> + Clone + 'a,
    ) -> impl Iterator<Item = HypothesisId> + 'a {
        self.hypotheses()
            .filter(move |&h| pairs.clone().into_iter().all(|(x, y)| self.eval(h, x) == y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_sizes() {
        for d in 1..10 {
            assert_eq!(HypothesisClass::thresholds(d).unwrap().size(), d + 1);
            assert_eq!(HypothesisClass::points(d).unwrap().size(), d);
            assert_eq!(
                HypothesisClass::intervals(d).unwrap().size(),
                d * (d + 1) / 2 + 1
            );
        }
    }

    #[test]
    fn threshold_semantics() {
        let c = HypothesisClass::thresholds(4).unwrap();
        assert_eq!((0..4).map(|x| c.eval(0, x)).collect::<Vec<_>>(), [1, 1, 1, 1]);
        assert_eq!((0..4).map(|x| c.eval(2, x)).collect::<Vec<_>>(), [0, 0, 1, 1]);
        assert_eq!((0..4).map(|x| c.eval(4, x)).collect::<Vec<_>>(), [0, 0, 0, 0]);
    }

    #[test]
    fn interval_hypotheses_are_distinct() {
        let c = HypothesisClass::intervals(5).unwrap();
        let rows: std::collections::HashSet<Vec<u8>> = c
            .hypotheses()
            .map(|h| (0..5).map(|x| c.eval(h, x)).collect())
            .collect();
        assert_eq!(rows.len(), c.size());
    }

    #[test]
    fn zero_domain_rejected() {
        assert!(HypothesisClass::thresholds(0).is_err());
    }
}
