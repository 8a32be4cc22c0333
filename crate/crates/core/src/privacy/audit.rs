use serde::{Deserialize, Serialize};

use crate::domain::{Example, LabeledSample};
use crate::error::{Error, Result};
use crate::hypothesis::HypothesisClass;

use super::exponential::exponential_mechanism_log_distribution;

const AUDIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyAuditReport {
    pub q: usize,
    pub eps: f64,
    pub max_log_ratio: f64,
    pub bound: f64,
    pub pass: bool,
}

impl PrivacyAuditReport {
    fn from_log_distributions(lp: &[f64], lq: &[f64], q: usize, eps: f64) -> Self {
        let max_log_ratio = max_abs_log_ratio(lp, lq);
        let bound = eps * q as f64;
        PrivacyAuditReport {
            q,
            eps,
            max_log_ratio,
            bound,
            pass: max_log_ratio <= bound + AUDIT_TOLERANCE,
        }
    }
}

fn max_abs_log_ratio(lp: &[f64], lq: &[f64]) -> f64 {
    lp.iter()
        .zip(lq)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Compares the exact output distributions of the exponential mechanism on two
/// equal-length samples against the group-privacy bound `ε·q`, where `q` is
/// the number of differing positions.
///
/// Checking every singleton output suffices: for any event F the ratio
/// `P(F)/P'(F)` lies between the smallest and largest pointwise ratio.
pub fn audit_privacy(
    class: &HypothesisClass,
    sample: &LabeledSample,
    other: &LabeledSample,
    epsilon: f64,
) -> Result<PrivacyAuditReport> {
    let q = sample.hamming_distance(other)?;
    let lp = exponential_mechanism_log_distribution(class, sample, epsilon)?;
    let lq = exponential_mechanism_log_distribution(class, other, epsilon)?;
    Ok(PrivacyAuditReport::from_log_distributions(&lp, &lq, q, epsilon))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveAudit {
    pub sample_size: usize,
    pub pairs_checked: u64,
    pub violations: u64,
    /// Largest `max_log_ratio - ε·q` over all checked pairs.
    pub worst_slack: f64,
    pub max_log_ratio: f64,
}

impl ExhaustiveAudit {
    pub fn pass(&self) -> bool {
        self.violations == 0
    }
}

fn alphabet(class: &HypothesisClass) -> Vec<Example> {
    (0..class.domain_size())
        .flat_map(|x| [Example { x, y: 0 }, Example { x, y: 1 }])
        .collect()
}

fn decode(mut code: usize, m: usize, alphabet: &[Example]) -> LabeledSample {
    let k = alphabet.len();
    (0..m)
        .map(|_| {
            let e = alphabet[code % k];
            code /= k;
            e
        })
        .collect()
}

fn checked_count(k: usize, m: usize) -> Result<usize> {
    k.checked_pow(m as u32)
        .filter(|&n| n <= 1 << 24)
        .ok_or_else(|| Error::Precondition(format!("{k}^{m} samples is too many to enumerate")))
}

/// Every ordered pair of samples of length `m` that differ in exactly one
/// position, over the full example alphabet of `class`.
pub fn exhaustive_neighbor_audit(class: &HypothesisClass, m: usize, epsilon: f64) -> Result<ExhaustiveAudit> {
    if m == 0 {
        return Err(Error::EmptySample);
    }
    let alpha = alphabet(class);
    let k = alpha.len();
    let n = checked_count(k, m)?;
    let logs: Vec<Vec<f64>> = (0..n)
        .map(|code| exponential_mechanism_log_distribution(class, &decode(code, m, &alpha), epsilon))
        .collect::<Result<_>>()?;

    let mut audit = ExhaustiveAudit {
        sample_size: m,
        pairs_checked: 0,
        violations: 0,
        worst_slack: f64::NEG_INFINITY,
        max_log_ratio: 0.0,
    };
    for code in 0..n {
        let mut place = 1;
        for _ in 0..m {
            let digit = (code / place) % k;
            for alt in 0..k {
                if alt == digit {
                    continue;
                }
                let other = code - digit * place + alt * place;
                let r = PrivacyAuditReport::from_log_distributions(&logs[code], &logs[other], 1, epsilon);
                audit.record(&r);
            }
            place *= k;
        }
    }
    Ok(audit)
}

/// Every pair of samples of length `m`, each checked at its group distance.
///
/// The mechanism's output depends only on the multiset of examples, and the
/// smallest Hamming distance between orderings of two multisets `A`, `B` is
/// `m - |A ∩ B|`. Checking each multiset pair at that distance therefore
/// covers every ordered pair at its own (never smaller) distance.
pub fn exhaustive_group_audit(class: &HypothesisClass, m: usize, epsilon: f64) -> Result<ExhaustiveAudit> {
    if m == 0 {
        return Err(Error::EmptySample);
    }
    let alpha = alphabet(class);
    let k = alpha.len();
    let mut multisets: Vec<Vec<usize>> = Vec::new();
    let mut counts = vec![0usize; k];
    enumerate_multisets(&mut counts, 0, m, &mut multisets);
    if multisets.len() > 1 << 16 {
        return Err(Error::Precondition(format!(
            "{} multisets is too many to enumerate pairwise",
            multisets.len()
        )));
    }
    let logs: Vec<Vec<f64>> = multisets
        .iter()
        .map(|c| {
            let s: LabeledSample = c
                .iter()
                .enumerate()
                .flat_map(|(i, &n)| std::iter::repeat_n(alpha[i], n))
                .collect();
            exponential_mechanism_log_distribution(class, &s, epsilon)
        })
        .collect::<Result<_>>()?;

    let mut audit = ExhaustiveAudit {
        sample_size: m,
        pairs_checked: 0,
        violations: 0,
        worst_slack: f64::NEG_INFINITY,
        max_log_ratio: 0.0,
    };
    for (a, ca) in multisets.iter().enumerate() {
        for (b, cb) in multisets.iter().enumerate() {
            if a == b {
                continue;
            }
            let shared: usize = ca.iter().zip(cb).map(|(x, y)| x.min(y)).sum();
            let q = m - shared;
            let r = PrivacyAuditReport::from_log_distributions(&logs[a], &logs[b], q, epsilon);
            audit.record(&r);
        }
    }
    Ok(audit)
}

fn enumerate_multisets(counts: &mut Vec<usize>, pos: usize, remaining: usize, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == counts.len() {
        counts[pos] = remaining;
        out.push(counts.clone());
        counts[pos] = 0;
        return;
    }
    for n in 0..=remaining {
        counts[pos] = n;
        enumerate_multisets(counts, pos + 1, remaining - n, out);
    }
    counts[pos] = 0;
}

impl ExhaustiveAudit {
    fn record(&mut self, r: &PrivacyAuditReport) {
        self.pairs_checked += 1;
        if !r.pass {
            self.violations += 1;
        }
        self.worst_slack = self.worst_slack.max(r.max_log_ratio - r.bound);
        self.max_log_ratio = self.max_log_ratio.max(r.max_log_ratio);
    }
}
