//! Threshold-free separation measures: AUROC and the two AUPR variants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSample {
    pub score: f64,
    pub is_positive: bool,
}

impl ScoredSample {
    pub fn new(score: f64, is_positive: bool) -> Self {
        Self { score, is_positive }
    }
}

/// Which class plays the positive role in a precision–recall curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositiveCase {
    /// The samples flagged `is_positive` (correct / in-distribution).
    In,
    /// The complement, with the score negated.
    Out,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub auroc: f64,
    pub aupr_in: f64,
    pub aupr_out: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

fn class_counts(samples: &[ScoredSample]) -> Result<(usize, usize)> {
    if let Some(s) = samples.iter().find(|s| !s.score.is_finite()) {
        return Err(Error::NonFinite(format!("score {}", s.score)));
    }
    let n_pos = samples.iter().filter(|s| s.is_positive).count();
    let n_neg = samples.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateClasses { n_pos, n_neg });
    }
    Ok((n_pos, n_neg))
}

/// Scores oriented so that larger means "more positive", sorted descending.
fn oriented_desc(samples: &[ScoredSample], higher_is_positive: bool) -> Vec<(f64, bool)> {
    let sign = if higher_is_positive { 1.0 } else { -1.0 };
    let mut v: Vec<(f64, bool)> = samples
        .iter()
        .map(|s| (sign * s.score, s.is_positive))
        .collect();
    v.sort_by(|a, b| b.0.total_cmp(&a.0));
    v
}

/// Iterates over groups of tied scores in a descending list, yielding
/// `(positives, negatives)` per group.
fn tie_groups(sorted: &[(f64, bool)]) -> impl Iterator<Item = (usize, usize)> + '_ {
    sorted
        .chunk_by(|a, b| a.0 == b.0)
        .map(|g| {
            let p = g.iter().filter(|s| s.1).count();
            (p, g.len() - p)
        })
}

/// Probability that a random positive outranks a random negative, ties
/// counted one half. Equals the trapezoidal area under the ROC curve.
pub fn auroc(samples: &[ScoredSample], higher_is_positive: bool) -> Result<f64> {
    let (n_pos, n_neg) = class_counts(samples)?;
    let sorted = oriented_desc(samples, higher_is_positive);
    // walk from the top: every positive beats all negatives strictly below it
    let mut neg_above = 0usize;
    let mut wins = 0.0f64;
    for (p, n) in tie_groups(&sorted) {
        let below = n_neg - neg_above - n;
        wins += p as f64 * (below as f64 + 0.5 * n as f64);
        neg_above += n;
    }
    Ok(wins / (n_pos as f64 * n_neg as f64))
}

/// Step-wise area under the precision–recall curve, `Σ (Rᵢ − Rᵢ₋₁)·Pᵢ`
/// over all distinct thresholds from the top down.
pub fn aupr(samples: &[ScoredSample], case: PositiveCase, higher_is_positive: bool) -> Result<f64> {
    class_counts(samples)?;
    let flipped: Vec<ScoredSample>;
    let (samples, higher) = match case {
        PositiveCase::In => (samples, higher_is_positive),
        PositiveCase::Out => {
            flipped = samples
                .iter()
                .map(|s| ScoredSample::new(-s.score, !s.is_positive))
                .collect();
            (&flipped[..], higher_is_positive)
        }
    };
    let sorted = oriented_desc(samples, higher);
    let n_pos = samples.iter().filter(|s| s.is_positive).count() as f64;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    for (p, n) in tie_groups(&sorted) {
        tp += p;
        fp += n;
        if p == 0 {
            continue;
        }
        let recall = tp as f64 / n_pos;
        let precision = tp as f64 / (tp + fp) as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(area)
}

pub fn aupr_in(samples: &[ScoredSample], higher_is_positive: bool) -> Result<f64> {
    aupr(samples, PositiveCase::In, higher_is_positive)
}

pub fn aupr_out(samples: &[ScoredSample], higher_is_positive: bool) -> Result<f64> {
    aupr(samples, PositiveCase::Out, higher_is_positive)
}

/// All three areas for one score/label assignment.
pub fn evaluate(samples: &[ScoredSample], higher_is_positive: bool) -> Result<EvalResult> {
    let (n_pos, n_neg) = class_counts(samples)?;
    Ok(EvalResult {
        auroc: auroc(samples, higher_is_positive)?,
        aupr_in: aupr_in(samples, higher_is_positive)?,
        aupr_out: aupr_out(samples, higher_is_positive)?,
        n_pos,
        n_neg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(score: f64, pos: bool) -> ScoredSample {
        ScoredSample::new(score, pos)
    }

    #[test]
    fn perfect_separation() {
        let v = [s(0.9, true), s(0.8, true), s(0.1, false), s(0.2, false)];
        assert_eq!(auroc(&v, true).unwrap(), 1.0);
        assert_eq!(aupr_in(&v, true).unwrap(), 1.0);
        assert_eq!(aupr_out(&v, true).unwrap(), 1.0);
        assert_eq!(auroc(&v, false).unwrap(), 0.0);
    }

    #[test]
    fn all_ties_is_one_half() {
        let v = [s(0.3, true), s(0.3, false), s(0.3, true), s(0.3, false), s(0.3, false)];
        assert_eq!(auroc(&v, true).unwrap(), 0.5);
        assert_eq!(auroc(&v, false).unwrap(), 0.5);
    }

    #[test]
    fn four_sample_example() {
        let v = [s(0.1, false), s(0.4, false), s(0.35, true), s(0.8, true)];
        assert!((auroc(&v, true).unwrap() - 0.75).abs() < 1e-15);
        // thresholds 0.8: P=1 R=.5; 0.4: no new positive; 0.35: P=2/3 R=1
        assert!((aupr_in(&v, true).unwrap() - (0.5 + 0.5 * 2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn degenerate_and_nonfinite_rejected() {
        assert!(matches!(
            auroc(&[s(1.0, true), s(2.0, true)], true),
            Err(Error::DegenerateClasses { n_pos: 2, n_neg: 0 })
        ));
        assert!(aupr_in(&[s(f64::NAN, true), s(0.0, false)], true).is_err());
    }

    #[test]
    fn evaluate_counts() {
        let v = [s(0.1, false), s(0.4, false), s(0.35, true), s(0.8, true), s(0.7, true)];
        let r = evaluate(&v, true).unwrap();
        assert_eq!((r.n_pos, r.n_neg), (3, 2));
    }
}
