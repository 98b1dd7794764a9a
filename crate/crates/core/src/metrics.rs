//! Multi-label evaluation metrics.
//!
//! The metric functions are generic over the label width so they can be
//! checked exhaustively on small label sets; [`evaluate`] fixes the width
//! to the eleven sentiment labels. Everything is computed in `f64`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labels::{LabelVector, NUM_LABELS};
use crate::net::bce_loss;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("length mismatch: {truth} truth rows vs {other} predicted rows")]
    LengthMismatch { truth: usize, other: usize },
    #[error("no samples to evaluate")]
    EmptyInput,
    #[error("sample {sample}: label width {found} differs from {expected}")]
    WidthMismatch {
        sample: usize,
        expected: usize,
        found: usize,
    },
    #[error("every sample has an empty true label set")]
    AllSamplesSkipped,
    #[error("sample {sample}: non-finite score")]
    NonFiniteScore { sample: usize },
    #[error("threshold {0} outside (0, 1)")]
    InvalidThreshold(f64),
}

fn check_pair<A, B, X: ?Sized, Y: ?Sized>(truth: &[A], other: &[B]) -> Result<usize, MetricError>
where
    A: AsRef<[X]>,
    B: AsRef<[Y]>,
    X: Sized,
    Y: Sized,
{
    if truth.len() != other.len() {
        return Err(MetricError::LengthMismatch {
            truth: truth.len(),
            other: other.len(),
        });
    }
    if truth.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let width = truth[0].as_ref().len();
    for (i, (t, o)) in truth.iter().zip(other).enumerate() {
        for found in [t.as_ref().len(), o.as_ref().len()] {
            if found != width {
                return Err(MetricError::WidthMismatch {
                    sample: i,
                    expected: width,
                    found,
                });
            }
        }
    }
    Ok(width)
}

/// Fraction of label slots where prediction and truth differ.
pub fn hamming_loss<A: AsRef<[bool]>, B: AsRef<[bool]>>(truth: &[A], pred: &[B]) -> Result<f64, MetricError> {
    let width = check_pair(truth, pred)?;
    let mismatches: usize = truth
        .iter()
        .zip(pred)
        .map(|(t, p)| t.as_ref().iter().zip(p.as_ref()).filter(|(a, b)| a != b).count())
        .sum();
    Ok(mismatches as f64 / (truth.len() * width) as f64)
}

/// Mean per-sample intersection over union; two empty sets score 1.
pub fn jaccard_score<A: AsRef<[bool]>, B: AsRef<[bool]>>(truth: &[A], pred: &[B]) -> Result<f64, MetricError> {
    check_pair(truth, pred)?;
    let total: f64 = truth
        .iter()
        .zip(pred)
        .map(|(t, p)| {
            let (mut inter, mut union) = (0usize, 0usize);
            for (&a, &b) in t.as_ref().iter().zip(p.as_ref()) {
                inter += (a && b) as usize;
                union += (a || b) as usize;
            }
            if union == 0 {
                1.0
            } else {
                inter as f64 / union as f64
            }
        })
        .sum();
    Ok(total / truth.len() as f64)
}

/// LRAP value plus how many samples were left out for having no true label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrapSummary {
    pub score: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Label ranking average precision.
///
/// Labels are ranked by descending score; equal scores are ordered by
/// ascending label index, so every label has a distinct 1-based rank.
/// Samples without true labels are excluded from the mean.
pub fn lrap_summary<A: AsRef<[bool]>, S: AsRef<[f64]>>(truth: &[A], scores: &[S]) -> Result<LrapSummary, MetricError> {
    check_pair(truth, scores)?;
    let mut total = 0.0;
    let mut evaluated = 0;
    for (i, (t, s)) in truth.iter().zip(scores).enumerate() {
        let (t, s) = (t.as_ref(), s.as_ref());
        if s.iter().any(|v| !v.is_finite()) {
            return Err(MetricError::NonFiniteScore { sample: i });
        }
        if !t.iter().any(|&b| b) {
            continue;
        }
        let rank = |k: usize| -> usize {
            1 + (0..s.len())
                .filter(|&l| s[l] > s[k] || (s[l] == s[k] && l < k))
                .count()
        };
        let ranks: Vec<usize> = (0..s.len()).map(rank).collect();
        let positives: Vec<usize> = (0..t.len()).filter(|&k| t[k]).collect();
        let sample: f64 = positives
            .iter()
            .map(|&j| {
                let hits = positives.iter().filter(|&&k| ranks[k] <= ranks[j]).count();
                hits as f64 / ranks[j] as f64
            })
            .sum::<f64>()
            / positives.len() as f64;
        total += sample;
        evaluated += 1;
    }
    if evaluated == 0 {
        return Err(MetricError::AllSamplesSkipped);
    }
    Ok(LrapSummary {
        score: total / evaluated as f64,
        evaluated,
        skipped: truth.len() - evaluated,
    })
}

pub fn lrap<A: AsRef<[bool]>, S: AsRef<[f64]>>(truth: &[A], scores: &[S]) -> Result<f64, MetricError> {
    lrap_summary(truth, scores).map(|s| s.score)
}

#[derive(Debug, Clone, PartialEq)]
pub struct F1Scores {
    pub macro_f1: f64,
    pub micro_f1: f64,
    /// One value per label, in label order.
    pub per_class: Vec<f64>,
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

/// Macro (mean of per-class F1) and micro (pooled counts) F1. A class with
/// no positives in either truth or prediction scores 0.
pub fn f1_scores<A: AsRef<[bool]>, B: AsRef<[bool]>>(truth: &[A], pred: &[B]) -> Result<F1Scores, MetricError> {
    let width = check_pair(truth, pred)?;
    let mut counts = vec![(0usize, 0usize, 0usize); width];
    for (t, p) in truth.iter().zip(pred) {
        for (k, (&a, &b)) in t.as_ref().iter().zip(p.as_ref()).enumerate() {
            match (a, b) {
                (true, true) => counts[k].0 += 1,
                (false, true) => counts[k].1 += 1,
                (true, false) => counts[k].2 += 1,
                (false, false) => {}
            }
        }
    }
    let per_class: Vec<f64> = counts.iter().map(|&(tp, fp, fn_)| f1(tp, fp, fn_)).collect();
    let (tp, fp, fn_) = counts
        .iter()
        .fold((0, 0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1, acc.2 + c.2));
    Ok(F1Scores {
        macro_f1: per_class.iter().sum::<f64>() / width as f64,
        micro_f1: f1(tp, fp, fn_),
        per_class,
    })
}

/// The six-value metric bundle for one labeled set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub bce: f64,
    pub hamming: f64,
    pub jaccard: f64,
    pub lrap: f64,
    pub f1_macro: f64,
    pub f1_micro: f64,
    pub n_samples: usize,
}

/// Field names in serialization order.
pub const REPORT_FIELDS: [&str; 7] = ["bce", "hamming", "jaccard", "lrap", "f1_macro", "f1_micro", "n_samples"];

impl EvaluationReport {
    fn values(&self) -> [f64; 6] {
        [self.bce, self.hamming, self.jaccard, self.lrap, self.f1_macro, self.f1_micro]
    }

    /// `key=value` lines in fixed field order.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        for (name, v) in REPORT_FIELDS.iter().zip(self.values()) {
            s.push_str(&format!("{name}={v}\n"));
        }
        s.push_str(&format!("n_samples={}\n", self.n_samples));
        s
    }

    pub fn from_key_value(text: &str) -> Option<Self> {
        let mut map = std::collections::HashMap::new();
        for line in text.lines() {
            if let Some((k, v)) = line.split_once('=') {
                map.insert(k.trim(), v.trim());
            }
        }
        let f = |k: &str| map.get(k)?.parse::<f64>().ok();
        Some(EvaluationReport {
            bce: f("bce")?,
            hamming: f("hamming")?,
            jaccard: f("jaccard")?,
            lrap: f("lrap")?,
            f1_macro: f("f1_macro")?,
            f1_micro: f("f1_micro")?,
            n_samples: map.get("n_samples")?.parse().ok()?,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Side-by-side table against a reference column.
    pub fn comparison(&self, reference: &ReferenceColumn) -> String {
        let mut s = format!("{:<10} {:>10} {:>10}\n", "metric", "this run", reference.name);
        for (name, (v, r)) in REPORT_FIELDS.iter().zip(self.values().iter().zip(reference.values())) {
            s.push_str(&format!("{name:<10} {v:>10.3} {r:>10.3}\n"));
        }
        s
    }
}

impl fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_key_value())
    }
}

/// Published benchmark scores for one model, kept for comparison only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceColumn {
    pub name: &'static str,
    pub bce: f64,
    pub hamming: f64,
    pub jaccard: f64,
    pub lrap: f64,
    pub f1_macro: f64,
    pub f1_micro: f64,
}

impl ReferenceColumn {
    fn values(&self) -> [f64; 6] {
        [self.bce, self.hamming, self.jaccard, self.lrap, self.f1_macro, self.f1_micro]
    }
}

pub const REFERENCE_LSTM: ReferenceColumn = ReferenceColumn {
    name: "ref lstm",
    bce: 0.255,
    hamming: 0.157,
    jaccard: 0.418,
    lrap: 0.511,
    f1_macro: 0.430,
    f1_micro: 0.493,
};

pub const REFERENCE_BDLSTM: ReferenceColumn = ReferenceColumn {
    name: "ref bdlstm",
    bce: 0.281,
    hamming: 0.163,
    jaccard: 0.417,
    lrap: 0.503,
    f1_macro: 0.434,
    f1_micro: 0.495,
};

/// Thresholds `scores` and computes the full report. BCE uses the raw scores.
pub fn evaluate(
    truth: &[LabelVector],
    scores: &[[f64; NUM_LABELS]],
    threshold: f64,
) -> Result<EvaluationReport, MetricError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(MetricError::InvalidThreshold(threshold));
    }
    check_pair(truth, scores)?;
    let pred: Vec<LabelVector> = scores
        .iter()
        .map(|s| LabelVector::from_scores(s, threshold))
        .collect();
    let bce = truth
        .iter()
        .zip(scores)
        .map(|(t, s)| bce_loss(s, t))
        .sum::<f64>()
        / truth.len() as f64;
    let f1 = f1_scores(truth, &pred)?;
    Ok(EvaluationReport {
        bce,
        hamming: hamming_loss(truth, &pred)?,
        jaccard: jaccard_score(truth, &pred)?,
        lrap: lrap(truth, scores)?,
        f1_macro: f1.macro_f1,
        f1_micro: f1.micro_f1,
        n_samples: truth.len(),
    })
}
