//! Selective-classification metrics: risk-coverage curves, AURC, AUROC,
//! FPR95, accuracy, and confidence-degradation statistics, plus brute-force
//! information-theoretic diagnostics on discrete joints.
//!
//! Conventions, pinned for testability:
//! - AURC is the discrete mean of selective risk over all N coverage levels,
//!   no interpolation; the reporting layer multiplies by 1000.
//! - Risk-coverage ties are broken by ascending original index; AUROC instead
//!   counts tied pairs as 0.5.
//! - FPR95 uses the largest threshold achieving TPR ≥ 0.95 with no
//!   interpolation between adjacent scores.

mod info;

pub use info::{conditional_entropy, dpi_and_fano_check, Conditioning, DiscreteJoint, FanoDiagnostics};

use crate::error::{AcrError, Result};
use crate::Real;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Per-sample scores with correctness bits and an optional OOD mask.
///
/// OOD-flagged samples are folded in as `correct = false`, so every failure
/// detection metric applies unchanged when outliers are mixed into the test
/// set.
#[derive(Clone, Debug)]
pub struct LabeledScores<T> {
    scores: Vec<T>,
    correct: Vec<bool>,
}

impl<T: Real> LabeledScores<T> {
    pub fn new(scores: Vec<T>, correct: Vec<bool>, ood: Option<&[bool]>) -> Result<Self> {
        if scores.len() != correct.len() {
            return Err(AcrError::shape_mismatch(format!(
                "{} scores vs {} correctness bits",
                scores.len(),
                correct.len()
            )));
        }
        if !scores.iter().all(|s| s.is_finite()) {
            return Err(AcrError::invalid_input("scores must be finite"));
        }
        let mut correct = correct;
        if let Some(ood) = ood {
            if ood.len() != scores.len() {
                return Err(AcrError::shape_mismatch(format!(
                    "{} scores vs {} ood flags",
                    scores.len(),
                    ood.len()
                )));
            }
            for (c, &o) in correct.iter_mut().zip(ood) {
                if o {
                    *c = false;
                }
            }
        }
        Ok(Self { scores, correct })
    }

    pub fn scores(&self) -> &[T] {
        &self.scores
    }

    pub fn correct(&self) -> &[bool] {
        &self.correct
    }
}

/// Monotone coverage grid `i/N` with the selective error rate among the `i`
/// highest-scored samples at each level.
#[derive(Clone, Debug, PartialEq)]
pub struct RiskCoverageCurve {
    pub coverage: Vec<f64>,
    pub risk: Vec<f64>,
}

impl RiskCoverageCurve {
    /// Serializes as `coverage,risk` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("coverage,risk\n");
        for (c, r) in self.coverage.iter().zip(&self.risk) {
            let _ = writeln!(out, "{c},{r}");
        }
        out
    }
}

fn order_by_descending_score<T: Real>(scores: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    // Descending score; ties broken by ascending original index.
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("finite scores")
            .then(a.cmp(&b))
    });
    idx
}

fn check_lengths<T>(scores: &[T], correct: &[bool]) -> Result<()> {
    if scores.len() != correct.len() {
        return Err(AcrError::shape_mismatch(format!(
            "{} scores vs {} correctness bits",
            scores.len(),
            correct.len()
        )));
    }
    Ok(())
}

/// Selective risk at every coverage level `i/N`.
pub fn risk_coverage<T: Real>(scores: &[T], correct: &[bool]) -> Result<RiskCoverageCurve> {
    check_lengths(scores, correct)?;
    if scores.is_empty() {
        return Err(AcrError::invalid_input("risk_coverage of an empty sample"));
    }
    let n = scores.len();
    let order = order_by_descending_score(scores);
    let mut coverage = Vec::with_capacity(n);
    let mut risk = Vec::with_capacity(n);
    let mut errors = 0usize;
    for (i, &sample) in order.iter().enumerate() {
        if !correct[sample] {
            errors += 1;
        }
        coverage.push((i + 1) as f64 / n as f64);
        risk.push(errors as f64 / (i + 1) as f64);
    }
    Ok(RiskCoverageCurve { coverage, risk })
}

/// Area under the risk-coverage curve: the discrete mean of selective risk.
/// Reported values are this times 1000.
pub fn aurc<T: Real>(scores: &[T], correct: &[bool]) -> Result<f64> {
    let curve = risk_coverage(scores, correct)?;
    let n = curve.risk.len() as f64;
    Ok(curve.risk.iter().sum::<f64>() / n)
}

/// Rank-based AUROC: the probability that a uniformly random correct sample
/// outscores a uniformly random incorrect one, with tied pairs counted 0.5.
/// Matches O(n²) pair counting exactly.
pub fn auroc<T: Real>(scores: &[T], correct: &[bool]) -> Result<f64> {
    check_lengths(scores, correct)?;
    let n_pos = correct.iter().filter(|&&c| c).count();
    let n_neg = correct.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(AcrError::DegenerateSplit(format!(
            "auroc needs both outcomes, got {n_pos} correct / {n_neg} incorrect"
        )));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    // Walk tie groups in ascending order, accumulating, for every positive,
    // the count of negatives strictly below plus half the negatives tied.
    // Every increment is a multiple of 0.5, so the sum is exact in f64.
    let mut wins = 0.0f64;
    let mut neg_below = 0usize;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        let group = &idx[i..j];
        let pos_in_group = group.iter().filter(|&&s| correct[s]).count();
        let neg_in_group = group.len() - pos_in_group;
        wins += pos_in_group as f64 * neg_below as f64
            + 0.5 * pos_in_group as f64 * neg_in_group as f64;
        neg_below += neg_in_group;
        i = j;
    }
    Ok(wins / (n_pos as f64 * n_neg as f64))
}

/// False positive rate at 95% true positive rate.
///
/// The threshold is the largest τ with `(#correct ≥ τ)/#correct ≥ 0.95`,
/// i.e. the k-th largest correct score for the smallest k with k/#correct ≥
/// 0.95; returns the fraction of incorrect samples with score ≥ τ.
pub fn fpr_at_95_tpr<T: Real>(scores: &[T], correct: &[bool]) -> Result<f64> {
    check_lengths(scores, correct)?;
    let mut pos: Vec<T> = Vec::new();
    let mut neg: Vec<T> = Vec::new();
    for (&s, &c) in scores.iter().zip(correct) {
        if c {
            pos.push(s);
        } else {
            neg.push(s);
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(AcrError::DegenerateSplit(format!(
            "fpr95 needs both outcomes, got {} correct / {} incorrect",
            pos.len(),
            neg.len()
        )));
    }
    pos.sort_by(|a, b| b.partial_cmp(a).expect("finite scores"));
    // Smallest k with k/n ≥ 0.95, in exact integer arithmetic.
    let k = (95 * pos.len()).div_ceil(100);
    let tau = pos[k - 1];
    let above = neg.iter().filter(|&&s| s >= tau).count();
    Ok(above as f64 / neg.len() as f64)
}

/// Fraction of exact matches between predictions and labels.
pub fn accuracy(predictions: &[i64], labels: &[i64]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(AcrError::shape_mismatch(format!(
            "{} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(AcrError::invalid_input("accuracy of an empty sample"));
    }
    let hits = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// Confidence-degradation rates over the correct / incorrect partitions.
///
/// A sample is degraded iff its fused confidence is strictly lower than at
/// least one unimodal confidence. An empty partition reports its rate as
/// absent, not zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegradationReport {
    pub rate_correct: Option<f64>,
    pub rate_incorrect: Option<f64>,
    pub gap: Option<f64>,
}

/// Flags each sample per the strict-inequality degradation rule and averages
/// per partition. `unimodal` holds one confidence slice per modality.
pub fn degradation_rate<T: Real>(
    fused: &[T],
    unimodal: &[&[T]],
    correct: &[bool],
) -> Result<DegradationReport> {
    if unimodal.is_empty() {
        return Err(AcrError::invalid_input(
            "degradation_rate needs at least one modality",
        ));
    }
    if fused.len() != correct.len() || unimodal.iter().any(|u| u.len() != fused.len()) {
        return Err(AcrError::shape_mismatch(
            "fused, unimodal, and correctness lengths differ".to_string(),
        ));
    }
    let mut counts = [0usize; 2]; // [correct, incorrect]
    let mut degraded = [0usize; 2];
    for i in 0..fused.len() {
        let part = usize::from(!correct[i]);
        counts[part] += 1;
        if unimodal.iter().any(|u| fused[i] < u[i]) {
            degraded[part] += 1;
        }
    }
    let rate = |part: usize| {
        (counts[part] > 0).then(|| degraded[part] as f64 / counts[part] as f64)
    };
    let rate_correct = rate(0);
    let rate_incorrect = rate(1);
    let gap = match (rate_correct, rate_incorrect) {
        (Some(c), Some(i)) => Some(i - c),
        _ => None,
    };
    Ok(DegradationReport {
        rate_correct,
        rate_incorrect,
        gap,
    })
}

/// The exported metric set. Keys are stable; ranking metrics that need both
/// outcomes present serialize as `null` on a degenerate split, as do the
/// degradation rates when unimodal confidences are unavailable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub aurc_x1000: f64,
    pub auroc: Option<f64>,
    pub fpr95: Option<f64>,
    pub acc: f64,
    pub degradation_rate_correct: Option<f64>,
    pub degradation_rate_incorrect: Option<f64>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| AcrError::Parse { line: e.line(), message: e.to_string() })
    }
}
