//! Shared logits-to-metrics pipeline, used identically by the trainer's test
//! pass and by external logit-dump evaluation so the two routes agree to the
//! bit.
//!
//! Predictions are the argmax over the first `C` fused logits; OOD-flagged
//! rows are forced incorrect; ranking metrics that need both outcome classes
//! report as absent on a degenerate split instead of failing the run.

use crate::error::{AcrError, Result};
use crate::metrics::{
    aurc, auroc, degradation_rate, fpr_at_95_tpr, risk_coverage, MetricsReport,
    RiskCoverageCurve,
};
use crate::model::{forward, ModelParams};
use crate::numerics::{softmax, Matrix};
use crate::scores::{score_fused_logits, score_msp, ScorerSpec};
use crate::synth::MultimodalBatch;
use crate::Real;

/// Logit-level inputs: fused logits over `C+1`, optional unimodal logits over
/// `C` per modality, integer labels (−1 marks an OOD row), and optional OOD
/// flags.
pub struct EvalInput<'a, T> {
    pub fused_logits: &'a Matrix<T>,
    pub uni_logits: Option<&'a [Matrix<T>]>,
    pub labels: &'a [i64],
    pub ood: Option<&'a [bool]>,
}

/// Per-sample predictions plus the aggregated metric report.
#[derive(Clone, Debug)]
pub struct Evaluation<T> {
    pub predictions: Vec<usize>,
    pub scores: Vec<T>,
    pub correct: Vec<bool>,
    pub curve: RiskCoverageCurve,
    pub report: MetricsReport,
}

fn argmax_prefix<T: Real>(row: &[T], upto: usize) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().take(upto).skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Evaluates fused (and optionally unimodal) logits under a scorer.
pub fn evaluate_logits<T: Real>(
    input: &EvalInput<'_, T>,
    classes: usize,
    spec: &ScorerSpec,
    renormalize: bool,
) -> Result<Evaluation<T>> {
    let n = input.fused_logits.rows();
    if n == 0 {
        return Err(AcrError::invalid_input("evaluation of an empty batch"));
    }
    if input.fused_logits.cols() != classes + 1 {
        return Err(AcrError::shape_mismatch(format!(
            "fused logits have {} columns, expected {}",
            input.fused_logits.cols(),
            classes + 1
        )));
    }
    if input.labels.len() != n {
        return Err(AcrError::shape_mismatch(format!(
            "{} labels for {n} rows",
            input.labels.len()
        )));
    }
    if let Some(ood) = input.ood {
        if ood.len() != n {
            return Err(AcrError::shape_mismatch(format!(
                "{} ood flags for {n} rows",
                ood.len()
            )));
        }
    }
    if let Some(uni) = input.uni_logits {
        for (k, m) in uni.iter().enumerate() {
            if m.rows() != n || m.cols() != classes {
                return Err(AcrError::shape_mismatch(format!(
                    "unimodal logits {k} are {}x{}, expected {n}x{classes}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
    }
    spec.validate(classes)?;

    let mut predictions = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    let mut correct = Vec::with_capacity(n);
    for i in 0..n {
        let row = input.fused_logits.row(i);
        let pred = argmax_prefix(row, classes);
        let is_ood = input.ood.is_some_and(|o| o[i]);
        predictions.push(pred);
        scores.push(score_fused_logits(spec, row, classes, renormalize)?);
        correct.push(!is_ood && input.labels[i] == pred as i64);
    }

    let curve = risk_coverage(&scores, &correct)?;
    let aurc_value = aurc(&scores, &correct)?;
    let auroc_value = match auroc(&scores, &correct) {
        Ok(v) => Some(v),
        Err(AcrError::DegenerateSplit(_)) => None,
        Err(e) => return Err(e),
    };
    let fpr95_value = match fpr_at_95_tpr(&scores, &correct) {
        Ok(v) => Some(v),
        Err(AcrError::DegenerateSplit(_)) => None,
        Err(e) => return Err(e),
    };
    // Accuracy folds OOD rows in as incorrect, matching the correctness bits.
    let acc = correct.iter().filter(|&&c| c).count() as f64 / n as f64;

    // Degradation needs unimodal confidences; both fused and unimodal sides
    // use the MSP convention regardless of the selected scorer.
    let (mut deg_correct, mut deg_incorrect) = (None, None);
    if let Some(uni) = input.uni_logits {
        let mut fused_conf = Vec::with_capacity(n);
        for i in 0..n {
            let probs = softmax(input.fused_logits.row(i))?;
            fused_conf.push(score_msp(&probs[..classes])?);
        }
        let mut uni_conf: Vec<Vec<T>> = Vec::with_capacity(uni.len());
        for m in uni {
            let mut confs = Vec::with_capacity(n);
            for i in 0..n {
                confs.push(score_msp(&softmax(m.row(i))?)?);
            }
            uni_conf.push(confs);
        }
        let refs: Vec<&[T]> = uni_conf.iter().map(Vec::as_slice).collect();
        let report = degradation_rate(&fused_conf, &refs, &correct)?;
        deg_correct = report.rate_correct;
        deg_incorrect = report.rate_incorrect;
    }

    Ok(Evaluation {
        predictions,
        scores,
        correct,
        curve,
        report: MetricsReport {
            aurc_x1000: 1000.0 * aurc_value,
            auroc: auroc_value,
            fpr95: fpr95_value,
            acc,
            degradation_rate_correct: deg_correct,
            degradation_rate_incorrect: deg_incorrect,
        },
    })
}

/// Runs the model on a batch and evaluates the resulting logits.
pub fn evaluate_model<T: Real>(
    params: &ModelParams<T>,
    batch: &MultimodalBatch<T>,
    spec: &ScorerSpec,
    renormalize: bool,
) -> Result<Evaluation<T>> {
    let record = forward(&batch.x, params)?;
    let labels: Vec<i64> = batch.labels.iter().map(|&y| y as i64).collect();
    let input = EvalInput {
        fused_logits: &record.fused_logits,
        uni_logits: Some(&record.uni_logits),
        labels: &labels,
        ood: None,
    };
    evaluate_logits(&input, params.dims.classes, spec, renormalize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scores::ScorerKind;

    fn logits_matrix(rows: Vec<Vec<f64>>) -> Matrix<f64> {
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn prediction_ignores_outlier_column() {
        // Outlier logit dominates; prediction still restricted to classes.
        let fused = logits_matrix(vec![vec![0.5, 1.0, 9.0], vec![2.0, -1.0, 9.0]]);
        let input = EvalInput {
            fused_logits: &fused,
            uni_logits: None,
            labels: &[1, 0],
            ood: None,
        };
        let spec = ScorerSpec::new(ScorerKind::Msp);
        let eval = evaluate_logits(&input, 2, &spec, false).unwrap();
        assert_eq!(eval.predictions, vec![1, 0]);
        assert_eq!(eval.correct, vec![true, true]);
        assert_eq!(eval.report.acc, 1.0);
        assert_eq!(eval.report.auroc, None);
        assert_eq!(eval.report.fpr95, None);
        assert_eq!(eval.report.aurc_x1000, 0.0);
    }

    #[test]
    fn ood_rows_are_forced_incorrect() {
        let fused = logits_matrix(vec![vec![3.0, 0.0, 0.0], vec![3.0, 0.0, 0.0]]);
        let input = EvalInput {
            fused_logits: &fused,
            uni_logits: None,
            labels: &[0, -1],
            ood: Some(&[false, true]),
        };
        let spec = ScorerSpec::new(ScorerKind::Msp);
        let eval = evaluate_logits(&input, 2, &spec, false).unwrap();
        assert_eq!(eval.correct, vec![true, false]);
        assert_eq!(eval.report.acc, 0.5);
    }

    #[test]
    fn accuracy_is_scorer_independent() {
        let fused = logits_matrix(vec![
            vec![1.0, 0.2, -0.5],
            vec![-0.3, 0.8, 0.1],
            vec![0.1, 0.0, 0.9],
        ]);
        let labels = [0i64, 0, 1];
        let mut accs = Vec::new();
        for name in ["msp", "maxlogit", "energy", "entropy", "doctor_a", "gen"] {
            let spec = ScorerSpec::from_name(name).unwrap();
            let input = EvalInput {
                fused_logits: &fused,
                uni_logits: None,
                labels: &labels,
                ood: None,
            };
            accs.push(evaluate_logits(&input, 2, &spec, false).unwrap().report.acc);
        }
        assert!(accs.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn degradation_rates_need_unimodal_logits() {
        let fused = logits_matrix(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        let labels = [0i64, 0];
        let spec = ScorerSpec::new(ScorerKind::Msp);
        let input = EvalInput {
            fused_logits: &fused,
            uni_logits: None,
            labels: &labels,
            ood: None,
        };
        let eval = evaluate_logits(&input, 2, &spec, false).unwrap();
        assert_eq!(eval.report.degradation_rate_correct, None);

        // Strongly peaked unimodal heads degrade a weakly fused row.
        let uni = vec![
            logits_matrix(vec![vec![8.0, 0.0], vec![8.0, 0.0]]),
            logits_matrix(vec![vec![0.0, 1.0], vec![0.0, 1.0]]),
        ];
        let input = EvalInput {
            fused_logits: &fused,
            uni_logits: Some(&uni),
            labels: &labels,
            ood: None,
        };
        let eval = evaluate_logits(&input, 2, &spec, false).unwrap();
        assert_eq!(eval.report.degradation_rate_correct, Some(1.0));
        assert_eq!(eval.report.degradation_rate_incorrect, Some(1.0));
    }
}
