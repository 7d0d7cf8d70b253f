//! `acr train`: synth → train → evaluate the test split → export metrics,
//! curves, history, histogram, checkpoint, and the test-set logit dump.

use super::{history_csv, score_histogram, write_eval_outputs, write_file};
use crate::config::ExperimentConfig;
use crate::dump::LogitDump;
use crate::error::CliResult;
use acr_core::eval::{evaluate_logits, EvalInput, Evaluation};
use acr_core::model::{forward, save_checkpoint_str, train, TrainResult};
use acr_core::numerics::RandomStream;
use acr_core::synth::{apply_shift, make_dataset, MultimodalBatch};
use std::path::Path;

/// Everything one experiment produces, for in-process reuse by `sweep` and
/// the test suites.
pub struct ExperimentOutcome {
    pub result: TrainResult<f64>,
    pub evaluation: Evaluation<f64>,
    pub dump: LogitDump,
}

/// Runs one full experiment: generate the dataset, train the configured
/// method arm, apply the optional test-time shift, and evaluate.
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<ExperimentOutcome> {
    let data = make_dataset::<f64>(&cfg.synth_config())?;
    let train_cfg = cfg.train_config()?;
    let result = train(
        cfg.model_dims(),
        &data,
        &train_cfg,
        &RandomStream::new(cfg.seed),
    )?;

    let test: MultimodalBatch<f64> = match cfg.shift_sigma {
        Some(sigma) if sigma != 0.0 => {
            let mut shift_rng = RandomStream::new(cfg.seed).fork("shift");
            apply_shift(&data.test, cfg.shift_modality_index()?, sigma, &mut shift_rng)?
        }
        _ => data.test,
    };

    let record = forward(&test.x, &result.params)?;
    let labels: Vec<i64> = test.labels.iter().map(|&y| y as i64).collect();
    let evaluation = evaluate_logits(
        &EvalInput {
            fused_logits: &record.fused_logits,
            uni_logits: Some(&record.uni_logits),
            labels: &labels,
            ood: None,
        },
        cfg.classes,
        &cfg.scorer_spec()?,
        cfg.renormalize_over_c,
    )?;
    let dump = LogitDump {
        classes: cfg.classes,
        sample_ids: (0..labels.len() as u64).collect(),
        labels,
        ood: vec![false; test.labels.len()],
        fused: record.fused_logits,
        unimodal: record.uni_logits,
    };
    Ok(ExperimentOutcome { result, evaluation, dump })
}

pub fn cmd_train(cfg: &ExperimentConfig, out_dir: &Path) -> CliResult<()> {
    let outcome = run_experiment(cfg)?;
    std::fs::create_dir_all(out_dir)?;
    write_eval_outputs(&outcome.evaluation, out_dir)?;
    write_file(&out_dir.join("history.csv"), &history_csv(&outcome.result.history))?;
    write_file(
        &out_dir.join("hist_scores.csv"),
        &score_histogram(&outcome.evaluation.scores, &outcome.evaluation.correct, cfg.bins)?,
    )?;
    write_file(
        &out_dir.join("checkpoint.json"),
        &save_checkpoint_str(&outcome.result.params),
    )?;
    outcome.dump.write(&out_dir.join("logits.csv"))?;
    Ok(())
}
