//! `acr eval`: model-free evaluation of an external logit dump, including
//! OOD-flagged rows, which are folded in as incorrect.

use super::write_eval_outputs;
use crate::dump::LogitDump;
use crate::error::CliResult;
use acr_core::eval::{evaluate_logits, EvalInput, Evaluation};
use acr_core::scores::ScorerSpec;
use std::path::Path;

pub fn evaluate_dump(
    dump: &LogitDump,
    scorer: &ScorerSpec,
    renormalize: bool,
) -> CliResult<Evaluation<f64>> {
    let input = EvalInput {
        fused_logits: &dump.fused,
        uni_logits: (!dump.unimodal.is_empty()).then_some(dump.unimodal.as_slice()),
        labels: &dump.labels,
        ood: Some(&dump.ood),
    };
    Ok(evaluate_logits(&input, dump.classes, scorer, renormalize)?)
}

pub fn cmd_eval(
    dump_path: &Path,
    scorer: &ScorerSpec,
    renormalize: bool,
    out_dir: &Path,
) -> CliResult<()> {
    let dump = LogitDump::read(dump_path)?;
    let evaluation = evaluate_dump(&dump, scorer, renormalize)?;
    std::fs::create_dir_all(out_dir)?;
    write_eval_outputs(&evaluation, out_dir)
}
