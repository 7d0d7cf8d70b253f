//! `acr export-hist`: score a stored dataset split with a stored checkpoint
//! and export the correct/incorrect score histogram.

use super::{score_histogram, write_file};
use crate::error::CliResult;
use acr_core::eval::evaluate_model;
use acr_core::model::load_checkpoint;
use acr_core::scores::ScorerSpec;
use acr_core::synth::read_csv;
use std::path::Path;

#[allow(clippy::too_many_arguments)]
pub fn cmd_export_hist(
    checkpoint_path: &Path,
    data_dir: &Path,
    split: &str,
    bins: usize,
    scorer: &ScorerSpec,
    renormalize: bool,
    out_path: &Path,
) -> CliResult<()> {
    let params = load_checkpoint::<f64>(checkpoint_path)?;
    let batch = read_csv::<f64>(data_dir, split, params.dims.modalities)?;
    let evaluation = evaluate_model(&params, &batch, scorer, renormalize)?;
    let csv = score_histogram(&evaluation.scores, &evaluation.correct, bins)?;
    write_file(out_path, &csv)
}
