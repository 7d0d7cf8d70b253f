//! Command implementations. Each returns `CliResult` and is callable
//! in-process; `main` maps errors onto exit codes.

mod eval;
mod export_hist;
mod make_data;
mod sweep;
mod train;

pub use eval::cmd_eval;
pub use export_hist::cmd_export_hist;
pub use make_data::cmd_make_data;
pub use sweep::cmd_sweep;
pub use train::{cmd_train, run_experiment, ExperimentOutcome};

use crate::error::{CliError, CliResult};
use acr_core::eval::Evaluation;
use acr_core::model::EpochStats;
use std::fmt::Write as _;
use std::path::Path;

pub(crate) fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub(crate) fn history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,l_cls,l_outlier,l_acl,l_total,val_auroc,val_acc\n");
    for h in history {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            h.epoch,
            h.l_cls,
            h.l_outlier,
            h.l_acl,
            h.l_total,
            fmt_opt(h.val_auroc),
            h.val_acc
        );
    }
    out
}

/// Fixed-width histogram over [0, 1] with counts partitioned by correctness.
/// Scores outside the unit interval are clamped into it, so the per-column
/// totals always equal the number of correct / incorrect samples.
pub(crate) fn score_histogram(scores: &[f64], correct: &[bool], bins: usize) -> CliResult<String> {
    if bins == 0 {
        return Err(CliError::usage("bins must be at least 1"));
    }
    let mut count_correct = vec![0u64; bins];
    let mut count_incorrect = vec![0u64; bins];
    for (&s, &c) in scores.iter().zip(correct) {
        let clamped = s.clamp(0.0, 1.0);
        let bin = ((clamped * bins as f64) as usize).min(bins - 1);
        if c {
            count_correct[bin] += 1;
        } else {
            count_incorrect[bin] += 1;
        }
    }
    let mut out = String::from("bin_left,bin_right,count_correct,count_incorrect\n");
    for b in 0..bins {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            b as f64 / bins as f64,
            (b + 1) as f64 / bins as f64,
            count_correct[b],
            count_incorrect[b]
        );
    }
    Ok(out)
}

/// Writes `metrics.json` and `rc_curve.csv` for an evaluation.
pub(crate) fn write_eval_outputs(eval: &Evaluation<f64>, out_dir: &Path) -> CliResult<()> {
    write_file(&out_dir.join("metrics.json"), &eval.report.to_json())?;
    write_file(&out_dir.join("rc_curve.csv"), &eval.curve.to_csv())?;
    Ok(())
}
