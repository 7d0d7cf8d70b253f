//! `acr sweep`: run every (method, seed) pair and aggregate per-arm means
//! and population standard deviations into one CSV with a deterministic row
//! order.

use super::{run_experiment, write_file};
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use acr_core::metrics::MetricsReport;
use std::fmt::Write as _;
use std::path::Path;

const COLUMNS: [&str; 6] = [
    "aurc_x1000",
    "auroc",
    "fpr95",
    "acc",
    "degradation_rate_correct",
    "degradation_rate_incorrect",
];

fn column_values(report: &MetricsReport) -> [Option<f64>; 6] {
    [
        Some(report.aurc_x1000),
        report.auroc,
        report.fpr95,
        Some(report.acc),
        report.degradation_rate_correct,
        report.degradation_rate_incorrect,
    ]
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Population mean/std over the present values of each column.
fn aggregate(rows: &[[Option<f64>; 6]]) -> ([Option<f64>; 6], [Option<f64>; 6]) {
    let mut means = [None; 6];
    let mut stds = [None; 6];
    for c in 0..6 {
        let values: Vec<f64> = rows.iter().filter_map(|r| r[c]).collect();
        if values.is_empty() {
            continue;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        means[c] = Some(mean);
        stds[c] = Some(var.sqrt());
    }
    (means, stds)
}

pub fn sweep_csv(cfg: &ExperimentConfig, methods: &[String], seeds: &[u64]) -> CliResult<String> {
    if seeds.is_empty() {
        return Err(crate::error::CliError::usage("sweep needs at least one seed"));
    }
    if methods.is_empty() {
        return Err(crate::error::CliError::usage("sweep needs at least one method"));
    }
    let mut out = String::from("method,seed,");
    out.push_str(&COLUMNS.join(","));
    out.push('\n');
    let mut summaries = Vec::new();
    for method in methods {
        let mut rows = Vec::new();
        for &seed in seeds {
            let mut run_cfg = cfg.clone();
            run_cfg.method = method.clone();
            run_cfg.seed = seed;
            run_cfg.method()?; // validate before the expensive part
            let outcome = run_experiment(&run_cfg)?;
            let values = column_values(&outcome.evaluation.report);
            let _ = write!(out, "{method},{seed}");
            for v in values {
                let _ = write!(out, ",{}", fmt_opt(v));
            }
            out.push('\n');
            rows.push(values);
        }
        summaries.push((method.clone(), aggregate(&rows)));
    }
    for (method, (means, stds)) in summaries {
        for (tag, values) in [("mean", means), ("std", stds)] {
            let _ = write!(out, "{method},{tag}");
            for v in values {
                let _ = write!(out, ",{}", fmt_opt(v));
            }
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    methods: &[String],
    seeds: &[u64],
    out_dir: &Path,
) -> CliResult<()> {
    let csv = sweep_csv(cfg, methods, seeds)?;
    write_file(&out_dir.join("sweep.csv"), &csv)
}
