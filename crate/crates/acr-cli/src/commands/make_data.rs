//! `acr make-data`: generate the synthetic benchmark and export every split
//! as per-modality CSV files.

use crate::config::ExperimentConfig;
use crate::error::CliResult;
use acr_core::synth::{make_dataset, write_csv};
use std::path::Path;

pub fn cmd_make_data(cfg: &ExperimentConfig, out_dir: &Path) -> CliResult<()> {
    let splits = make_dataset::<f64>(&cfg.synth_config())?;
    write_csv(&splits.train, out_dir, "train")?;
    write_csv(&splits.val, out_dir, "val")?;
    write_csv(&splits.test, out_dir, "test")?;
    Ok(())
}
