//! Deterministic mini-batch training with Adam, per-batch outlier synthesis
//! at a configurable ratio, and best-epoch selection by validation AUROC.
//!
//! All randomness flows through labeled forks of the caller's stream
//! (`init`, `epoch{e}/shuffle`, `epoch{e}/outliers`), so two runs with the
//! same seed produce bitwise-identical histories and checkpoints, and arms
//! that disable a component make exactly the same draws as arms that never
//! had it.

use super::{forward, total_loss_with_record, LossConfig, ModelDims, ModelParams, OutlierBatch};
use crate::error::{AcrError, Result};
use crate::eval::evaluate_model;
use crate::mfs::{synthesize, SwapConfig, SynthesizerKind};
use crate::numerics::{AdamConfig, AdamState, Matrix, RandomStream};
use crate::scores::ScorerSpec;
use crate::synth::{DatasetSplits, MultimodalBatch};
use crate::Real;

#[derive(Clone, Debug)]
pub struct TrainConfig<T> {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig<T>,
    pub loss: LossConfig<T>,
    pub swap: SwapConfig,
    /// `None` trains the plain cross-entropy arm with no synthesized
    /// outliers.
    pub synthesizer: Option<SynthesizerKind>,
    /// Synthesized outliers per in-distribution sample in each batch.
    pub outlier_ratio: f64,
    /// Share one swap-size draw across each batch instead of drawing per
    /// sample.
    pub n_swap_per_batch: bool,
    /// Scorer used for the per-epoch validation metric.
    pub scorer: ScorerSpec,
    pub renormalize_scores: bool,
}

impl<T: Real> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 16,
            adam: AdamConfig::default(),
            loss: LossConfig::default(),
            swap: SwapConfig::default(),
            synthesizer: Some(SynthesizerKind::Mfs),
            outlier_ratio: 1.0,
            n_swap_per_batch: false,
            scorer: ScorerSpec::from_name("msp").expect("msp exists"),
            renormalize_scores: false,
        }
    }
}

/// Losses averaged over the epoch plus validation metrics, all in `f64` for
/// stable reporting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub l_cls: f64,
    pub l_outlier: f64,
    pub l_acl: f64,
    pub l_total: f64,
    pub val_auroc: Option<f64>,
    pub val_acc: f64,
}

#[derive(Clone, Debug)]
pub struct TrainResult<T> {
    /// The epoch checkpoint maximizing validation AUROC (the initial
    /// parameters when `epochs == 0`).
    pub params: ModelParams<T>,
    /// Epoch index of the returned checkpoint, 0 for the initialization.
    pub best_epoch: usize,
    pub history: Vec<EpochStats>,
}

fn gather_rows<T: Real>(batch: &MultimodalBatch<T>, idx: &[usize]) -> (Vec<Matrix<T>>, Vec<usize>) {
    let x = batch
        .x
        .iter()
        .map(|m| {
            let mut out = Matrix::zeros(idx.len(), m.cols());
            for (j, &i) in idx.iter().enumerate() {
                out.row_mut(j).copy_from_slice(m.row(i));
            }
            out
        })
        .collect();
    let labels = idx.iter().map(|&i| batch.labels[i]).collect();
    (x, labels)
}

fn validate_config<T: Real>(
    cfg: &TrainConfig<T>,
    dims: &ModelDims,
    data: &DatasetSplits<T>,
) -> Result<()> {
    dims.validate()?;
    if cfg.batch_size == 0 {
        return Err(AcrError::invalid_config("batch_size must be positive"));
    }
    if !(cfg.outlier_ratio.is_finite() && cfg.outlier_ratio >= 0.0) {
        return Err(AcrError::invalid_config(format!(
            "outlier_ratio must be non-negative, got {}",
            cfg.outlier_ratio
        )));
    }
    if cfg.synthesizer.is_some() && cfg.outlier_ratio > 0.0 {
        cfg.swap.validate(dims.d_e)?;
    }
    cfg.scorer.validate(dims.classes)?;
    for batch in [&data.train, &data.val] {
        if batch.is_empty() {
            return Err(AcrError::invalid_config("train and val splits must be non-empty"));
        }
        if batch.modalities() != dims.modalities {
            return Err(AcrError::shape_mismatch(format!(
                "dataset has {} modalities, model expects {}",
                batch.modalities(),
                dims.modalities
            )));
        }
        if batch.x[0].cols() != dims.d_in {
            return Err(AcrError::shape_mismatch(format!(
                "dataset width {} differs from model d_in {}",
                batch.x[0].cols(),
                dims.d_in
            )));
        }
        if batch.labels.iter().any(|&y| y >= dims.classes) {
            return Err(AcrError::invalid_input("label out of range for model classes"));
        }
    }
    Ok(())
}

/// Trains the network and returns the best-validation checkpoint with the
/// full per-epoch history.
pub fn train<T: Real>(
    dims: ModelDims,
    data: &DatasetSplits<T>,
    cfg: &TrainConfig<T>,
    rng: &RandomStream,
) -> Result<TrainResult<T>> {
    validate_config(cfg, &dims, data)?;
    let root = rng.fork("train");
    let mut params = ModelParams::init(dims, &root.fork("init"))?;
    let mut adam = AdamState::new(cfg.adam, &params.flatten());

    let n_train = data.train.len();
    let mut best_params = params.clone();
    let mut best_epoch = 0usize;
    let mut best_score = -2.0f64; // below any valid AUROC and the -1 fallback
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..n_train).collect();
        root.fork(&format!("epoch{epoch}/shuffle")).shuffle(&mut order);
        let mut outlier_rng = root.fork(&format!("epoch{epoch}/outliers"));

        let mut sums = [0.0f64; 4]; // l_cls, l_outlier, l_acl, total
        for chunk in order.chunks(cfg.batch_size) {
            let (x, labels) = gather_rows(&data.train, chunk);
            let record = forward(&x, &params)?;

            let mut outliers = OutlierBatch::empty();
            if let Some(kind) = cfg.synthesizer {
                let n_out = (cfg.outlier_ratio * chunk.len() as f64).round() as usize;
                let shared_n_swap = if cfg.n_swap_per_batch && n_out > 0 {
                    Some(outlier_rng.uniform_usize(cfg.swap.n_min, cfg.swap.n_max)?)
                } else {
                    None
                };
                for j in 0..n_out {
                    let row = j % chunk.len();
                    let emb_rows: Vec<&[T]> =
                        record.emb.iter().map(|e| e.row(row)).collect();
                    let outlier = synthesize(
                        kind,
                        &emb_rows,
                        labels[row],
                        dims.classes,
                        &cfg.swap,
                        &mut outlier_rng,
                        shared_n_swap,
                    )?;
                    outliers.push(row, outlier);
                }
            }

            let (breakdown, grads) =
                total_loss_with_record(&x, &labels, &record, &outliers, &params, &cfg.loss)?;
            let total = breakdown.total.to_f64().unwrap_or(f64::NAN);
            if !total.is_finite() {
                return Err(AcrError::Diverged {
                    epoch,
                    reason: format!("non-finite loss {total}"),
                });
            }
            let w = chunk.len() as f64;
            sums[0] += breakdown.l_cls.to_f64().unwrap_or(f64::NAN) * w;
            sums[1] += breakdown.l_outlier.to_f64().unwrap_or(f64::NAN) * w;
            sums[2] += breakdown.l_acl.to_f64().unwrap_or(f64::NAN) * w;
            sums[3] += total * w;

            adam.step(&mut params.flatten_mut(), &grads.tensors)?;
        }

        let val = evaluate_model(
            &params,
            &data.val,
            &cfg.scorer,
            cfg.renormalize_scores,
        )?;
        let stats = EpochStats {
            epoch,
            l_cls: sums[0] / n_train as f64,
            l_outlier: sums[1] / n_train as f64,
            l_acl: sums[2] / n_train as f64,
            l_total: sums[3] / n_train as f64,
            val_auroc: val.report.auroc,
            val_acc: val.report.acc,
        };
        let score = stats.val_auroc.unwrap_or(-1.0);
        if score > best_score {
            best_score = score;
            best_params = params.clone();
            best_epoch = epoch;
        }
        history.push(stats);
    }

    Ok(TrainResult { params: best_params, best_epoch, history })
}
