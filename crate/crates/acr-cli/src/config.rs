//! Experiment configuration: one JSON document in which every field has a
//! default, so `acr train --method acr` runs the reference benchmark out of
//! the box.

use crate::error::{CliError, CliResult};
use acr_core::mfs::{SwapConfig, SynthesizerKind};
use acr_core::model::{LossConfig, ModelDims, TrainConfig};
use acr_core::numerics::AdamConfig;
use acr_core::scores::ScorerSpec;
use acr_core::synth::SynthConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Training arm: which loss components are active and which synthesizer
/// feeds the outlier term. The three augmentation arms keep the adaptive
/// confidence loss on, so they differ from the full method only in the
/// synthesizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Baseline,
    Acr,
    AclOnly,
    MfsOnly,
    RandomNoise,
    RandomDrop,
    FeatureMix,
}

impl Method {
    pub fn from_name(name: &str) -> CliResult<Self> {
        match name {
            "baseline" => Ok(Self::Baseline),
            "acr" => Ok(Self::Acr),
            "acl_only" => Ok(Self::AclOnly),
            "mfs_only" => Ok(Self::MfsOnly),
            "random_noise" => Ok(Self::RandomNoise),
            "random_drop" => Ok(Self::RandomDrop),
            "feature_mix" => Ok(Self::FeatureMix),
            other => Err(CliError::usage(format!(
                "unknown method '{other}' (expected baseline|acr|acl_only|mfs_only|random_noise|random_drop|feature_mix)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Baseline => "baseline",
            Self::Acr => "acr",
            Self::AclOnly => "acl_only",
            Self::MfsOnly => "mfs_only",
            Self::RandomNoise => "random_noise",
            Self::RandomDrop => "random_drop",
            Self::FeatureMix => "feature_mix",
        }
    }

    /// Effective ACL weight multiplier and synthesizer for this arm.
    fn components(&self) -> (bool, Option<SynthesizerKind>) {
        match self {
            Self::Baseline => (false, None),
            Self::Acr => (true, Some(SynthesizerKind::Mfs)),
            Self::AclOnly => (true, None),
            Self::MfsOnly => (false, Some(SynthesizerKind::Mfs)),
            Self::RandomNoise => (true, Some(SynthesizerKind::RandomNoise)),
            Self::RandomDrop => (true, Some(SynthesizerKind::RandomDrop)),
            Self::FeatureMix => (true, Some(SynthesizerKind::FeatureMix)),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    // Dataset.
    pub classes: usize,
    pub modalities: usize,
    pub d_in: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub sigma: f64,
    pub rho_conflict: f64,
    pub rho_noise: f64,
    pub seed: u64,
    // Model.
    pub d_e: usize,
    // Method and losses.
    pub method: String,
    pub lambda_acl: f64,
    pub w_uni: f64,
    pub detach_outliers: bool,
    pub renormalize_over_c: bool,
    // Outlier synthesis.
    pub n_min: usize,
    pub n_max: usize,
    pub outlier_ratio: f64,
    pub n_swap_per_batch: bool,
    // Optimization.
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    // Scoring and reporting.
    pub scorer: String,
    pub bins: usize,
    // Distribution-shift study; modality is 1-based.
    pub shift_sigma: Option<f64>,
    pub shift_modality: usize,
    // Sweep.
    pub seeds: Vec<u64>,
    pub methods: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            classes: 6,
            modalities: 2,
            d_in: 16,
            n_train: 2000,
            n_val: 500,
            n_test: 1000,
            sigma: 1.2,
            rho_conflict: 0.25,
            rho_noise: 0.1,
            seed: 0,
            d_e: 256,
            method: "acr".to_string(),
            lambda_acl: 2.0,
            w_uni: 0.5,
            detach_outliers: false,
            renormalize_over_c: false,
            n_min: 32,
            n_max: 256,
            outlier_ratio: 1.0,
            n_swap_per_batch: false,
            epochs: 50,
            lr: 1e-4,
            batch_size: 16,
            scorer: "msp".to_string(),
            bins: 20,
            shift_sigma: None,
            shift_modality: 1,
            seeds: vec![0],
            methods: vec!["baseline".to_string(), "acr".to_string()],
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn method(&self) -> CliResult<Method> {
        Method::from_name(&self.method)
    }

    pub fn scorer_spec(&self) -> CliResult<ScorerSpec> {
        Ok(ScorerSpec::from_name(&self.scorer)?)
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            classes: self.classes,
            modalities: self.modalities,
            d_in: self.d_in,
            n_train: self.n_train,
            n_val: self.n_val,
            n_test: self.n_test,
            sigma: self.sigma,
            rho_conflict: self.rho_conflict,
            rho_noise: self.rho_noise,
            seed: self.seed,
        }
    }

    pub fn model_dims(&self) -> ModelDims {
        ModelDims {
            modalities: self.modalities,
            d_in: self.d_in,
            d_e: self.d_e,
            classes: self.classes,
        }
    }

    /// Builds the trainer configuration for this config's method arm.
    pub fn train_config(&self) -> CliResult<TrainConfig<f64>> {
        let (acl_on, synthesizer) = self.method()?.components();
        Ok(TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            adam: AdamConfig::with_lr(self.lr),
            loss: LossConfig {
                lambda_acl: if acl_on { self.lambda_acl } else { 0.0 },
                w_uni: self.w_uni,
                detach_outliers: self.detach_outliers,
                renormalize_conf: self.renormalize_over_c,
            },
            swap: SwapConfig { n_min: self.n_min, n_max: self.n_max },
            synthesizer,
            outlier_ratio: self.outlier_ratio,
            n_swap_per_batch: self.n_swap_per_batch,
            scorer: self.scorer_spec()?,
            renormalize_scores: self.renormalize_over_c,
        })
    }

    /// 0-based shift modality, validating the 1-based config value.
    pub fn shift_modality_index(&self) -> CliResult<usize> {
        if self.shift_modality == 0 || self.shift_modality > self.modalities {
            return Err(CliError::usage(format!(
                "shift_modality must lie in [1, {}], got {}",
                self.modalities, self.shift_modality
            )));
        }
        Ok(self.shift_modality - 1)
    }
}
