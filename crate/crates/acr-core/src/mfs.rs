//! Outlier synthesis in embedding space: multimodal feature swapping for two
//! or more modalities, soft-label construction, and the feature-space
//! ablation baselines (random noise, random drop, feature mixing).
//!
//! Every synthesizer draws one `n_swap ~ U(n_min, n_max)` per synthesized
//! sample, perturbs exactly `n_swap` dimensions per modality, and labels the
//! result with the interpolation weight `λ = n_swap / n_max` between the true
//! class and the reserved outlier class. The perturbation is recorded as a
//! plan of per-dimension writes so the training loop can re-materialize the
//! outlier from live embeddings and route gradients back through the swap.

use crate::error::{AcrError, Result};
use crate::numerics::RandomStream;
use crate::{real, Real};

/// Bounds for the number of swapped dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SwapConfig {
    pub n_min: usize,
    pub n_max: usize,
}

impl Default for SwapConfig {
    fn default() -> Self {
        Self { n_min: 32, n_max: 256 }
    }
}

impl SwapConfig {
    pub fn validate(&self, d_e: usize) -> Result<()> {
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(AcrError::invalid_config(format!(
                "need 1 <= n_min <= n_max, got n_min={} n_max={}",
                self.n_min, self.n_max
            )));
        }
        if self.n_max > d_e {
            return Err(AcrError::invalid_config(format!(
                "n_max={} exceeds embedding width d_e={d_e}",
                self.n_max
            )));
        }
        Ok(())
    }
}

/// One overwrite of a destination dimension in a given modality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DimWrite<T> {
    /// Destination receives another modality's value at `src_dim`.
    CrossSwap {
        dst: usize,
        src_modality: usize,
        src_dim: usize,
    },
    /// Destination receives a fixed value (zero or frozen noise).
    Fill { dst: usize, value: T },
}

/// Per-modality overwrite lists; dimensions not mentioned keep their input
/// values.
#[derive(Clone, Debug, PartialEq)]
pub struct OutlierPlan<T> {
    pub writes: Vec<Vec<DimWrite<T>>>,
}

impl<T: Real> OutlierPlan<T> {
    pub fn modalities(&self) -> usize {
        self.writes.len()
    }

    /// Materializes the outlier embedding rows from source rows.
    pub fn apply(&self, rows: &[&[T]]) -> Result<Vec<Vec<T>>> {
        if rows.len() != self.writes.len() {
            return Err(AcrError::shape_mismatch(format!(
                "plan covers {} modalities, got {} rows",
                self.writes.len(),
                rows.len()
            )));
        }
        let mut out: Vec<Vec<T>> = rows.iter().map(|r| r.to_vec()).collect();
        for (k, writes) in self.writes.iter().enumerate() {
            for write in writes {
                match *write {
                    DimWrite::CrossSwap { dst, src_modality, src_dim } => {
                        out[k][dst] = rows[src_modality][src_dim];
                    }
                    DimWrite::Fill { dst, value } => {
                        out[k][dst] = value;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Routes output-side gradients back to the source embeddings: identity
    /// for untouched dimensions, cross-modal for swapped ones, and nothing
    /// for filled ones. `grad_out[k]` is dL/dẼᵏ; contributions accumulate
    /// into `grad_src[k]`.
    pub fn route_gradients(&self, grad_out: &[&[T]], grad_src: &mut [Vec<T>]) {
        for (k, writes) in self.writes.iter().enumerate() {
            let mut overridden = vec![false; grad_out[k].len()];
            for write in writes {
                let dst = match *write {
                    DimWrite::CrossSwap { dst, .. } | DimWrite::Fill { dst, .. } => dst,
                };
                overridden[dst] = true;
            }
            for (d, &g) in grad_out[k].iter().enumerate() {
                if !overridden[d] {
                    grad_src[k][d] = grad_src[k][d] + g;
                }
            }
            for write in writes {
                if let DimWrite::CrossSwap { dst, src_modality, src_dim } = *write {
                    grad_src[src_modality][src_dim] =
                        grad_src[src_modality][src_dim] + grad_out[k][dst];
                }
            }
        }
    }
}

/// A synthesized outlier: materialized embeddings, its soft label over the
/// `C+1` classes, the interpolation weight, and the reusable plan.
#[derive(Clone, Debug)]
pub struct SynthesizedOutlier<T> {
    pub embeddings: Vec<Vec<T>>,
    pub label: Vec<T>,
    pub lambda: T,
    pub plan: OutlierPlan<T>,
}

/// Soft label of length `classes + 1`: `1 − λ` on the true class, `λ` on the
/// reserved outlier index `classes`.
pub fn soft_label<T: Real>(lambda: T, y_true: usize, classes: usize) -> Result<Vec<T>> {
    if lambda < T::zero() || lambda > T::one() {
        return Err(AcrError::invalid_input(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    if y_true >= classes {
        return Err(AcrError::invalid_input(format!(
            "true class {y_true} out of range for {classes} classes"
        )));
    }
    let mut label = vec![T::zero(); classes + 1];
    label[y_true] = T::one() - lambda;
    label[classes] = lambda;
    Ok(label)
}

fn check_embeddings<T: Real>(embeddings: &[&[T]], cfg: &SwapConfig) -> Result<usize> {
    if embeddings.len() < 2 {
        return Err(AcrError::invalid_input(
            "feature swapping needs at least two modalities",
        ));
    }
    let d_e = embeddings[0].len();
    if embeddings.iter().any(|e| e.len() != d_e) {
        return Err(AcrError::shape_mismatch(
            "all modalities must share the embedding width".to_string(),
        ));
    }
    cfg.validate(d_e)?;
    Ok(d_e)
}

fn lambda_of<T: Real>(n_swap: usize, cfg: &SwapConfig) -> T {
    real::<T>(n_swap as f64) / real::<T>(cfg.n_max as f64)
}

/// Deterministic core of cyclic feature swapping with explicit block starts:
/// modality `k` receives the block of modality `k − 1 (mod M)`.
pub fn mfs_at<T: Real>(
    embeddings: &[&[T]],
    starts: &[usize],
    n_swap: usize,
    y_true: usize,
    classes: usize,
    cfg: &SwapConfig,
) -> Result<SynthesizedOutlier<T>> {
    let d_e = check_embeddings(embeddings, cfg)?;
    let m = embeddings.len();
    if starts.len() != m {
        return Err(AcrError::shape_mismatch(format!(
            "{} start indices for {m} modalities",
            starts.len()
        )));
    }
    if n_swap < cfg.n_min || n_swap > cfg.n_max {
        return Err(AcrError::invalid_input(format!(
            "n_swap={n_swap} outside [{}, {}]",
            cfg.n_min, cfg.n_max
        )));
    }
    if starts.iter().any(|&s| s + n_swap > d_e) {
        return Err(AcrError::invalid_input(
            "swap block exceeds the embedding width",
        ));
    }
    let mut writes = Vec::with_capacity(m);
    for k in 0..m {
        let src_modality = (k + m - 1) % m;
        let block: Vec<DimWrite<T>> = (0..n_swap)
            .map(|t| DimWrite::CrossSwap {
                dst: starts[k] + t,
                src_modality,
                src_dim: starts[src_modality] + t,
            })
            .collect();
        writes.push(block);
    }
    let plan = OutlierPlan { writes };
    let lambda = lambda_of(n_swap, cfg);
    Ok(SynthesizedOutlier {
        embeddings: plan.apply(embeddings)?,
        label: soft_label(lambda, y_true, classes)?,
        lambda,
        plan,
    })
}

fn draw_swap_geometry(
    rng: &mut RandomStream,
    modalities: usize,
    d_e: usize,
    cfg: &SwapConfig,
    n_swap: Option<usize>,
) -> Result<(usize, Vec<usize>)> {
    let n_swap = match n_swap {
        Some(n) => n,
        None => rng.uniform_usize(cfg.n_min, cfg.n_max)?,
    };
    let starts = (0..modalities)
        .map(|_| rng.uniform_usize(0, d_e - n_swap))
        .collect::<Result<Vec<_>>>()?;
    Ok((n_swap, starts))
}

/// Cyclic multimodal feature swapping over `M >= 2` modalities. Draw order:
/// `n_swap` first (unless supplied), then one start index per modality.
pub fn mfs_cyclic<T: Real>(
    embeddings: &[&[T]],
    y_true: usize,
    classes: usize,
    cfg: &SwapConfig,
    rng: &mut RandomStream,
    n_swap: Option<usize>,
) -> Result<SynthesizedOutlier<T>> {
    let d_e = check_embeddings(embeddings, cfg)?;
    let (n_swap, starts) = draw_swap_geometry(rng, embeddings.len(), d_e, cfg, n_swap)?;
    mfs_at(embeddings, &starts, n_swap, y_true, classes, cfg)
}

/// Two-modality feature swapping: each modality's block is replaced by the
/// other's.
pub fn mfs_two<T: Real>(
    e1: &[T],
    e2: &[T],
    y_true: usize,
    classes: usize,
    cfg: &SwapConfig,
    rng: &mut RandomStream,
) -> Result<SynthesizedOutlier<T>> {
    mfs_cyclic(&[e1, e2], y_true, classes, cfg, rng, None)
}

fn fill_baseline<T: Real>(
    embeddings: &[&[T]],
    y_true: usize,
    classes: usize,
    cfg: &SwapConfig,
    rng: &mut RandomStream,
    n_swap: Option<usize>,
    mut value: impl FnMut(&mut RandomStream) -> T,
) -> Result<SynthesizedOutlier<T>> {
    let d_e = check_embeddings(embeddings, cfg)?;
    let (n_swap, starts) = draw_swap_geometry(rng, embeddings.len(), d_e, cfg, n_swap)?;
    let writes = starts
        .iter()
        .map(|&s| {
            (0..n_swap)
                .map(|t| DimWrite::Fill { dst: s + t, value: value(rng) })
                .collect()
        })
        .collect();
    let plan = OutlierPlan { writes };
    let lambda = lambda_of(n_swap, cfg);
    Ok(SynthesizedOutlier {
        embeddings: plan.apply(embeddings)?,
        label: soft_label(lambda, y_true, classes)?,
        lambda,
        plan,
    })
}

/// Ablation baseline: the same block geometry as feature swapping, but the
/// selected dimensions are replaced by standard normal draws.
pub fn aug_random_noise<T: Real>(
    embeddings: &[&[T]],
    y_true: usize,
    classes: usize,
    cfg: &SwapConfig,
    rng: &mut RandomStream,
    n_swap: Option<usize>,
) -> Result<SynthesizedOutlier<T>> {
    fill_baseline(embeddings, y_true, classes, cfg, rng, n_swap, |rng| rng.normal())
}

/// Ablation baseline: selected dimensions are replaced by zeros.
pub fn aug_random_drop<T: Real>(
    embeddings: &[&[T]],
    y_true: usize,
    classes: usize,
    cfg: &SwapConfig,
    rng: &mut RandomStream,
    n_swap: Option<usize>,
) -> Result<SynthesizedOutlier<T>> {
    fill_baseline(embeddings, y_true, classes, cfg, rng, n_swap, |_| T::zero())
}

/// Ablation baseline: `n_swap` non-contiguous positions sampled per modality
/// without replacement, exchanged cyclically by draw-order pairing.
pub fn aug_feature_mix<T: Real>(
    embeddings: &[&[T]],
    y_true: usize,
    classes: usize,
    cfg: &SwapConfig,
    rng: &mut RandomStream,
    n_swap: Option<usize>,
) -> Result<SynthesizedOutlier<T>> {
    let d_e = check_embeddings(embeddings, cfg)?;
    let m = embeddings.len();
    let n_swap = match n_swap {
        Some(n) => n,
        None => rng.uniform_usize(cfg.n_min, cfg.n_max)?,
    };
    if n_swap > d_e {
        return Err(AcrError::invalid_input(format!(
            "n_swap={n_swap} exceeds embedding width {d_e}"
        )));
    }
    let index_sets: Vec<Vec<usize>> = (0..m)
        .map(|_| rng.sample_distinct(n_swap, d_e))
        .collect::<Result<Vec<_>>>()?;
    let mut writes = Vec::with_capacity(m);
    for k in 0..m {
        let src_modality = (k + m - 1) % m;
        let block: Vec<DimWrite<T>> = (0..n_swap)
            .map(|t| DimWrite::CrossSwap {
                dst: index_sets[k][t],
                src_modality,
                src_dim: index_sets[src_modality][t],
            })
            .collect();
        writes.push(block);
    }
    let plan = OutlierPlan { writes };
    let lambda = lambda_of(n_swap, cfg);
    Ok(SynthesizedOutlier {
        embeddings: plan.apply(embeddings)?,
        label: soft_label(lambda, y_true, classes)?,
        lambda,
        plan,
    })
}

/// The synthesizer selected by name in config.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthesizerKind {
    Mfs,
    RandomNoise,
    RandomDrop,
    FeatureMix,
}

impl SynthesizerKind {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "mfs" => Ok(Self::Mfs),
            "random_noise" => Ok(Self::RandomNoise),
            "random_drop" => Ok(Self::RandomDrop),
            "feature_mix" => Ok(Self::FeatureMix),
            other => Err(AcrError::invalid_config(format!(
                "unknown synthesizer '{other}' (expected mfs|random_noise|random_drop|feature_mix)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Mfs => "mfs",
            Self::RandomNoise => "random_noise",
            Self::RandomDrop => "random_drop",
            Self::FeatureMix => "feature_mix",
        }
    }
}

/// Dispatches to the named synthesizer; `n_swap` overrides the per-sample
/// draw when the caller shares one draw across a batch.
pub fn synthesize<T: Real>(
    kind: SynthesizerKind,
    embeddings: &[&[T]],
    y_true: usize,
    classes: usize,
    cfg: &SwapConfig,
    rng: &mut RandomStream,
    n_swap: Option<usize>,
) -> Result<SynthesizedOutlier<T>> {
    match kind {
        SynthesizerKind::Mfs => mfs_cyclic(embeddings, y_true, classes, cfg, rng, n_swap),
        SynthesizerKind::RandomNoise => {
            aug_random_noise(embeddings, y_true, classes, cfg, rng, n_swap)
        }
        SynthesizerKind::RandomDrop => {
            aug_random_drop(embeddings, y_true, classes, cfg, rng, n_swap)
        }
        SynthesizerKind::FeatureMix => {
            aug_feature_mix(embeddings, y_true, classes, cfg, rng, n_swap)
        }
    }
}
