//! The multimodal network: per-modality encoders, unimodal heads, a fusion
//! head carrying one extra outlier class, all three loss terms with
//! hand-derived gradients, and the deterministic trainer.
//!
//! Architecture, smallest that exhibits the phenomena of interest:
//! `Eᵏ = √d_e · relu(xᵏWₖ + bₖ) / ‖relu(xᵏWₖ + bₖ)‖₂`, unimodal logits
//! `zᵏ = EᵏHₖ + cₖ` over `C` classes, fused logits `z = [E¹..E^M]H + c` over
//! `C+1` classes. The L2 normalization keeps the affine heads' logit scale
//! independent of input magnitude; without it a large-norm corrupted input
//! forces arbitrarily confident head outputs. The fused confidence is the
//! maximum of the fused softmax restricted to the first `C` entries (no
//! renormalization by default), consistent with inference.

mod checkpoint;
mod train;

pub use checkpoint::{load_checkpoint, load_checkpoint_str, save_checkpoint, save_checkpoint_str};
pub use train::{train, EpochStats, TrainConfig, TrainResult};

use crate::error::{AcrError, Result};
use crate::mfs::SynthesizedOutlier;
use crate::numerics::{softmax_rows, Matrix, RandomStream};
use crate::{real, Real};

/// Network dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelDims {
    pub modalities: usize,
    pub d_in: usize,
    pub d_e: usize,
    pub classes: usize,
}

impl ModelDims {
    pub fn validate(&self) -> Result<()> {
        if self.modalities == 0 || self.d_in == 0 || self.d_e == 0 || self.classes < 2 {
            return Err(AcrError::invalid_config(format!(
                "bad model dims: {self:?} (need modalities, d_in, d_e > 0 and classes >= 2)"
            )));
        }
        Ok(())
    }

    /// Fused-head output width: the real classes plus the outlier class.
    pub fn fused_outputs(&self) -> usize {
        self.classes + 1
    }
}

/// All weight tensors. The flatten order — encoder weight/bias per modality,
/// unimodal head weight/bias per modality, fusion weight/bias — is the
/// canonical order for gradients, Adam state, and checkpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub dims: ModelDims,
    pub enc_w: Vec<Matrix<T>>,
    pub enc_b: Vec<Matrix<T>>,
    pub uni_w: Vec<Matrix<T>>,
    pub uni_b: Vec<Matrix<T>>,
    pub fuse_w: Matrix<T>,
    pub fuse_b: Matrix<T>,
}

impl<T: Real> ModelParams<T> {
    /// Seeded initialization: weights uniform in ±1/√fan_in, biases zero.
    pub fn init(dims: ModelDims, rng: &RandomStream) -> Result<Self> {
        dims.validate()?;
        let mut stream = rng.fork("params");
        let mut uniform = |rows: usize, cols: usize, fan_in: usize| {
            let bound: T = real(1.0 / (fan_in as f64).sqrt());
            let two = real::<T>(2.0);
            let mut m = Matrix::zeros(rows, cols);
            for v in m.data_mut() {
                *v = (two * stream.unit::<T>() - T::one()) * bound;
            }
            m
        };
        let enc_w = (0..dims.modalities)
            .map(|_| uniform(dims.d_in, dims.d_e, dims.d_in))
            .collect();
        let uni_w = (0..dims.modalities)
            .map(|_| uniform(dims.d_e, dims.classes, dims.d_e))
            .collect();
        let fused_in = dims.modalities * dims.d_e;
        let fuse_w = uniform(fused_in, dims.fused_outputs(), fused_in);
        Ok(Self {
            dims,
            enc_w,
            enc_b: (0..dims.modalities).map(|_| Matrix::zeros(1, dims.d_e)).collect(),
            uni_w,
            uni_b: (0..dims.modalities)
                .map(|_| Matrix::zeros(1, dims.classes))
                .collect(),
            fuse_w,
            fuse_b: Matrix::zeros(1, dims.fused_outputs()),
        })
    }

    /// Tensor names in canonical flatten order.
    pub fn tensor_names(dims: &ModelDims) -> Vec<String> {
        let mut names = Vec::new();
        for k in 0..dims.modalities {
            names.push(format!("enc_w_{k}"));
            names.push(format!("enc_b_{k}"));
        }
        for k in 0..dims.modalities {
            names.push(format!("uni_w_{k}"));
            names.push(format!("uni_b_{k}"));
        }
        names.push("fuse_w".to_string());
        names.push("fuse_b".to_string());
        names
    }

    pub fn flatten(&self) -> Vec<&Matrix<T>> {
        let mut out = Vec::new();
        for k in 0..self.dims.modalities {
            out.push(&self.enc_w[k]);
            out.push(&self.enc_b[k]);
        }
        for k in 0..self.dims.modalities {
            out.push(&self.uni_w[k]);
            out.push(&self.uni_b[k]);
        }
        out.push(&self.fuse_w);
        out.push(&self.fuse_b);
        out
    }

    pub fn flatten_mut(&mut self) -> Vec<&mut Matrix<T>> {
        let mut out = Vec::new();
        let (enc_w, enc_b) = (&mut self.enc_w, &mut self.enc_b);
        for (w, b) in enc_w.iter_mut().zip(enc_b.iter_mut()) {
            out.push(w);
            out.push(b);
        }
        for (w, b) in self.uni_w.iter_mut().zip(self.uni_b.iter_mut()) {
            out.push(w);
            out.push(b);
        }
        out.push(&mut self.fuse_w);
        out.push(&mut self.fuse_b);
        out
    }
}

/// Gradient tensors in the canonical flatten order of [`ModelParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub tensors: Vec<Matrix<T>>,
}

impl<T: Real> Gradients<T> {
    fn zeros_like(params: &ModelParams<T>) -> Self {
        Self {
            tensors: params
                .flatten()
                .iter()
                .map(|m| Matrix::zeros(m.rows(), m.cols()))
                .collect(),
        }
    }
}

/// Everything the forward pass produces for one batch.
#[derive(Clone, Debug)]
pub struct ForwardRecord<T> {
    /// Embeddings as consumed by the heads (post-activation, L2 normalized),
    /// one `n × d_e` matrix per modality.
    pub emb: Vec<Matrix<T>>,
    /// Raw relu outputs before normalization, kept for backpropagation.
    pub relu: Vec<Matrix<T>>,
    /// Per-row L2 norms of the relu outputs.
    pub norms: Vec<Vec<T>>,
    /// Unimodal logits over `C`, one matrix per modality.
    pub uni_logits: Vec<Matrix<T>>,
    pub uni_probs: Vec<Matrix<T>>,
    /// Fused logits over `C+1`.
    pub fused_logits: Matrix<T>,
    pub fused_probs: Matrix<T>,
    /// Max of the fused softmax restricted to the first `C` entries.
    pub conf: Vec<T>,
    /// Argmax index behind `conf`, lowest index on ties.
    pub conf_idx: Vec<usize>,
    /// Total fused probability mass on the first `C` entries, for the
    /// renormalized confidence variant.
    pub conf_mass: Vec<T>,
    /// Per-modality unimodal confidences and their argmax indices.
    pub conf_uni: Vec<Vec<T>>,
    pub conf_uni_idx: Vec<Vec<usize>>,
}

impl<T: Real> ForwardRecord<T> {
    pub fn batch_len(&self) -> usize {
        self.conf.len()
    }

    pub fn modalities(&self) -> usize {
        self.emb.len()
    }

    /// Fused confidence used by the adaptive confidence loss: restricted by
    /// default, optionally renormalized over the first `C` entries.
    fn fused_conf(&self, i: usize, renormalize: bool) -> T {
        if renormalize {
            self.conf[i] / self.conf_mass[i]
        } else {
            self.conf[i]
        }
    }
}

fn argmax_prefix<T: Real>(row: &[T], upto: usize) -> (usize, T) {
    let mut best = 0;
    let mut best_val = row[0];
    for (j, &v) in row.iter().enumerate().take(upto).skip(1) {
        if v > best_val {
            best = j;
            best_val = v;
        }
    }
    (best, best_val)
}

/// Runs the network on per-modality feature matrices.
pub fn forward<T: Real>(x: &[Matrix<T>], params: &ModelParams<T>) -> Result<ForwardRecord<T>> {
    let dims = &params.dims;
    if x.len() != dims.modalities {
        return Err(AcrError::shape_mismatch(format!(
            "model has {} modalities, batch has {}",
            dims.modalities,
            x.len()
        )));
    }
    let n = x[0].rows();
    for (k, xk) in x.iter().enumerate() {
        if xk.cols() != dims.d_in || xk.rows() != n {
            return Err(AcrError::shape_mismatch(format!(
                "modality {k} is {}x{}, expected {n}x{}",
                xk.rows(),
                xk.cols(),
                dims.d_in
            )));
        }
    }
    if n == 0 {
        return Err(AcrError::invalid_input("forward on an empty batch"));
    }

    let scale: T = real((dims.d_e as f64).sqrt());
    let mut emb = Vec::with_capacity(dims.modalities);
    let mut relu = Vec::with_capacity(dims.modalities);
    let mut norms = Vec::with_capacity(dims.modalities);
    let mut uni_logits = Vec::with_capacity(dims.modalities);
    let mut uni_probs = Vec::with_capacity(dims.modalities);
    for k in 0..dims.modalities {
        let pre = x[k].matmul_add_bias(&params.enc_w[k], &params.enc_b[k])?;
        let raw = pre.map(|v| v.max(T::zero()));
        let mut e = raw.clone();
        let mut row_norms = Vec::with_capacity(n);
        for i in 0..n {
            let row = e.row_mut(i);
            let norm = row
                .iter()
                .fold(T::zero(), |a, &v| a + v * v)
                .sqrt();
            row_norms.push(norm);
            if norm > T::zero() {
                let factor = scale / norm;
                for v in row.iter_mut() {
                    *v = *v * factor;
                }
            }
        }
        let z = e.matmul_add_bias(&params.uni_w[k], &params.uni_b[k])?;
        uni_probs.push(softmax_rows(&z)?);
        uni_logits.push(z);
        emb.push(e);
        relu.push(raw);
        norms.push(row_norms);
    }
    let e_cat = Matrix::concat_cols(&emb.iter().collect::<Vec<_>>())?;
    let fused_logits = e_cat.matmul_add_bias(&params.fuse_w, &params.fuse_b)?;
    let fused_probs = softmax_rows(&fused_logits)?;

    let mut conf = Vec::with_capacity(n);
    let mut conf_idx = Vec::with_capacity(n);
    let mut conf_mass = Vec::with_capacity(n);
    for i in 0..n {
        let row = fused_probs.row(i);
        let (idx, val) = argmax_prefix(row, dims.classes);
        conf.push(val);
        conf_idx.push(idx);
        conf_mass.push(
            row[..dims.classes]
                .iter()
                .copied()
                .fold(T::zero(), |a, b| a + b),
        );
    }
    let mut conf_uni = Vec::with_capacity(dims.modalities);
    let mut conf_uni_idx = Vec::with_capacity(dims.modalities);
    for p in &uni_probs {
        let mut confs = Vec::with_capacity(n);
        let mut idxs = Vec::with_capacity(n);
        for i in 0..n {
            let (idx, val) = argmax_prefix(p.row(i), dims.classes);
            confs.push(val);
            idxs.push(idx);
        }
        conf_uni.push(confs);
        conf_uni_idx.push(idxs);
    }
    Ok(ForwardRecord {
        emb,
        relu,
        norms,
        uni_logits,
        uni_probs,
        fused_logits,
        fused_probs,
        conf,
        conf_idx,
        conf_mass,
        conf_uni,
        conf_uni_idx,
    })
}

/// Adaptive confidence loss for one sample: the mean hinge
/// `(1/M) Σₖ max(0, confₖ − conf)`. Zero iff the fused confidence dominates
/// every unimodal confidence.
pub fn acl_loss<T: Real>(conf: T, confs: &[T]) -> T {
    let mut acc = T::zero();
    for &c in confs {
        acc = acc + (c - conf).max(T::zero());
    }
    acc / real::<T>(confs.len() as f64)
}

/// Batch mean of [`acl_loss`] over a forward record.
pub fn acl_loss_batch<T: Real>(record: &ForwardRecord<T>, renormalize: bool) -> T {
    let n = record.batch_len();
    let m = record.modalities();
    let mut acc = T::zero();
    for i in 0..n {
        let conf = record.fused_conf(i, renormalize);
        let mut sample = T::zero();
        for k in 0..m {
            sample = sample + (record.conf_uni[k][i] - conf).max(T::zero());
        }
        acc = acc + sample / real::<T>(m as f64);
    }
    acc / real::<T>(n as f64)
}

/// Adds `scale` times the softmax-max derivative to a logit-gradient row:
/// `∂p_top/∂z_j = p_top (1[j = top] − p_j)`.
fn add_softmax_max_grad<T: Real>(grad_row: &mut [T], probs: &[T], top: usize, scale: T) {
    let p_top = probs[top];
    for (j, g) in grad_row.iter_mut().enumerate() {
        let indicator = if j == top { T::one() } else { T::zero() };
        *g = *g + scale * p_top * (indicator - probs[j]);
    }
}

/// Adds `scale` times the derivative of the renormalized restricted max,
/// `conf = p_top / Σ_{j<C} p_j`, with respect to the fused logits:
/// `∂conf/∂z_j = p_top (1[j = top]·s − p_j·1[j < C]) / s²`.
fn add_renorm_max_grad<T: Real>(
    grad_row: &mut [T],
    probs: &[T],
    top: usize,
    classes: usize,
    mass: T,
    scale: T,
) {
    let p_top = probs[top];
    for (j, g) in grad_row.iter_mut().enumerate() {
        let indicator = if j == top { T::one() } else { T::zero() };
        let restricted = if j < classes { probs[j] } else { T::zero() };
        *g = *g + scale * p_top * (indicator * mass - restricted) / (mass * mass);
    }
}

/// Gradient of the batch-mean adaptive confidence loss with respect to the
/// fused logits and each unimodal logit matrix.
///
/// Hinges exactly at equality take the inactive subgradient; argmax ties take
/// the lowest index. Gradients flow into both the fusion and the unimodal
/// branches.
pub fn acl_grad<T: Real>(
    record: &ForwardRecord<T>,
    renormalize: bool,
) -> (Matrix<T>, Vec<Matrix<T>>) {
    let n = record.batch_len();
    let m = record.modalities();
    let classes = record.uni_probs[0].cols();
    let inv_mn = T::one() / real::<T>((m * n) as f64);
    let mut d_fused = Matrix::zeros(n, record.fused_probs.cols());
    let mut d_uni: Vec<Matrix<T>> = (0..m).map(|_| Matrix::zeros(n, classes)).collect();
    for i in 0..n {
        let conf = record.fused_conf(i, renormalize);
        let mut active = 0usize;
        for k in 0..m {
            if record.conf_uni[k][i] > conf {
                active += 1;
                // ∂L/∂confₖ = 1/(M·n) through the unimodal softmax max.
                add_softmax_max_grad(
                    d_uni[k].row_mut(i),
                    record.uni_probs[k].row(i),
                    record.conf_uni_idx[k][i],
                    inv_mn,
                );
            }
        }
        if active > 0 {
            // ∂L/∂conf = −(#active)/(M·n) through the fused softmax max.
            let scale = -inv_mn * real::<T>(active as f64);
            if renormalize {
                add_renorm_max_grad(
                    d_fused.row_mut(i),
                    record.fused_probs.row(i),
                    record.conf_idx[i],
                    classes,
                    record.conf_mass[i],
                    scale,
                );
            } else {
                add_softmax_max_grad(
                    d_fused.row_mut(i),
                    record.fused_probs.row(i),
                    record.conf_idx[i],
                    scale,
                );
            }
        }
    }
    (d_fused, d_uni)
}

/// Synthesized outliers attached to the batch rows they were derived from.
#[derive(Clone, Debug, Default)]
pub struct OutlierBatch<T> {
    pub source_rows: Vec<usize>,
    pub outliers: Vec<SynthesizedOutlier<T>>,
}

impl<T: Real> OutlierBatch<T> {
    pub fn empty() -> Self {
        Self { source_rows: Vec::new(), outliers: Vec::new() }
    }

    pub fn push(&mut self, source_row: usize, outlier: SynthesizedOutlier<T>) {
        self.source_rows.push(source_row);
        self.outliers.push(outlier);
    }

    pub fn len(&self) -> usize {
        self.outliers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outliers.is_empty()
    }
}

/// Scalar weights of the total objective.
#[derive(Clone, Copy, Debug)]
pub struct LossConfig<T> {
    /// Weight of the adaptive confidence loss.
    pub lambda_acl: T,
    /// Weight of the unimodal cross-entropy terms inside the classification
    /// loss.
    pub w_uni: T,
    /// Stop gradients at the synthesized outlier embeddings instead of
    /// backpropagating through the encoders.
    pub detach_outliers: bool,
    /// Use the renormalized restricted fused confidence inside the adaptive
    /// confidence loss.
    pub renormalize_conf: bool,
}

impl<T: Real> Default for LossConfig<T> {
    fn default() -> Self {
        Self {
            lambda_acl: real(2.0),
            w_uni: real(0.5),
            detach_outliers: false,
            renormalize_conf: false,
        }
    }
}

/// The three loss terms and their weighted total.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossBreakdown<T> {
    pub l_cls: T,
    pub l_outlier: T,
    pub l_acl: T,
    pub total: T,
}

fn one_hot_ce_grad_rows<T: Real>(
    probs: &Matrix<T>,
    labels: &[usize],
    scale: T,
) -> Result<(T, Matrix<T>)> {
    // Returns (mean CE against one-hot labels, scaled softmax gradient).
    let n = probs.rows();
    let mut loss = T::zero();
    let mut grad = probs.clone();
    for (i, &y) in labels.iter().enumerate() {
        if y >= probs.cols() {
            return Err(AcrError::invalid_input(format!(
                "label {y} out of range for {} outputs",
                probs.cols()
            )));
        }
        loss = loss - probs.get(i, y).ln();
        let row = grad.row_mut(i);
        row[y] = row[y] - T::one();
    }
    grad.scale_assign(scale);
    Ok((loss / real(n as f64), grad))
}

/// Computes the full objective and its exact analytic gradients for a batch,
/// reusing an existing forward record.
pub fn total_loss_with_record<T: Real>(
    x: &[Matrix<T>],
    labels: &[usize],
    record: &ForwardRecord<T>,
    outliers: &OutlierBatch<T>,
    params: &ModelParams<T>,
    cfg: &LossConfig<T>,
) -> Result<(LossBreakdown<T>, Gradients<T>)> {
    let dims = &params.dims;
    let n = record.batch_len();
    if labels.len() != n {
        return Err(AcrError::shape_mismatch(format!(
            "{} labels for a batch of {n}",
            labels.len()
        )));
    }
    if cfg.lambda_acl < T::zero() {
        return Err(AcrError::invalid_input("lambda_acl must be non-negative"));
    }
    let inv_n = T::one() / real::<T>(n as f64);

    // Classification term: fused CE over C+1 plus weighted unimodal CE.
    let (fused_ce, mut d_fused_logits) =
        one_hot_ce_grad_rows(&record.fused_probs, labels, inv_n)?;
    let mut l_cls = fused_ce;
    let mut d_uni_logits: Vec<Matrix<T>> = Vec::with_capacity(dims.modalities);
    for k in 0..dims.modalities {
        let (uni_ce, grad) =
            one_hot_ce_grad_rows(&record.uni_probs[k], labels, cfg.w_uni * inv_n)?;
        l_cls = l_cls + cfg.w_uni * uni_ce;
        d_uni_logits.push(grad);
    }

    // Adaptive confidence term. Always reported; the gradient is applied only
    // for a nonzero weight so disabled components leave no numeric trace.
    let l_acl = acl_loss_batch(record, cfg.renormalize_conf);
    if cfg.lambda_acl != T::zero() {
        let (ga_fused, ga_uni) = acl_grad(record, cfg.renormalize_conf);
        d_fused_logits.add_scaled_assign(&ga_fused, cfg.lambda_acl)?;
        for (d, g) in d_uni_logits.iter_mut().zip(&ga_uni) {
            d.add_scaled_assign(g, cfg.lambda_acl)?;
        }
    }

    let mut grads = Gradients::zeros_like(params);
    let m = dims.modalities;
    // Gradient tensor layout: [enc_w_k, enc_b_k]*M, [uni_w_k, uni_b_k]*M,
    // fuse_w, fuse_b.
    let fuse_w_slot = 4 * m;
    let fuse_b_slot = 4 * m + 1;

    // Accumulated dL/dEᵏ from every head.
    let mut d_emb: Vec<Matrix<T>> = (0..m).map(|_| Matrix::zeros(n, dims.d_e)).collect();

    // Outlier term: soft-label CE of the fusion head on re-materialized
    // swapped embeddings.
    let mut l_outlier = T::zero();
    if !outliers.is_empty() {
        let n_out = outliers.len();
        if outliers.source_rows.len() != n_out {
            return Err(AcrError::shape_mismatch(
                "outlier batch rows and plans differ in length".to_string(),
            ));
        }
        let inv_out = T::one() / real::<T>(n_out as f64);
        let mut e_out: Vec<Matrix<T>> = (0..m).map(|_| Matrix::zeros(n_out, dims.d_e)).collect();
        let mut soft_labels = Matrix::zeros(n_out, dims.fused_outputs());
        for (j, (outlier, &row)) in outliers
            .outliers
            .iter()
            .zip(&outliers.source_rows)
            .enumerate()
        {
            if row >= n {
                return Err(AcrError::invalid_input(format!(
                    "outlier source row {row} out of range for batch of {n}"
                )));
            }
            if outlier.label.len() != dims.fused_outputs() {
                return Err(AcrError::shape_mismatch(format!(
                    "outlier label has {} entries, expected {}",
                    outlier.label.len(),
                    dims.fused_outputs()
                )));
            }
            let src_rows: Vec<&[T]> = (0..m).map(|k| record.emb[k].row(row)).collect();
            let materialized = outlier.plan.apply(&src_rows)?;
            for k in 0..m {
                e_out[k].row_mut(j).copy_from_slice(&materialized[k]);
            }
            soft_labels.row_mut(j).copy_from_slice(&outlier.label);
        }
        let e_out_cat = Matrix::concat_cols(&e_out.iter().collect::<Vec<_>>())?;
        let z_out = e_out_cat.matmul_add_bias(&params.fuse_w, &params.fuse_b)?;
        let p_out = softmax_rows(&z_out)?;
        let mut dz_out = p_out.clone();
        for j in 0..n_out {
            let label = soft_labels.row(j);
            for (p, &t) in p_out.row(j).iter().zip(label) {
                if t != T::zero() {
                    l_outlier = l_outlier - t * p.ln();
                }
            }
            for (g, &t) in dz_out.row_mut(j).iter_mut().zip(label) {
                *g = *g - t;
            }
        }
        l_outlier = l_outlier * inv_out;
        dz_out.scale_assign(inv_out);
        grads.tensors[fuse_w_slot].add_assign(&e_out_cat.transpose_matmul(&dz_out)?)?;
        grads.tensors[fuse_b_slot].add_assign(&dz_out.column_sums())?;
        if !cfg.detach_outliers {
            let d_eout_cat = dz_out.matmul_transpose(&params.fuse_w)?;
            for j in 0..n_out {
                let row = outliers.source_rows[j];
                let full = d_eout_cat.row(j);
                let grad_out: Vec<&[T]> = (0..m)
                    .map(|k| &full[k * dims.d_e..(k + 1) * dims.d_e])
                    .collect();
                let mut grad_src: Vec<Vec<T>> =
                    (0..m).map(|k| d_emb[k].row(row).to_vec()).collect();
                outliers.outliers[j].plan.route_gradients(&grad_out, &mut grad_src);
                for k in 0..m {
                    d_emb[k].row_mut(row).copy_from_slice(&grad_src[k]);
                }
            }
        }
    }

    // Fusion head on the in-distribution batch.
    let e_cat = Matrix::concat_cols(&record.emb.iter().collect::<Vec<_>>())?;
    grads.tensors[fuse_w_slot].add_assign(&e_cat.transpose_matmul(&d_fused_logits)?)?;
    grads.tensors[fuse_b_slot].add_assign(&d_fused_logits.column_sums())?;
    let d_ecat = d_fused_logits.matmul_transpose(&params.fuse_w)?;
    for k in 0..m {
        for i in 0..n {
            let src = &d_ecat.row(i)[k * dims.d_e..(k + 1) * dims.d_e];
            for (d, &v) in d_emb[k].row_mut(i).iter_mut().zip(src) {
                *d = *d + v;
            }
        }
    }

    // Unimodal heads.
    for k in 0..m {
        grads.tensors[2 * m + 2 * k]
            .add_assign(&record.emb[k].transpose_matmul(&d_uni_logits[k])?)?;
        grads.tensors[2 * m + 2 * k + 1].add_assign(&d_uni_logits[k].column_sums())?;
        d_emb[k].add_assign(&d_uni_logits[k].matmul_transpose(&params.uni_w[k])?)?;
    }

    // Encoders: back through the L2 normalization, then the relu mask
    // (subgradient 0 at exactly zero). With ê = s·e/r and g = dL/dê,
    // dL/de = (s/r)·g − (s·(e·g)/r³)·e; rows with r = 0 are all-zero relu
    // outputs whose mask kills the gradient anyway.
    let scale: T = real((dims.d_e as f64).sqrt());
    for k in 0..m {
        let mut d_pre = Matrix::zeros(n, dims.d_e);
        for i in 0..n {
            let r = record.norms[k][i];
            if r <= T::zero() {
                continue;
            }
            let raw = record.relu[k].row(i);
            let g = d_emb[k].row(i);
            let dot = raw
                .iter()
                .zip(g)
                .fold(T::zero(), |a, (&e, &gv)| a + e * gv);
            let lead = scale / r;
            let pull = scale * dot / (r * r * r);
            let out = d_pre.row_mut(i);
            for j in 0..dims.d_e {
                if raw[j] > T::zero() {
                    out[j] = lead * g[j] - pull * raw[j];
                }
            }
        }
        grads.tensors[2 * k].add_assign(&x[k].transpose_matmul(&d_pre)?)?;
        grads.tensors[2 * k + 1].add_assign(&d_pre.column_sums())?;
    }

    let total = l_cls + l_outlier + cfg.lambda_acl * l_acl;
    Ok((
        LossBreakdown { l_cls, l_outlier, l_acl, total },
        grads,
    ))
}

/// Computes the full objective and gradients from raw inputs.
pub fn total_loss<T: Real>(
    x: &[Matrix<T>],
    labels: &[usize],
    outliers: &OutlierBatch<T>,
    params: &ModelParams<T>,
    cfg: &LossConfig<T>,
) -> Result<(LossBreakdown<T>, Gradients<T>)> {
    let record = forward(x, params)?;
    total_loss_with_record(x, labels, &record, outliers, params, cfg)
}

/// Predicted label and MSP confidence per sample. The label is the argmax
/// over the first `C` entries of the fused softmax (lowest index on ties);
/// the outlier index is never emitted.
pub fn predict<T: Real>(x: &[Matrix<T>], params: &ModelParams<T>) -> Result<Vec<(usize, T)>> {
    let record = forward(x, params)?;
    Ok(record
        .conf_idx
        .iter()
        .zip(&record.conf)
        .map(|(&idx, &conf)| (idx, conf))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_dims() -> ModelDims {
        ModelDims { modalities: 2, d_in: 2, d_e: 3, classes: 3 }
    }

    #[test]
    fn zero_weights_give_uniform_fused_probs() {
        let dims = tiny_dims();
        let rng = RandomStream::new(0);
        let mut params: ModelParams<f64> = ModelParams::init(dims, &rng).unwrap();
        for tensor in params.flatten_mut() {
            for v in tensor.data_mut() {
                *v = 0.0;
            }
        }
        let x = vec![Matrix::from_vec(1, 2, vec![0.3, -0.7]).unwrap(); 2];
        let record = forward(&x, &params).unwrap();
        let c1 = dims.fused_outputs() as f64;
        for &p in record.fused_probs.row(0) {
            assert!((p - 1.0 / c1).abs() < 1e-12);
        }
        assert!((record.conf[0] - 1.0 / c1).abs() < 1e-12);
        assert_eq!(record.conf_idx[0], 0);
    }

    #[test]
    fn forward_matches_hand_computation() {
        // Single sample, two modalities, hand-evaluated tiny dims.
        let dims = ModelDims { modalities: 2, d_in: 2, d_e: 2, classes: 2 };
        let rng = RandomStream::new(0);
        let mut params: ModelParams<f64> = ModelParams::init(dims, &rng).unwrap();
        params.enc_w[0] = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        params.enc_w[1] = Matrix::from_vec(2, 2, vec![0.5, 0.0, 0.0, -1.0]).unwrap();
        params.enc_b[0] = Matrix::from_vec(1, 2, vec![0.0, 0.0]).unwrap();
        params.enc_b[1] = Matrix::from_vec(1, 2, vec![0.1, 0.2]).unwrap();
        params.uni_w[0] = Matrix::from_vec(2, 2, vec![1.0, -1.0, 0.5, 0.5]).unwrap();
        params.uni_w[1] = Matrix::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        params.uni_b[0] = Matrix::from_vec(1, 2, vec![0.0, 0.1]).unwrap();
        params.uni_b[1] = Matrix::from_vec(1, 2, vec![-0.1, 0.0]).unwrap();
        params.fuse_w = Matrix::from_vec(
            4,
            3,
            vec![
                0.2, -0.1, 0.0, //
                0.0, 0.3, -0.2, //
                0.1, 0.1, 0.1, //
                -0.3, 0.0, 0.2,
            ],
        )
        .unwrap();
        params.fuse_b = Matrix::from_vec(1, 3, vec![0.05, -0.05, 0.0]).unwrap();

        let x1 = Matrix::from_vec(1, 2, vec![1.0, -2.0]).unwrap();
        let x2 = Matrix::from_vec(1, 2, vec![2.0, 0.5]).unwrap();
        let record = forward(&[x1, x2], &params).unwrap();

        // Raw relu: [1, 0] and [1.1, 0]; both normalize to [√2, 0].
        let rt2 = 2.0f64.sqrt();
        assert_eq!(record.relu[0].row(0), &[1.0, 0.0]);
        assert!((record.relu[1].get(0, 0) - 1.1).abs() < 1e-12);
        assert!((record.emb[0].get(0, 0) - rt2).abs() < 1e-12);
        assert!((record.emb[1].get(0, 0) - rt2).abs() < 1e-12);
        assert_eq!(record.emb[0].get(0, 1), 0.0);
        // z1 = [√2·1, √2·(−1)] + [0, 0.1] = [√2, 0.1 − √2].
        assert!((record.uni_logits[0].get(0, 0) - rt2).abs() < 1e-12);
        assert!((record.uni_logits[0].get(0, 1) - (0.1 - rt2)).abs() < 1e-12);
        // Fused logits from concat [√2, 0, √2, 0]:
        //   √2·([0.2,−0.1,0] + [0.1,0.1,0.1]) + [0.05,−0.05,0].
        let z = record.fused_logits.row(0);
        assert!((z[0] - (0.3 * rt2 + 0.05)).abs() < 1e-12);
        assert!((z[1] + 0.05).abs() < 1e-12);
        assert!((z[2] - 0.1 * rt2).abs() < 1e-12);
        // conf = softmax max over the first two entries.
        let probs = crate::numerics::softmax(z).unwrap();
        assert!((record.conf[0] - probs[0]).abs() < 1e-12);
        assert_eq!(record.conf_idx[0], 0);
    }

    #[test]
    fn forward_batch_shapes() {
        let dims = tiny_dims();
        let params: ModelParams<f64> = ModelParams::init(dims, &RandomStream::new(1)).unwrap();
        let n = 5;
        let mut rng = RandomStream::new(2);
        let x: Vec<Matrix<f64>> = (0..2)
            .map(|_| {
                let data: Vec<f64> = (0..n * dims.d_in).map(|_| rng.normal()).collect();
                Matrix::from_vec(n, dims.d_in, data).unwrap()
            })
            .collect();
        let record = forward(&x, &params).unwrap();
        assert_eq!(record.batch_len(), n);
        assert_eq!(record.fused_probs.rows(), n);
        assert_eq!(record.fused_probs.cols(), 4);
        assert_eq!(record.uni_probs[0].rows(), n);
        assert_eq!(record.conf_uni.len(), 2);
        assert_eq!(record.conf_uni[0].len(), n);
    }

    #[test]
    fn acl_loss_examples() {
        assert!((acl_loss(0.8f64, &[0.9, 0.7]) - 0.05).abs() < 1e-12);
        assert_eq!(acl_loss(0.95, &[0.9, 0.7]), 0.0);
        assert!((acl_loss(0.5f64, &[0.6, 0.7, 0.4]) - 0.1).abs() < 1e-12);
        // Equality leaves the hinge inactive.
        assert_eq!(acl_loss(0.7, &[0.7, 0.7]), 0.0);
    }

    #[test]
    fn acl_loss_is_modality_permutation_invariant() {
        let confs = [0.81, 0.33, 0.91, 0.64];
        let perm = [0.91, 0.64, 0.81, 0.33];
        assert_eq!(acl_loss(0.7, &confs), acl_loss(0.7, &perm));
    }

    #[test]
    fn acl_grad_zero_when_hinge_inactive() {
        let dims = tiny_dims();
        let rng = RandomStream::new(5);
        let mut params: ModelParams<f64> = ModelParams::init(dims, &rng).unwrap();
        // Push the fused head strongly toward class 0 so conf is large.
        for v in params.fuse_b.data_mut() {
            *v = 0.0;
        }
        params.fuse_b.set(0, 0, 25.0);
        let x = vec![Matrix::from_vec(1, 2, vec![0.1, 0.2]).unwrap(); 2];
        let record = forward(&x, &params).unwrap();
        assert!(record.conf[0] > record.conf_uni[0][0]);
        assert!(record.conf[0] > record.conf_uni[1][0]);
        let (d_fused, d_uni) = acl_grad(&record, false);
        assert!(d_fused.data().iter().all(|&g| g == 0.0));
        assert!(d_uni.iter().all(|m| m.data().iter().all(|&g| g == 0.0)));
    }

    #[test]
    fn predict_restricts_to_real_classes() {
        let dims = tiny_dims();
        let rng = RandomStream::new(3);
        let mut params: ModelParams<f64> = ModelParams::init(dims, &rng).unwrap();
        // Make the outlier logit dominate; the label must still be < C.
        for v in params.fuse_b.data_mut() {
            *v = 0.0;
        }
        params.fuse_b.set(0, dims.classes, 30.0);
        let x = vec![Matrix::from_vec(1, 2, vec![0.4, -0.2]).unwrap(); 2];
        let picks = predict(&x, &params).unwrap();
        assert!(picks[0].0 < dims.classes);
    }

    #[test]
    fn loss_breakdown_total_is_component_sum() {
        let dims = tiny_dims();
        let params: ModelParams<f64> = ModelParams::init(dims, &RandomStream::new(7)).unwrap();
        let mut rng = RandomStream::new(8);
        let n = 4;
        let x: Vec<Matrix<f64>> = (0..2)
            .map(|_| {
                let data: Vec<f64> = (0..n * dims.d_in).map(|_| rng.normal()).collect();
                Matrix::from_vec(n, dims.d_in, data).unwrap()
            })
            .collect();
        let labels = vec![0, 1, 2, 0];
        let cfg = LossConfig::default();
        let (breakdown, _) =
            total_loss(&x, &labels, &OutlierBatch::empty(), &params, &cfg).unwrap();
        let sum = breakdown.l_cls + breakdown.l_outlier + cfg.lambda_acl * breakdown.l_acl;
        assert!((breakdown.total - sum).abs() < 1e-12);
        assert!(breakdown.l_outlier == 0.0);
        assert!(breakdown.l_cls > 0.0);
    }

    #[test]
    fn lambda_zero_and_no_outliers_reduce_to_plain_ce() {
        let dims = tiny_dims();
        let params: ModelParams<f64> = ModelParams::init(dims, &RandomStream::new(9)).unwrap();
        let x = vec![Matrix::from_vec(2, 2, vec![0.1, 0.4, -0.3, 0.9]).unwrap(); 2];
        let labels = vec![1, 2];
        let cfg = LossConfig { lambda_acl: 0.0, ..LossConfig::default() };
        let (breakdown, _) =
            total_loss(&x, &labels, &OutlierBatch::empty(), &params, &cfg).unwrap();
        assert_eq!(breakdown.total, breakdown.l_cls);
    }

    #[test]
    fn init_is_seed_deterministic_and_in_bounds() {
        let dims = tiny_dims();
        let a: ModelParams<f64> = ModelParams::init(dims, &RandomStream::new(11)).unwrap();
        let b: ModelParams<f64> = ModelParams::init(dims, &RandomStream::new(11)).unwrap();
        assert_eq!(a, b);
        let bound = 1.0 / (dims.d_in as f64).sqrt();
        assert!(a.enc_w[0].data().iter().all(|v| v.abs() <= bound));
        assert!(a.enc_b[0].data().iter().all(|&v| v == 0.0));
    }
}
