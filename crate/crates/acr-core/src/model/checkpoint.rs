//! Versioned JSON checkpoint: every weight tensor with a shape header, in the
//! canonical flatten order, stored as full-precision `f64` (shortest
//! round-trip decimals, so loading reproduces the exact bits).

use super::{ModelDims, ModelParams};
use crate::error::{AcrError, Result};
use crate::numerics::Matrix;
use crate::{real, Real};
use serde::{Deserialize, Serialize};
use std::path::Path;

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u32,
    modalities: usize,
    d_in: usize,
    d_e: usize,
    classes: usize,
    tensors: Vec<TensorEntry>,
}

pub fn save_checkpoint_str<T: Real>(params: &ModelParams<T>) -> String {
    let names = ModelParams::<T>::tensor_names(&params.dims);
    let tensors = params
        .flatten()
        .iter()
        .zip(names)
        .map(|(m, name)| TensorEntry {
            name,
            rows: m.rows(),
            cols: m.cols(),
            data: m.data().iter().map(|v| v.to_f64().expect("finite")).collect(),
        })
        .collect();
    let file = CheckpointFile {
        format_version: FORMAT_VERSION,
        modalities: params.dims.modalities,
        d_in: params.dims.d_in,
        d_e: params.dims.d_e,
        classes: params.dims.classes,
        tensors,
    };
    let mut text = serde_json::to_string_pretty(&file).expect("checkpoint serializes");
    text.push('\n');
    text
}

pub fn save_checkpoint<T: Real>(params: &ModelParams<T>, path: &Path) -> Result<()> {
    std::fs::write(path, save_checkpoint_str(params))?;
    Ok(())
}

pub fn load_checkpoint_str<T: Real>(text: &str) -> Result<ModelParams<T>> {
    let file: CheckpointFile = serde_json::from_str(text).map_err(|e| AcrError::Parse {
        line: e.line(),
        message: format!("bad checkpoint: {e}"),
    })?;
    if file.format_version != FORMAT_VERSION {
        return Err(AcrError::invalid_input(format!(
            "unsupported checkpoint format version {} (expected {FORMAT_VERSION})",
            file.format_version
        )));
    }
    let dims = ModelDims {
        modalities: file.modalities,
        d_in: file.d_in,
        d_e: file.d_e,
        classes: file.classes,
    };
    dims.validate()?;
    let names = ModelParams::<T>::tensor_names(&dims);
    if file.tensors.len() != names.len() {
        return Err(AcrError::invalid_input(format!(
            "checkpoint has {} tensors, expected {}",
            file.tensors.len(),
            names.len()
        )));
    }
    let mut tensors = Vec::with_capacity(file.tensors.len());
    for (entry, expected) in file.tensors.into_iter().zip(&names) {
        if &entry.name != expected {
            return Err(AcrError::invalid_input(format!(
                "checkpoint tensor '{}' where '{expected}' was expected",
                entry.name
            )));
        }
        let data: Vec<T> = entry.data.into_iter().map(real).collect();
        tensors.push(Matrix::from_vec(entry.rows, entry.cols, data)?);
    }
    let mut it = tensors.into_iter();
    let mut enc_w = Vec::new();
    let mut enc_b = Vec::new();
    for _ in 0..dims.modalities {
        enc_w.push(expect_shape(it.next(), dims.d_in, dims.d_e)?);
        enc_b.push(expect_shape(it.next(), 1, dims.d_e)?);
    }
    let mut uni_w = Vec::new();
    let mut uni_b = Vec::new();
    for _ in 0..dims.modalities {
        uni_w.push(expect_shape(it.next(), dims.d_e, dims.classes)?);
        uni_b.push(expect_shape(it.next(), 1, dims.classes)?);
    }
    let fuse_w = expect_shape(it.next(), dims.modalities * dims.d_e, dims.fused_outputs())?;
    let fuse_b = expect_shape(it.next(), 1, dims.fused_outputs())?;
    Ok(ModelParams { dims, enc_w, enc_b, uni_w, uni_b, fuse_w, fuse_b })
}

fn expect_shape<T: Real>(m: Option<Matrix<T>>, rows: usize, cols: usize) -> Result<Matrix<T>> {
    let m = m.ok_or_else(|| AcrError::invalid_input("checkpoint tensor list truncated"))?;
    if m.rows() != rows || m.cols() != cols {
        return Err(AcrError::shape_mismatch(format!(
            "checkpoint tensor is {}x{}, expected {rows}x{cols}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(m)
}

pub fn load_checkpoint<T: Real>(path: &Path) -> Result<ModelParams<T>> {
    load_checkpoint_str(&std::fs::read_to_string(path)?)
}
