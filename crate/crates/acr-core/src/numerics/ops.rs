//! Numerically stable softmax, log-sum-exp, and soft-label cross-entropy.

use super::Matrix;
use crate::error::{AcrError, Result};
use crate::Real;

/// Max-shifted softmax. Outputs are in `(0, 1]` and sum to 1.
pub fn softmax<T: Real>(v: &[T]) -> Result<Vec<T>> {
    if v.is_empty() {
        return Err(AcrError::invalid_input("softmax of an empty vector"));
    }
    if !v.iter().all(|x| x.is_finite()) {
        return Err(AcrError::invalid_input("softmax input must be finite"));
    }
    let max = v.iter().copied().fold(T::neg_infinity(), T::max);
    let mut out: Vec<T> = v.iter().map(|&x| (x - max).exp()).collect();
    let sum = out.iter().copied().fold(T::zero(), |a, b| a + b);
    for o in &mut out {
        *o = *o / sum;
    }
    Ok(out)
}

/// Row-wise softmax over a matrix of logits.
pub fn softmax_rows<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for r in 0..m.rows() {
        let probs = softmax(m.row(r))?;
        out.row_mut(r).copy_from_slice(&probs);
    }
    Ok(out)
}

/// `log Σ exp(vᵢ)` computed with a max shift so large logits cannot overflow.
pub fn logsumexp<T: Real>(v: &[T]) -> Result<T> {
    if v.is_empty() {
        return Err(AcrError::invalid_input("logsumexp of an empty vector"));
    }
    if !v.iter().all(|x| x.is_finite()) {
        return Err(AcrError::invalid_input("logsumexp input must be finite"));
    }
    let max = v.iter().copied().fold(T::neg_infinity(), T::max);
    let sum = v
        .iter()
        .map(|&x| (x - max).exp())
        .fold(T::zero(), |a, b| a + b);
    Ok(max + sum.ln())
}

/// `−Σ targetᵢ · ln probsᵢ` for a soft target distribution.
///
/// Equals the standard cross-entropy when `target` is one-hot. Entries of
/// `target` that are exactly zero contribute nothing.
pub fn cross_entropy_soft<T: Real>(probs: &[T], target: &[T]) -> Result<T> {
    if probs.len() != target.len() {
        return Err(AcrError::shape_mismatch(format!(
            "probs length {} vs target length {}",
            probs.len(),
            target.len()
        )));
    }
    if probs.iter().any(|&p| p <= T::zero()) {
        return Err(AcrError::invalid_input(
            "cross-entropy requires strictly positive probabilities",
        ));
    }
    let mut acc = T::zero();
    for (&p, &t) in probs.iter().zip(target) {
        if t != T::zero() {
            acc = acc - t * p.ln();
        }
    }
    Ok(acc)
}
