//! Bias-corrected Adam over a fixed-order list of parameter tensors.

use super::Matrix;
use crate::error::{AcrError, Result};
use crate::{real, Real};

#[derive(Clone, Copy, Debug)]
pub struct AdamConfig<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Real> AdamConfig<T> {
    pub fn with_lr(lr: T) -> Self {
        Self { lr, ..Self::default() }
    }
}

impl<T: Real> Default for AdamConfig<T> {
    fn default() -> Self {
        Self {
            lr: real(1e-4),
            beta1: real(0.9),
            beta2: real(0.999),
            epsilon: real(1e-8),
        }
    }
}

/// Per-tensor first/second moment accumulators plus the step counter.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    config: AdamConfig<T>,
    m: Vec<Matrix<T>>,
    v: Vec<Matrix<T>>,
    t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(config: AdamConfig<T>, params: &[&Matrix<T>]) -> Self {
        let m = params
            .iter()
            .map(|p| Matrix::zeros(p.rows(), p.cols()))
            .collect::<Vec<_>>();
        Self {
            config,
            v: m.clone(),
            m,
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn config(&self) -> &AdamConfig<T> {
        &self.config
    }

    /// One bias-corrected update. `params` and `grads` must match the shapes
    /// this state was created with, in the same order.
    pub fn step(&mut self, params: &mut [&mut Matrix<T>], grads: &[Matrix<T>]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(AcrError::shape_mismatch(format!(
                "adam state tracks {} tensors, got {} params / {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for ((p, g), acc) in params.iter().zip(grads).zip(&self.m) {
            if !p.same_shape(acc) || !g.same_shape(acc) {
                return Err(AcrError::shape_mismatch(
                    "adam param/grad shape differs from tracked state".to_string(),
                ));
            }
        }
        self.t += 1;
        let one = T::one();
        let AdamConfig { lr, beta1, beta2, epsilon } = self.config;
        let bc1 = one - beta1.powi(self.t as i32);
        let bc2 = one - beta2.powi(self.t as i32);
        for ((param, grad), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let p = param.data_mut();
            for i in 0..p.len() {
                let g = grad.data()[i];
                let mi = beta1 * m.data()[i] + (one - beta1) * g;
                let vi = beta2 * v.data()[i] + (one - beta2) * g * g;
                m.data_mut()[i] = mi;
                v.data_mut()[i] = vi;
                let m_hat = mi / bc1;
                let v_hat = vi / bc2;
                p[i] = p[i] - lr * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}
