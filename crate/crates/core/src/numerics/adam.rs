use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment accumulators for one parameter matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub first_moment: DenseMatrix,
    pub second_moment: DenseMatrix,
    pub step: u64,
    pub params: AdamParams,
}

impl AdamState {
    pub fn new(rows: usize, cols: usize, params: AdamParams) -> Self {
        Self {
            first_moment: DenseMatrix::zeros(rows, cols),
            second_moment: DenseMatrix::zeros(rows, cols),
            step: 0,
            params,
        }
    }

    pub fn reset(&mut self) {
        let (r, c) = self.first_moment.shape();
        *self = Self::new(r, c, self.params);
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut DenseMatrix, grads: &DenseMatrix, state: &mut AdamState) -> Result<()> {
    if params.shape() != grads.shape() {
        return Err(Error::dims("adam_step", params.shape(), grads.shape()));
    }
    if state.first_moment.shape() != params.shape() {
        return Err(Error::dims(
            "adam_step",
            params.shape(),
            state.first_moment.shape(),
        ));
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("adam_step gradient"));
    }
    state.step += 1;
    let AdamParams {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.params;
    let t = state.step as i32;
    let bias1 = 1.0 - beta1.powi(t);
    let bias2 = 1.0 - beta2.powi(t);
    let m = state.first_moment.values_mut();
    let v = state.second_moment.values_mut();
    for (((p, &g), m), v) in params
        .values_mut()
        .iter_mut()
        .zip(grads.values())
        .zip(m.iter_mut())
        .zip(v.iter_mut())
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
    }
    Ok(())
}
