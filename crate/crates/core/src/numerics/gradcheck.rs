use crate::error::{Error, Result};

/// Central-difference gradient of `loss` at `params` with step `h`.
///
/// Each coordinate is perturbed in place and restored before the next.
pub fn finite_difference_gradient(
    mut loss: impl FnMut(&[f64]) -> f64,
    params: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("step h must be positive, got {h}")));
    }
    let mut theta = params.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let orig = theta[i];
        theta[i] = orig + h;
        let plus = loss(&theta);
        theta[i] = orig - h;
        let minus = loss(&theta);
        theta[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite("finite_difference_gradient loss"));
        }
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}
