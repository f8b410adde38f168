use crate::error::{NnError, Result};
use crate::tensor::Tensor;

/// Mean-squared error over all elements.
///
/// Returns (loss, gradient wrt `pred`): loss = mean((pred - target)^2),
/// grad = 2 (pred - target) / N.
pub fn mse(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if pred.shape != target.shape {
        return Err(NnError::ShapeMismatch {
            location: "mse".into(),
            expected: target.shape.clone(),
            got: pred.shape.clone(),
        });
    }
    let n = pred.len() as f64;
    let mut grad = pred.zeros_like();
    let mut loss = 0.0;
    for i in 0..pred.len() {
        let d = pred.data[i] - target.data[i];
        loss += d * d;
        grad.data[i] = 2.0 * d / n;
    }
    Ok((loss / n, grad))
}

/// Sum of squared differences (squared L2 norm of the residual) and its
/// gradient wrt `pred`: grad = 2 (pred - target).
pub fn sum_squared_error(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if pred.shape != target.shape {
        return Err(NnError::ShapeMismatch {
            location: "sum_squared_error".into(),
            expected: target.shape.clone(),
            got: pred.shape.clone(),
        });
    }
    let mut grad = pred.zeros_like();
    let mut loss = 0.0;
    for i in 0..pred.len() {
        let d = pred.data[i] - target.data[i];
        loss += d * d;
        grad.data[i] = 2.0 * d;
    }
    Ok((loss, grad))
}
