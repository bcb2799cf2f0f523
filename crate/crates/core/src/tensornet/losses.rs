//! Batch-mean losses returning `(value, gradient w.r.t. the prediction)`.

use super::{NetError, Tensor};

/// Probabilities are clipped from below at this value before the log.
pub const PROB_CLIP: f64 = 1e-12;

/// Mean squared error over every element.
pub fn mse(pred: &Tensor, target: &[f64]) -> Result<(f64, Tensor), NetError> {
    if pred.len() != target.len() {
        return Err(NetError::ShapeMismatch {
            expected: pred.shape().to_vec(),
            got: vec![target.len()],
        });
    }
    let n = pred.len().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(pred.len());
    for (p, t) in pred.data().iter().zip(target) {
        let d = p - t;
        loss += d * d;
        grad.push(2.0 * d / n);
    }
    Ok((loss / n, Tensor::from_vec(pred.shape(), grad)?))
}

/// Categorical cross-entropy on softmax rows `[batch, classes]`, averaged
/// over the batch. Below the clip the gradient is zero.
pub fn cross_entropy(probs: &Tensor, labels: &[usize]) -> Result<(f64, Tensor), NetError> {
    let (b, k) = match *probs.shape() {
        [b, k] => (b, k),
        _ => {
            return Err(NetError::ShapeMismatch {
                expected: vec![labels.len(), 0],
                got: probs.shape().to_vec(),
            })
        }
    };
    if b != labels.len() {
        return Err(NetError::ShapeMismatch {
            expected: vec![labels.len(), k],
            got: probs.shape().to_vec(),
        });
    }
    let n = b.max(1) as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; b * k];
    for (i, &c) in labels.iter().enumerate() {
        if c >= k {
            return Err(NetError::LabelOutOfRange { label: c, classes: k });
        }
        let p = probs.data()[i * k + c];
        if p > PROB_CLIP {
            loss -= p.ln();
            grad[i * k + c] = -1.0 / (n * p);
        } else {
            loss -= PROB_CLIP.ln();
        }
    }
    Ok((loss / n, Tensor::from_vec(probs.shape(), grad)?))
}
