//! Softmax cross-entropy.

use crate::error::{Error, Result};

/// `log sum exp(z)` with the max shifted out.
pub fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(z);
    z.iter().map(|&v| (v - lse).exp()).collect()
}

/// `-log softmax(logits)[label]`.
pub fn loss_cross_entropy(logits: &[f64], label: usize) -> Result<f64> {
    if label >= logits.len() {
        return Err(Error::InvalidArgument(format!(
            "label {label} out of range for {} classes",
            logits.len()
        )));
    }
    Ok(log_sum_exp(logits) - logits[label])
}

/// Loss and `d loss / d logits = softmax - onehot`.
pub(crate) fn loss_and_grad(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let lse = log_sum_exp(logits);
    let mut g: Vec<f64> = logits.iter().map(|&v| (v - lse).exp()).collect();
    g[label] -= 1.0;
    (lse - logits[label], g)
}
