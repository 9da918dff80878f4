//! Straight-through Gumbel-softmax sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sparsify::gates::argmax;

/// Draws Gumbel noise `G` once and returns `(one_hot(argmax(l + G)),
/// softmax((l + G) / tau_g))`. Forward consumers use the one-hot vector and
/// backpropagate through the soft one.
pub fn gumbel_softmax_sample(logits: &[f64], tau_g: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gumbel_softmax_with(logits, tau_g, &mut rng)
}

pub(crate) fn gumbel_softmax_with<R: Rng>(logits: &[f64], tau_g: f64, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let perturbed: Vec<f64> = logits
        .iter()
        .map(|&l| {
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            l - (-u.ln()).ln()
        })
        .collect();
    let mut hard = vec![0.0; logits.len()];
    if let Some(j) = argmax(perturbed.iter().copied()) {
        hard[j] = 1.0;
    }
    (hard, softmax_scaled(&perturbed, tau_g))
}

fn softmax_scaled(z: &[f64], tau: f64) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::INFINITY {
        // all mass on the infinite entries
        let count = z.iter().filter(|&&v| v == f64::INFINITY).count() as f64;
        return z
            .iter()
            .map(|&v| if v == f64::INFINITY { 1.0 / count } else { 0.0 })
            .collect();
    }
    let e: Vec<f64> = z.iter().map(|&v| ((v - max) / tau).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}
