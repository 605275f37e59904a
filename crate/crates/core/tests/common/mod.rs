#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A peaked softmax vector: exp of scaled Gaussian-ish noise, normalized.
pub fn softmax_frame(rng: &mut ChaCha8Rng, c: usize) -> Vec<f64> {
    let logits: Vec<f64> = (0..c)
        .map(|_| 4.0 * (rng.gen::<f64>() + rng.gen::<f64>() + rng.gen::<f64>() - 1.5))
        .collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = e.iter().sum();
    e.into_iter().map(|v| v / sum).collect()
}

pub fn softmax_stream(rng: &mut ChaCha8Rng, t: usize, c: usize) -> Vec<Vec<f64>> {
    (0..t).map(|_| softmax_frame(rng, c)).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
