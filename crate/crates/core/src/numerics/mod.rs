//! Dense linear algebra and deterministic randomness shared by the rest of the crate.

mod linalg;
mod matrix;
mod rng;

pub use linalg::{cholesky_factor, log_softmax_at, sample_mvn, stable_softmax, CholeskyFactor};
pub use matrix::Matrix;
pub use rng::RngState;

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
