use crate::error::{Error, Result};

use super::{Matrix, RngState};

/// Softmax with max subtraction. `-inf` entries are masked classes and map to 0.
pub fn stable_softmax(v: &[f64]) -> Result<Vec<f64>> {
    let max = masked_max(v)?;
    let mut out: Vec<f64> = v
        .iter()
        .map(|&x| {
            if x == f64::NEG_INFINITY {
                0.0
            } else {
                (x - max).exp()
            }
        })
        .collect();
    let sum: f64 = out.iter().sum();
    for o in &mut out {
        *o /= sum;
    }
    Ok(out)
}

/// `log softmax(v)[i]` for one index, computed as `v_i - max - ln Σ exp(v_j - max)`.
pub fn log_softmax_at(v: &[f64], i: usize) -> Result<f64> {
    let max = masked_max(v)?;
    let sum: f64 = v
        .iter()
        .filter(|&&x| x != f64::NEG_INFINITY)
        .map(|&x| (x - max).exp())
        .sum();
    Ok(v[i] - max - sum.ln())
}

fn masked_max(v: &[f64]) -> Result<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::FullyMaskedLogits);
    }
    Ok(max)
}

/// Lower-triangular factor of a (possibly jittered) symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    pub lower: Matrix,
    /// Diagonal jitter `λ` added before the successful factorization (0 if none).
    pub jitter: f64,
}

const SYMMETRY_TOL: f64 = 1e-9;
const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-2;

/// Cholesky factorization with escalating diagonal jitter.
///
/// Plain factorization is tried first. On failure `λ·I` is added with
/// `λ = 1e-10 · mean(diag S)`, multiplied by 10 per attempt, up to
/// `1e-2 · mean(diag S)`. An all-zero matrix factors to the zero matrix.
pub fn cholesky_factor(s: &Matrix) -> Result<CholeskyFactor> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch {
            expected: s.rows(),
            got: s.cols(),
        });
    }
    let asym = s.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let n = s.rows();
    if let Some(lower) = try_cholesky(s, 0.0) {
        return Ok(CholeskyFactor { lower, jitter: 0.0 });
    }
    if s.data().iter().all(|&v| v == 0.0) {
        return Ok(CholeskyFactor {
            lower: Matrix::zeros(n, n),
            jitter: 0.0,
        });
    }
    let mean_diag = s.trace() / n as f64;
    let max_jitter = JITTER_MAX * mean_diag;
    if mean_diag > 0.0 {
        let mut lambda = JITTER_START * mean_diag;
        // 1e-10 → 1e-2 is nine attempts; the bound check tolerates rounding in the ×10 chain.
        while lambda <= max_jitter * (1.0 + 1e-9) {
            if let Some(lower) = try_cholesky(s, lambda) {
                return Ok(CholeskyFactor {
                    lower,
                    jitter: lambda,
                });
            }
            lambda *= 10.0;
        }
    }
    Err(Error::NotFactorizable { max_jitter })
}

fn try_cholesky(s: &Matrix, jitter: f64) -> Option<Matrix> {
    let n = s.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = s[(j, j)] + jitter;
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !diag.is_finite() || diag <= 0.0 {
            return None;
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut acc = s[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = acc / ljj;
        }
    }
    Some(l)
}

/// Draws `mu + L z` with `z` standard normal; consumes exactly `mu.len()` Gaussian variates.
pub fn sample_mvn(mu: &[f64], lower: &Matrix, rng: &mut RngState) -> Result<Vec<f64>> {
    let d = mu.len();
    if lower.rows() != d || lower.cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: lower.rows(),
        });
    }
    let z: Vec<f64> = (0..d).map(|_| rng.gaussian()).collect();
    Ok((0..d)
        .map(|i| {
            let row = lower.row(i);
            mu[i] + row[..=i].iter().zip(&z).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect())
}
