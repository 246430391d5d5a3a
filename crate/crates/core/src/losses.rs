//! Logit-adjusted softmax cross-entropy.
//!
//! Every expert loss is `-log softmax(v + α·log p)[y]` for a class prior `p`:
//! `α = 0` is plain cross-entropy, `α = 1` the balanced softmax, `α = 2` the
//! inverse-distribution loss and `α = 3` the extra four-expert ablation member.
//! Absent classes (`p = 0`) get a `-inf` adjustment for `α > 0` and drop out of
//! the normalizer. For `α = 0` the adjustment is exactly zero everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{log_softmax_at, stable_softmax};

/// Class frequency distribution with a presence mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ClassPrior {
    p: Vec<f64>,
    present: Vec<bool>,
    log_p: Vec<f64>,
}

impl ClassPrior {
    /// Normalizes per-class counts. Zero-count classes are marked absent.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyCounts);
        }
        let p = counts.iter().map(|&n| n as f64 / total as f64).collect();
        Ok(Self::from_normalized(p))
    }

    /// Builds a prior from probabilities that already sum to one over present entries.
    pub fn from_probabilities(p: Vec<f64>) -> Result<Self> {
        if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidConfig(
                "prior entries must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = p.iter().sum();
        if sum == 0.0 {
            return Err(Error::EmptyCounts);
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("prior sums to {sum}, not 1")));
        }
        Ok(Self::from_normalized(p))
    }

    fn from_normalized(p: Vec<f64>) -> Self {
        let present: Vec<bool> = p.iter().map(|&x| x > 0.0).collect();
        let log_p = p
            .iter()
            .map(|&x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY })
            .collect();
        Self { p, present, log_p }
    }

    pub fn uniform(num_classes: usize) -> Self {
        Self::from_normalized(vec![1.0 / num_classes as f64; num_classes])
    }

    pub fn num_classes(&self) -> usize {
        self.p.len()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn present(&self) -> &[bool] {
        &self.present
    }

    pub fn is_present(&self, class: usize) -> bool {
        self.present[class]
    }

    pub fn log_probabilities(&self) -> &[f64] {
        &self.log_p
    }

    /// Normalized inverse-frequency prior `(1/p_i) / Σ_j (1/p_j)` over present classes.
    pub fn inverse(&self) -> ClassPrior {
        let inv: Vec<f64> = self
            .p
            .iter()
            .map(|&x| if x > 0.0 { 1.0 / x } else { 0.0 })
            .collect();
        let z: f64 = inv.iter().sum();
        Self::from_normalized(inv.into_iter().map(|x| x / z).collect())
    }
}

impl TryFrom<Vec<f64>> for ClassPrior {
    type Error = Error;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        ClassPrior::from_probabilities(p)
    }
}

impl From<ClassPrior> for Vec<f64> {
    fn from(prior: ClassPrior) -> Self {
        prior.p
    }
}

pub fn inverse_prior(prior: &ClassPrior) -> ClassPrior {
    prior.inverse()
}

/// Additive logit adjustment `α · log p`, exactly zero for `α = 0`.
pub fn adjustment_vector(prior: &ClassPrior, alpha: f64) -> Vec<f64> {
    if alpha == 0.0 {
        return vec![0.0; prior.num_classes()];
    }
    prior.log_p.iter().map(|&lp| alpha * lp).collect()
}

fn adjusted_logits(v: &[f64], y: usize, adj: &[f64]) -> Result<Vec<f64>> {
    if v.len() != adj.len() {
        return Err(Error::DimensionMismatch {
            expected: adj.len(),
            got: v.len(),
        });
    }
    if y >= adj.len() {
        return Err(Error::LabelOutOfRange {
            label: y,
            num_classes: adj.len(),
        });
    }
    if !adj[y].is_finite() {
        return Err(Error::MaskedTarget { class: y });
    }
    Ok(v.iter().zip(adj).map(|(a, b)| a + b).collect())
}

/// `-log softmax(v + adj)[y]`.
pub fn adjusted_loss(v: &[f64], y: usize, adj: &[f64]) -> Result<f64> {
    let z = adjusted_logits(v, y, adj)?;
    // rounding can leave a tiny negative value when the target dominates
    Ok((-log_softmax_at(&z, y)?).max(0.0))
}

/// `softmax(v + adj) - e_y`; masked classes get exactly 0.
pub fn adjusted_loss_grad(v: &[f64], y: usize, adj: &[f64]) -> Result<Vec<f64>> {
    let z = adjusted_logits(v, y, adj)?;
    let mut g = stable_softmax(&z)?;
    g[y] -= 1.0;
    Ok(g)
}

/// Loss value and logit gradient in one pass.
pub fn adjusted_loss_and_grad(v: &[f64], y: usize, adj: &[f64]) -> Result<(f64, Vec<f64>)> {
    let z = adjusted_logits(v, y, adj)?;
    let mut g = stable_softmax(&z)?;
    let loss = (-g[y].ln()).max(0.0);
    let loss = if loss.is_finite() {
        loss
    } else {
        -log_softmax_at(&z, y)?
    };
    g[y] -= 1.0;
    Ok((loss, g))
}

/// Bayes reweighting of a posterior between class priors: `q · p_src / p_tgt`, renormalized.
pub fn reweight_posterior(q: &[f64], p_src: &ClassPrior, p_tgt: &ClassPrior) -> Result<Vec<f64>> {
    let c = q.len();
    if p_src.num_classes() != c || p_tgt.num_classes() != c {
        return Err(Error::DimensionMismatch {
            expected: c,
            got: p_src.num_classes(),
        });
    }
    if p_src.present != p_tgt.present {
        return Err(Error::Inconsistent(
            "source and target priors have different supports".into(),
        ));
    }
    let w: Vec<f64> = (0..c)
        .map(|i| {
            if p_src.present[i] {
                q[i] * p_src.p[i] / p_tgt.p[i]
            } else {
                0.0
            }
        })
        .collect();
    let z: f64 = w.iter().sum();
    if !z.is_finite() || z <= 0.0 {
        return Err(Error::ZeroNormalizer);
    }
    Ok(w.into_iter().map(|x| x / z).collect())
}
