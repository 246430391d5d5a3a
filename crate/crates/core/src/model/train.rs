//! Stage-1 expert training and stage-2 selector training.

use serde::{Deserialize, Serialize};

use crate::data::{DomainTask, FeatureRecord};
use crate::error::{Error, Result};
use crate::losses::{adjusted_loss_and_grad, adjustment_vector, ClassPrior};
use crate::numerics::{stable_softmax, RngState};

use super::{cosine_lr, hidden_width, init_mlp, MlpParams, Sgd};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr0: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs_stage1: usize,
    pub epochs_stage2: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr0: 0.01,
            momentum: 0.9,
            batch_size: 128,
            epochs_stage1: 20,
            epochs_stage2: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.lr0.is_finite() || self.lr0 <= 0.0 {
            return Err(Error::InvalidConfig("lr0 must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig("momentum must lie in [0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be ≥ 1".into()));
        }
        if self.epochs_stage1 == 0 || self.epochs_stage2 == 0 {
            return Err(Error::InvalidConfig("epoch counts must be positive".into()));
        }
        Ok(())
    }
}

/// How selector outputs become fusion weights.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    /// `w = softmax(s(x))`: non-negative weights summing to one.
    #[default]
    Softmax,
    /// `w = s(x)` used as-is.
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expert {
    pub params: MlpParams,
    pub alpha: f64,
    /// 1-based index of the domain the expert was trained on.
    pub task: usize,
    pub prior: ClassPrior,
}

impl Expert {
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.params.forward(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selector {
    pub params: MlpParams,
    pub fusion: FusionMode,
}

impl Selector {
    pub fn output_dim(&self) -> usize {
        self.params.output_dim()
    }

    pub fn weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        let raw = self.params.forward(x)?;
        match self.fusion {
            FusionMode::Softmax => stable_softmax(&raw),
            FusionMode::Raw => Ok(raw),
        }
    }

    /// `Σ_i w_i(x) · e_i(x)` over the pool.
    pub fn fuse(&self, pool: &[Expert], x: &[f64]) -> Result<Vec<f64>> {
        if pool.is_empty() {
            return Err(Error::EmptyPool);
        }
        if pool.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                got: pool.len(),
            });
        }
        let w = self.weights(x)?;
        let logits = pool
            .iter()
            .map(|e| e.logits(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(combine(&w, &logits))
    }
}

fn combine(weights: &[f64], logits: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; logits[0].len()];
    for (w, l) in weights.iter().zip(logits) {
        for (o, v) in out.iter_mut().zip(l) {
            *o += w * v;
        }
    }
    out
}

/// One network and its fixed logit adjustment, trained with its own optimizer state.
pub struct Head {
    pub params: MlpParams,
    pub adjustment: Vec<f64>,
}

/// Trains several heads on the same data with a shared shuffled batch order.
///
/// Every head gets its own momentum buffer and the cosine schedule restarts at `lr0`.
pub fn fit_heads(
    heads: &mut [Head],
    data: &[FeatureRecord],
    cfg: &TrainConfig,
    rng: &mut RngState,
) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset("training set"));
    }
    let mut opts: Vec<Sgd> = heads
        .iter()
        .map(|h| Sgd::new(&h.params, cfg.momentum))
        .collect();
    let epochs = cfg.epochs_stage1;
    for epoch in 0..epochs {
        let lr = cosine_lr(epoch, epochs, cfg.lr0);
        let order = rng.permutation(data.len());
        for batch in order.chunks(cfg.batch_size) {
            let scale = 1.0 / batch.len() as f64;
            for (head, opt) in heads.iter_mut().zip(&mut opts) {
                let mut grad = head.params.zeros_like();
                for &i in batch {
                    let rec = &data[i];
                    let act = head.params.activations(&rec.features)?;
                    let (_, g) = adjusted_loss_and_grad(&act.logits, rec.label, &head.adjustment)?;
                    head.params
                        .accumulate_grad(&rec.features, &act, &g, scale, &mut grad);
                }
                opt.step(&mut head.params, &grad, lr);
            }
        }
    }
    Ok(())
}

/// Trains one expert per entry of `alphas` on the task's training set.
///
/// Experts are initialized in `alphas` order from `rng`, then share the batch order.
pub fn train_expert_group(
    task: &DomainTask,
    cfg: &TrainConfig,
    alphas: &[f64],
    rng: &mut RngState,
) -> Result<Vec<Expert>> {
    cfg.validate()?;
    if alphas.is_empty() {
        return Err(Error::InvalidConfig("alphas must not be empty".into()));
    }
    if task.train.is_empty() {
        return Err(Error::EmptyDataset("domain training set"));
    }
    let prior = task.prior()?;
    let d = task.train.dim();
    let c = task.train.num_classes();
    let mut heads: Vec<Head> = alphas
        .iter()
        .map(|&alpha| Head {
            params: init_mlp(rng, d, hidden_width(d), c),
            adjustment: adjustment_vector(&prior, alpha),
        })
        .collect();
    fit_heads(&mut heads, task.train.records(), cfg, rng)?;
    Ok(heads
        .into_iter()
        .zip(alphas)
        .map(|(h, &alpha)| Expert {
            params: h.params,
            alpha,
            task: task.index,
            prior: prior.clone(),
        })
        .collect())
}

/// Trains a freshly initialized selector over the frozen pool on `data`.
///
/// Expert logits are computed once up front; only selector parameters change.
pub fn train_selector(
    data: &[FeatureRecord],
    pool: &[Expert],
    cfg: &TrainConfig,
    fusion: FusionMode,
    rng: &mut RngState,
) -> Result<Selector> {
    cfg.validate()?;
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset("synthetic set"));
    }
    let d = data[0].features.len();
    let expert_logits: Vec<Vec<Vec<f64>>> = data
        .iter()
        .map(|r| pool.iter().map(|e| e.logits(&r.features)).collect())
        .collect::<Result<_>>()?;

    let p = pool.len();
    let mut params = init_mlp(rng, d, hidden_width(d), p);
    let mut opt = Sgd::new(&params, cfg.momentum);
    let epochs = cfg.epochs_stage2;
    for epoch in 0..epochs {
        let lr = cosine_lr(epoch, epochs, cfg.lr0);
        let order = rng.permutation(data.len());
        for batch in order.chunks(cfg.batch_size) {
            let scale = 1.0 / batch.len() as f64;
            let mut grad = params.zeros_like();
            for &i in batch {
                let rec = &data[i];
                let act = params.activations(&rec.features)?;
                let (_, upstream) =
                    selector_loss_and_grad(&act.logits, &expert_logits[i], rec.label, fusion)?;
                params.accumulate_grad(&rec.features, &act, &upstream, scale, &mut grad);
            }
            opt.step(&mut params, &grad, lr);
        }
    }
    Ok(Selector { params, fusion })
}

/// Cross-entropy of the fused logits and its gradient with respect to the selector outputs.
pub fn selector_loss_and_grad(
    selector_out: &[f64],
    expert_logits: &[Vec<f64>],
    label: usize,
    fusion: FusionMode,
) -> Result<(f64, Vec<f64>)> {
    let zero_adj = vec![0.0; expert_logits[0].len()];
    let weights = match fusion {
        FusionMode::Softmax => stable_softmax(selector_out)?,
        FusionMode::Raw => selector_out.to_vec(),
    };
    let fused = combine(&weights, expert_logits);
    let (loss, g) = adjusted_loss_and_grad(&fused, label, &zero_adj)?;
    // dL/dw_i = <g, e_i>
    let dw: Vec<f64> = expert_logits
        .iter()
        .map(|l| l.iter().zip(&g).map(|(a, b)| a * b).sum())
        .collect();
    let du = match fusion {
        FusionMode::Softmax => {
            let mean: f64 = weights.iter().zip(&dw).map(|(w, d)| w * d).sum();
            weights
                .iter()
                .zip(&dw)
                .map(|(w, d)| w * (d - mean))
                .collect()
        }
        FusionMode::Raw => dw,
    };
    Ok((loss, du))
}
