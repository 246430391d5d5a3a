use std::f64::consts::PI;

use super::MlpParams;

/// Per-epoch cosine decay from `lr0` at epoch 0 to 0 at epoch `total - 1`.
pub fn cosine_lr(epoch: usize, total: usize, lr0: f64) -> f64 {
    if total <= 1 {
        return lr0;
    }
    if epoch + 1 == total {
        return 0.0;
    }
    lr0 * 0.5 * (1.0 + (PI * epoch as f64 / (total - 1) as f64).cos())
}

/// SGD with heavy-ball momentum: `v ← μv + g`, `θ ← θ − lr·v`.
#[derive(Debug, Clone)]
pub struct Sgd {
    momentum: f64,
    velocity: MlpParams,
}

impl Sgd {
    pub fn new(params: &MlpParams, momentum: f64) -> Self {
        Self {
            momentum,
            velocity: params.zeros_like(),
        }
    }

    pub fn step(&mut self, params: &mut MlpParams, grad: &MlpParams, lr: f64) {
        let mu = self.momentum;
        for ((p, v), g) in params
            .slices_mut()
            .into_iter()
            .zip(self.velocity.slices_mut())
            .zip(grad.slices())
        {
            for ((pi, vi), gi) in p.iter_mut().zip(v.iter_mut()).zip(g) {
                *vi = mu * *vi + gi;
                *pi -= lr * *vi;
            }
        }
    }
}
