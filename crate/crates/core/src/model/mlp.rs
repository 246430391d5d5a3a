use crate::error::{Error, Result};
use crate::numerics::{Matrix, RngState};

/// Two weight layers with a relu hidden layer: `W2ᵀ relu(W1ᵀ x + b1) + b2`.
///
/// The same struct doubles as a gradient or momentum buffer of identical shape.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    /// `input × hidden`
    pub w1: Matrix,
    pub b1: Vec<f64>,
    /// `hidden × output`
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

/// Hidden width for an input of dimension `d`: `⌊d/2⌋`, at least 1.
pub fn hidden_width(input: usize) -> usize {
    (input / 2).max(1)
}

/// Uniform fan-in initialization `U(-√(6/fan_in), √(6/fan_in))`, zero biases.
///
/// Draws `input·hidden` uniforms for `w1` then `hidden·output` for `w2`, row-major.
pub fn init_mlp(rng: &mut RngState, input: usize, hidden: usize, output: usize) -> MlpParams {
    assert!(
        input > 0 && hidden > 0 && output > 0,
        "MLP dimensions must be positive"
    );
    let mut layer = |fan_in: usize, fan_out: usize| {
        let bound = (6.0 / fan_in as f64).sqrt();
        let data = (0..fan_in * fan_out)
            .map(|_| rng.uniform_range(-bound, bound))
            .collect();
        Matrix::from_vec(fan_in, fan_out, data).expect("sized by construction")
    };
    let w1 = layer(input, hidden);
    let w2 = layer(hidden, output);
    MlpParams {
        w1,
        b1: vec![0.0; hidden],
        w2,
        b2: vec![0.0; output],
    }
}

/// Hidden pre-activations and output logits of one forward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    pub pre: Vec<f64>,
    pub logits: Vec<f64>,
}

impl MlpParams {
    pub fn zeros_like(&self) -> MlpParams {
        MlpParams {
            w1: Matrix::zeros(self.w1.rows(), self.w1.cols()),
            b1: vec![0.0; self.b1.len()],
            w2: Matrix::zeros(self.w2.rows(), self.w2.cols()),
            b2: vec![0.0; self.b2.len()],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w2.cols()
    }

    pub fn num_parameters(&self) -> usize {
        self.w1.data().len() + self.b1.len() + self.w2.data().len() + self.b2.len()
    }

    pub fn activations(&self, x: &[f64]) -> Result<Activations> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut pre = self.b1.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (p, w) in pre.iter_mut().zip(self.w1.row(i)) {
                *p += xi * w;
            }
        }
        let mut logits = self.b2.clone();
        for (j, &p) in pre.iter().enumerate() {
            if p > 0.0 {
                for (l, w) in logits.iter_mut().zip(self.w2.row(j)) {
                    *l += p * w;
                }
            }
        }
        Ok(Activations { pre, logits })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.activations(x)?.logits)
    }

    pub fn forward_batch(&self, xs: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        xs.iter().map(|x| self.forward(x)).collect()
    }

    /// Adds `scale ·` the parameter gradient of one sample into `grad`.
    ///
    /// `upstream` is the loss gradient with respect to the logits. The relu
    /// subgradient at 0 is taken as 0.
    pub fn accumulate_grad(
        &self,
        x: &[f64],
        act: &Activations,
        upstream: &[f64],
        scale: f64,
        grad: &mut MlpParams,
    ) {
        let hidden = self.hidden_dim();
        let mut d_pre = vec![0.0; hidden];
        for j in 0..hidden {
            let h = act.pre[j];
            if h <= 0.0 {
                continue;
            }
            let w_row = self.w2.row(j);
            let g_row = grad.w2.row_mut(j);
            let mut back = 0.0;
            for k in 0..upstream.len() {
                g_row[k] += scale * h * upstream[k];
                back += w_row[k] * upstream[k];
            }
            d_pre[j] = back;
        }
        for (gb, u) in grad.b2.iter_mut().zip(upstream) {
            *gb += scale * u;
        }
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (g, dp) in grad.w1.row_mut(i).iter_mut().zip(&d_pre) {
                *g += scale * xi * dp;
            }
        }
        for (gb, dp) in grad.b1.iter_mut().zip(&d_pre) {
            *gb += scale * dp;
        }
    }

    /// Mean parameter gradient over a batch given per-sample logit gradients.
    pub fn gradient(&self, xs: &[&[f64]], upstream: &[Vec<f64>]) -> Result<MlpParams> {
        if xs.len() != upstream.len() {
            return Err(Error::DimensionMismatch {
                expected: xs.len(),
                got: upstream.len(),
            });
        }
        let mut grad = self.zeros_like();
        if xs.is_empty() {
            return Ok(grad);
        }
        let scale = 1.0 / xs.len() as f64;
        for (x, g) in xs.iter().zip(upstream) {
            if g.len() != self.output_dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.output_dim(),
                    got: g.len(),
                });
            }
            let act = self.activations(x)?;
            self.accumulate_grad(x, &act, g, scale, &mut grad);
        }
        Ok(grad)
    }

    pub(crate) fn slices(&self) -> [&[f64]; 4] {
        [self.w1.data(), &self.b1, self.w2.data(), &self.b2]
    }

    pub(crate) fn slices_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.data_mut(),
            &mut self.b1,
            self.w2.data_mut(),
            &mut self.b2,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.slices()
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }
}

pub fn mlp_forward(params: &MlpParams, x: &[f64]) -> Result<Vec<f64>> {
    params.forward(x)
}

pub fn mlp_grad(params: &MlpParams, xs: &[&[f64]], upstream: &[Vec<f64>]) -> Result<MlpParams> {
    params.gradient(xs, upstream)
}
