//! Two-layer LSTM window classifier over the 45 motion primitives, trained
//! from scratch with weighted softmax cross-entropy and Adam.
//!
//! Parameters live in one flat buffer so gradients, Adam moments and the
//! checkpoint all share a layout. Per layer `l` the tensors are `w_x`
//! (`in × 4H`), `w_h` (`H × 4H`) and `b` (`4H`), with gate blocks in the
//! order input, forget, cell, output; the head is `w` (`H × 45`) and `b`.

mod gemm;
mod lstm;
mod train;

pub use lstm::{backward, forward, Gradients, Tape};
pub use train::{
    adam_step, argmax, cross_entropy, evaluate_accuracy, loss, loss_and_gradients, softmax, train,
    transfer_train, AdamState, TrainConfig, TrainReport,
};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::demo::WindowedDataset;
use crate::domain::{Observation, NUM_ACTIONS};
use crate::error::{Error, Result};

pub const LAYERS: usize = 2;
pub const DEFAULT_HIDDEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkShape {
    pub input_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub output_dim: usize,
    /// Window length in control ticks.
    pub m: usize,
}

impl NetworkShape {
    pub fn new(hidden: usize, m: usize) -> Self {
        NetworkShape {
            input_dim: Observation::FEATURES,
            hidden,
            layers: LAYERS,
            output_dim: NUM_ACTIONS,
            m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 || self.layers == 0 || self.m == 0 {
            return Err(Error::Shape(format!(
                "all dimensions must be positive: {self:?}"
            )));
        }
        if self.output_dim != NUM_ACTIONS {
            return Err(Error::Shape(format!(
                "output_dim must be {NUM_ACTIONS}, got {}",
                self.output_dim
            )));
        }
        Ok(())
    }

    pub(crate) fn layer_input(&self, l: usize) -> usize {
        if l == 0 {
            self.input_dim
        } else {
            self.hidden
        }
    }

    pub fn tensors(&self) -> Vec<TensorSpec> {
        let h = self.hidden;
        let mut v = Vec::new();
        let mut at = 0;
        let mut add = |name: String, rows: usize, cols: usize, fan_in: usize| {
            v.push(TensorSpec {
                name,
                rows,
                cols,
                offset: at,
                fan_in,
            });
            at += rows * cols;
        };
        for l in 0..self.layers {
            let i = self.layer_input(l);
            add(format!("lstm{l}.w_x"), i, 4 * h, i);
            add(format!("lstm{l}.w_h"), h, 4 * h, h);
            add(format!("lstm{l}.b"), 1, 4 * h, 0);
        }
        add("head.w".into(), h, self.output_dim, h);
        add("head.b".into(), 1, self.output_dim, 0);
        v
    }

    pub fn num_params(&self) -> usize {
        self.tensors().last().map_or(0, |t| t.offset + t.len())
    }

    /// Offset of the first head parameter; everything before it is recurrent.
    pub fn head_offset(&self) -> usize {
        self.tensors()[3 * self.layers].offset
    }
}

/// Name, row-major dimensions and position of one parameter tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
    /// Zero for biases.
    pub fan_in: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> core::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub shape: NetworkShape,
    pub values: Vec<f64>,
}

impl NetworkParams {
    pub fn zeros(shape: NetworkShape) -> Self {
        NetworkParams {
            shape,
            values: alloc::vec![0.0; shape.num_params()],
        }
    }

    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        self.shape
            .tensors()
            .into_iter()
            .find(|t| t.name == name)
            .map(|t| &self.values[t.range()])
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let t = self.shape.tensors().into_iter().find(|t| t.name == name)?;
        Some(&mut self.values[t.range()])
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Views in layout order: per layer `(w_x, w_h, b)`, then `(head.w, head.b)`.
    pub(crate) fn split(&self) -> (Vec<(&[f64], &[f64], &[f64])>, &[f64], &[f64]) {
        let t = self.shape.tensors();
        let layers = (0..self.shape.layers)
            .map(|l| {
                let [wx, wh, b] = [&t[3 * l], &t[3 * l + 1], &t[3 * l + 2]];
                (
                    &self.values[wx.range()],
                    &self.values[wh.range()],
                    &self.values[b.range()],
                )
            })
            .collect();
        let n = t.len();
        (
            layers,
            &self.values[t[n - 2].range()],
            &self.values[t[n - 1].range()],
        )
    }
}

fn fill_uniform(
    rng: &mut ChaCha8Rng,
    t: &TensorSpec,
    values: &mut [f64],
    hidden: usize,
    is_lstm_bias: bool,
) {
    let out = &mut values[t.range()];
    if t.fan_in == 0 {
        out.fill(0.0);
        if is_lstm_bias {
            out[hidden..2 * hidden].fill(1.0);
        }
        return;
    }
    let a = 1.0 / libm::sqrt(t.fan_in as f64);
    let dist = Uniform::new_inclusive(-a, a).expect("finite bound");
    for v in out {
        *v = dist.sample(rng);
    }
}

/// Weights uniform in ±1/√fan_in, forget-gate biases 1, other biases 0.
pub fn init_params(shape: NetworkShape, seed: u64) -> Result<NetworkParams> {
    shape.validate()?;
    let mut p = NetworkParams::zeros(shape);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tensors = shape.tensors();
    let head = tensors.len() - 2;
    for (i, t) in tensors.iter().enumerate() {
        fill_uniform(&mut rng, t, &mut p.values, shape.hidden, i < head);
    }
    Ok(p)
}

/// Re-draw only the output head, as [`init_params`] would for `seed`.
pub(crate) fn reinit_head(p: &mut NetworkParams, seed: u64) {
    let fresh = init_params(p.shape, seed).expect("shape already valid");
    let from = p.shape.head_offset();
    p.values[from..].copy_from_slice(&fresh.values[from..]);
}

/// Per-feature affine map applied to observations before the network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: [f64; 4],
    pub scale: [f64; 4],
}

impl Normalization {
    pub const IDENTITY: Normalization = Normalization {
        mean: [0.0; 4],
        scale: [1.0; 4],
    };

    /// Mean and standard deviation over every observation in every window.
    /// Constant features get scale 1.
    pub fn fit(ds: &WindowedDataset) -> Self {
        let mut n = 0.0;
        let mut sum = [0.0; 4];
        for s in &ds.samples {
            for row in &s.x {
                n += 1.0;
                for j in 0..4 {
                    sum[j] += row[j];
                }
            }
        }
        if n == 0.0 {
            return Self::IDENTITY;
        }
        let mean = sum.map(|v| v / n);
        let mut var = [0.0; 4];
        for s in &ds.samples {
            for row in &s.x {
                for j in 0..4 {
                    var[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
                }
            }
        }
        let scale = var.map(|v| {
            let sd = libm::sqrt(v / n);
            if sd > 1e-6 {
                sd
            } else {
                1.0
            }
        });
        Normalization { mean, scale }
    }

    pub fn apply(&self, row: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for j in 0..4 {
            out[j] = (row[j] - self.mean[j]) / self.scale[j];
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub steps: u64,
    pub batch_size: u64,
    pub final_loss: f64,
    pub final_accuracy: f64,
    /// Digest of the windowed training set.
    pub dataset_digest: String,
    pub transfer: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCheckpoint {
    pub params: NetworkParams,
    pub normalization: Normalization,
    pub meta: TrainMeta,
}

impl NetworkCheckpoint {
    pub fn shape(&self) -> NetworkShape {
        self.params.shape
    }

    /// Logits for one raw (unnormalized) window of `m` observations.
    pub fn logits(&self, window: &[[f64; 4]]) -> Result<[f64; NUM_ACTIONS]> {
        let shape = self.shape();
        if window.len() != shape.m {
            return Err(Error::Shape(format!(
                "window has {} ticks, network expects {}",
                window.len(),
                shape.m
            )));
        }
        let xs: Vec<f64> = window
            .iter()
            .flat_map(|r| self.normalization.apply(r))
            .collect();
        let tape = forward(&self.params, &xs, 1)?;
        let mut z = [0.0; NUM_ACTIONS];
        z.copy_from_slice(&tape.logits);
        Ok(z)
    }
}

#[cfg(test)]
mod tests;
