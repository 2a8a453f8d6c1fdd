use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::lstm::{backward, forward, Gradients};
use super::{
    init_params, reinit_head, NetworkCheckpoint, NetworkParams, NetworkShape, Normalization,
    TrainMeta,
};
use crate::demo::{class_weights, ClassWeights, WindowedDataset};
use crate::domain::{ActionId, NUM_ACTIONS};
use crate::error::{Error, Result};

/// Numerically stable softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| libm::exp(v - max)).collect();
    let sum: f64 = e.iter().sum();
    e.into_iter().map(|v| v / sum).collect()
}

fn log_softmax_at(z: &[f64], c: usize) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = z.iter().map(|v| libm::exp(v - max)).sum();
    z[c] - max - libm::log(sum)
}

/// Unweighted cross-entropy `-ln σ(z)_c`.
pub fn cross_entropy(logits: &[f64], label: ActionId) -> f64 {
    -log_softmax_at(logits, label.index())
}

/// Weighted cross-entropy of one sample: `-w_c ln σ(z)_c` for true class `c`.
pub fn loss(logits: &[f64], label: ActionId, w: &ClassWeights) -> f64 {
    w.get(label) * cross_entropy(logits, label)
}

/// Index of the largest logit; ties go to the lowest id.
pub fn argmax(z: &[f64]) -> ActionId {
    let mut best = 0;
    for (i, &v) in z.iter().enumerate() {
        if v > z[best] {
            best = i;
        }
    }
    ActionId::new(best).expect("logit vector has 45 entries")
}

/// Mean weighted loss over a batch and its gradient with respect to every
/// parameter. `xs` is time-major and normalized.
pub fn loss_and_gradients(
    params: &NetworkParams,
    xs: &[f64],
    labels: &[ActionId],
    w: &ClassWeights,
) -> Result<(f64, Gradients, Vec<f64>)> {
    let batch = labels.len();
    if batch == 0 {
        return Err(Error::Size("empty batch".into()));
    }
    let tape = forward(params, xs, batch)?;
    let mut total = 0.0;
    let mut dlogits = vec![0.0; batch * NUM_ACTIONS];
    for (b, &y) in labels.iter().enumerate() {
        let z = &tape.logits[b * NUM_ACTIONS..(b + 1) * NUM_ACTIONS];
        total += loss(z, y, w);
        let p = softmax(z);
        let scale = w.get(y) / batch as f64;
        let d = &mut dlogits[b * NUM_ACTIONS..(b + 1) * NUM_ACTIONS];
        for c in 0..NUM_ACTIONS {
            let target = if c == y.index() { 1.0 } else { 0.0 };
            d[c] = scale * (p[c] - target);
        }
    }
    let grads = backward(params, &tape, &dlogits)?;
    Ok((total / batch as f64, grads, tape.logits))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n: usize, lr: f64) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(params: &mut [f64], grads: &[f64], st: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() || params.len() != st.m.len() {
        return Err(Error::Shape(format!(
            "params {}, grads {}, moments {}",
            params.len(),
            grads.len(),
            st.m.len()
        )));
    }
    st.t += 1;
    let c1 = 1.0 - libm::pow(st.beta1, st.t as f64);
    let c2 = 1.0 - libm::pow(st.beta2, st.t as f64);
    for i in 0..params.len() {
        let g = grads[i];
        st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * g;
        st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * g * g;
        let mh = st.m[i] / c1;
        let vh = st.v[i] / c2;
        params[i] -= st.lr * mh / (libm::sqrt(vh) + st.eps);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_steps: u64,
    pub batch_size: usize,
    pub lr: f64,
    /// Full-set accuracy is measured every this many steps.
    pub eval_every: u64,
    /// Stop at the first evaluation reaching this accuracy.
    pub target_accuracy: Option<f64>,
    /// Use inverse-frequency class weights (otherwise all weights are 1).
    pub class_weighting: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_steps: 3000,
            batch_size: 32,
            lr: 1e-3,
            eval_every: 25,
            target_accuracy: None,
            class_weighting: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean batch loss per step.
    pub loss: Vec<f64>,
    /// Batch accuracy per step.
    pub accuracy: Vec<f64>,
    /// `(step, training-set accuracy)` at each evaluation.
    pub evals: Vec<(u64, f64)>,
    pub steps: u64,
    pub final_accuracy: f64,
    pub transfer: bool,
}

impl TrainReport {
    /// First evaluated step whose training-set accuracy reached `threshold`.
    pub fn steps_to(&self, threshold: f64) -> Option<u64> {
        self.evals
            .iter()
            .find(|(_, a)| *a >= threshold)
            .map(|(s, _)| *s)
    }
}

/// Normalized, flattened windows ready for batching.
struct Prepared {
    m: usize,
    rows: Vec<f64>,
    labels: Vec<ActionId>,
}

impl Prepared {
    fn new(ds: &WindowedDataset, norm: &Normalization) -> Self {
        let rows = ds
            .samples
            .iter()
            .flat_map(|s| s.x.iter().flat_map(|r| norm.apply(r)))
            .collect();
        Prepared {
            m: ds.m,
            rows,
            labels: ds.labels().collect(),
        }
    }

    /// Time-major batch buffer for the given sample indices.
    fn batch(&self, idx: &[usize]) -> (Vec<f64>, Vec<ActionId>) {
        let (m, b) = (self.m, idx.len());
        let mut xs = vec![0.0; m * b * 4];
        for (bi, &i) in idx.iter().enumerate() {
            for t in 0..m {
                let src = &self.rows[(i * m + t) * 4..(i * m + t + 1) * 4];
                xs[(t * b + bi) * 4..(t * b + bi + 1) * 4].copy_from_slice(src);
            }
        }
        (xs, idx.iter().map(|&i| self.labels[i]).collect())
    }
}

const EVAL_CHUNK: usize = 256;

fn accuracy_on(params: &NetworkParams, data: &Prepared) -> Result<f64> {
    let n = data.labels.len();
    if n == 0 {
        return Err(Error::Size("empty dataset".into()));
    }
    let mut correct = 0usize;
    let all: Vec<usize> = (0..n).collect();
    for chunk in all.chunks(EVAL_CHUNK) {
        let (xs, labels) = data.batch(chunk);
        let tape = forward(params, &xs, chunk.len())?;
        for (b, y) in labels.iter().enumerate() {
            if argmax(&tape.logits[b * NUM_ACTIONS..(b + 1) * NUM_ACTIONS]) == *y {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / n as f64)
}

/// Fraction of samples whose argmax prediction equals the label.
pub fn evaluate_accuracy(ckpt: &NetworkCheckpoint, ds: &WindowedDataset) -> Result<f64> {
    if ds.m != ckpt.shape().m {
        return Err(Error::Shape(format!(
            "dataset window {} vs network window {}",
            ds.m,
            ckpt.shape().m
        )));
    }
    accuracy_on(&ckpt.params, &Prepared::new(ds, &ckpt.normalization))
}

fn shuffle(rng: &mut ChaCha8Rng, v: &mut [usize]) {
    for i in (1..v.len()).rev() {
        let j = Uniform::new_inclusive(0, i)
            .expect("non-empty range")
            .sample(rng);
        v.swap(i, j);
    }
}

fn run(
    mut params: NetworkParams,
    norm: Normalization,
    ds: &WindowedDataset,
    cfg: &TrainConfig,
    seed: u64,
    transfer: bool,
) -> Result<(NetworkCheckpoint, TrainReport)> {
    if ds.is_empty() {
        return Err(Error::Size("empty dataset".into()));
    }
    if cfg.batch_size == 0 || cfg.eval_every == 0 {
        return Err(Error::InvalidArgument(
            "batch_size and eval_every must be positive".into(),
        ));
    }
    let w = if cfg.class_weighting {
        class_weights(&ds.class_counts)?
    } else {
        ClassWeights::uniform()
    };
    let data = Prepared::new(ds, &norm);
    let mut adam = AdamState::new(params.values.len(), cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0bad_5eed);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut cursor = order.len();
    let mut report = TrainReport {
        loss: Vec::new(),
        accuracy: Vec::new(),
        evals: Vec::new(),
        steps: 0,
        final_accuracy: 0.0,
        transfer,
    };

    let mut last_eval = None;
    while report.steps < cfg.max_steps {
        if cursor >= order.len() {
            shuffle(&mut rng, &mut order);
            cursor = 0;
        }
        let end = (cursor + cfg.batch_size).min(order.len());
        let (xs, labels) = data.batch(&order[cursor..end]);
        cursor = end;

        let (l, grads, logits) = loss_and_gradients(&params, &xs, &labels, &w)?;
        adam_step(&mut params.values, &grads, &mut adam)?;
        if !l.is_finite() || !params.all_finite() {
            return Err(Error::Range(format!(
                "training diverged at step {}",
                report.steps + 1
            )));
        }
        let hits = labels
            .iter()
            .enumerate()
            .filter(|(b, y)| argmax(&logits[b * NUM_ACTIONS..(b + 1) * NUM_ACTIONS]) == **y);
        report.loss.push(l);
        report
            .accuracy
            .push(hits.count() as f64 / labels.len() as f64);
        report.steps += 1;

        if report.steps % cfg.eval_every == 0 || report.steps == cfg.max_steps {
            let acc = accuracy_on(&params, &data)?;
            report.evals.push((report.steps, acc));
            last_eval = Some((report.steps, acc));
            if cfg.target_accuracy.is_some_and(|t| acc >= t) {
                break;
            }
        }
    }
    report.final_accuracy = match last_eval {
        Some((s, a)) if s == report.steps => a,
        _ => accuracy_on(&params, &data)?,
    };
    let meta = TrainMeta {
        seed,
        steps: report.steps,
        batch_size: cfg.batch_size as u64,
        final_loss: report.loss.last().copied().unwrap_or(f64::NAN),
        final_accuracy: report.final_accuracy,
        dataset_digest: ds.digest(),
        transfer,
    };
    Ok((
        NetworkCheckpoint {
            params,
            normalization: norm,
            meta,
        },
        report,
    ))
}

/// Train from a fresh initialization. Normalization is fitted to `ds`.
pub fn train(
    ds: &WindowedDataset,
    shape: NetworkShape,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(NetworkCheckpoint, TrainReport)> {
    if ds.m != shape.m {
        return Err(Error::Shape(format!(
            "dataset window {} vs network window {}",
            ds.m, shape.m
        )));
    }
    let params = init_params(shape, seed)?;
    run(params, Normalization::fit(ds), ds, cfg, seed, false)
}

/// Retrain on `ds` starting from `source`: recurrent layers and the input
/// normalization are kept, the output head is re-drawn from `seed`, and
/// the optimizer starts fresh.
pub fn transfer_train(
    source: &NetworkCheckpoint,
    ds: &WindowedDataset,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(NetworkCheckpoint, TrainReport)> {
    let shape = source.shape();
    if ds.m != shape.m {
        return Err(Error::Shape(format!(
            "dataset window {} vs source network window {}",
            ds.m, shape.m
        )));
    }
    let mut params = source.params.clone();
    reinit_head(&mut params, seed);
    run(params, source.normalization, ds, cfg, seed, true)
}
