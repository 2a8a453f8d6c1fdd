use super::*;
use crate::demo::{ClassWeights, Sample};
use crate::domain::ActionId;
use alloc::vec;
use approx::assert_abs_diff_eq;
use rand_distr::{Distribution, Uniform};

fn id(i: usize) -> ActionId {
    ActionId::new(i).unwrap()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Straightforward per-sample, per-unit LSTM evaluation used as an oracle
/// for the batched implementation. `x` is `m` rows of `input_dim`.
fn reference_logits(p: &NetworkParams, x: &[Vec<f64>]) -> Vec<f64> {
    let s = p.shape;
    let h = s.hidden;
    let mut input: Vec<Vec<f64>> = x.to_vec();
    for l in 0..s.layers {
        let wx = p.tensor(&format!("lstm{l}.w_x")).unwrap();
        let wh = p.tensor(&format!("lstm{l}.w_h")).unwrap();
        let b = p.tensor(&format!("lstm{l}.b")).unwrap();
        let n_in = input[0].len();
        let mut hs = vec![0.0; h];
        let mut cs = vec![0.0; h];
        let mut out = Vec::new();
        for xt in &input {
            let mut z = b.to_vec();
            for (k, zk) in z.iter_mut().enumerate() {
                for i in 0..n_in {
                    *zk += xt[i] * wx[i * 4 * h + k];
                }
                for i in 0..h {
                    *zk += hs[i] * wh[i * 4 * h + k];
                }
            }
            let mut nh = vec![0.0; h];
            for j in 0..h {
                let (ig, fg, gg, og) = (
                    sigmoid(z[j]),
                    sigmoid(z[h + j]),
                    libm::tanh(z[2 * h + j]),
                    sigmoid(z[3 * h + j]),
                );
                cs[j] = fg * cs[j] + ig * gg;
                nh[j] = og * libm::tanh(cs[j]);
            }
            hs = nh;
            out.push(hs.clone());
        }
        input = out;
    }
    let last = input.last().unwrap();
    let w = p.tensor("head.w").unwrap();
    let b = p.tensor("head.b").unwrap();
    (0..s.output_dim)
        .map(|c| {
            b[c] + (0..h)
                .map(|j| last[j] * w[j * s.output_dim + c])
                .sum::<f64>()
        })
        .collect()
}

fn random_windows(seed: u64, batch: usize, m: usize) -> Vec<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = Uniform::new(-1.5, 1.5).unwrap();
    (0..batch)
        .map(|_| {
            (0..m)
                .map(|_| (0..4).map(|_| u.sample(&mut rng)).collect())
                .collect()
        })
        .collect()
}

fn time_major(windows: &[Vec<Vec<f64>>]) -> Vec<f64> {
    let m = windows[0].len();
    let mut xs = Vec::new();
    for t in 0..m {
        for w in windows {
            xs.extend_from_slice(&w[t]);
        }
    }
    xs
}

#[test]
fn init_is_seeded_and_shaped() {
    let shape = NetworkShape::new(8, 5);
    let a = init_params(shape, 1).unwrap();
    assert_eq!(a, init_params(shape, 1).unwrap());
    assert_ne!(a, init_params(shape, 2).unwrap());
    // layer-1 input weights: 4 inputs x (4 gates x 8 units); the input-gate block is 4 x 8
    let wx = a.tensor("lstm0.w_x").unwrap();
    assert_eq!(wx.len(), 4 * 32);
    let input_gate: Vec<f64> = (0..4)
        .flat_map(|i| wx[i * 32..i * 32 + 8].to_vec())
        .collect();
    assert_eq!(input_gate.len(), 8 * 4);
    assert!(wx.iter().all(|v| v.abs() <= 0.5));
    let b = a.tensor("lstm1.b").unwrap();
    assert!(b[..8].iter().all(|&v| v == 0.0));
    assert!(b[8..16].iter().all(|&v| v == 1.0));
    assert!(b[16..].iter().all(|&v| v == 0.0));
    assert!(a.tensor("head.b").unwrap().iter().all(|&v| v == 0.0));
    assert_eq!(
        shape.num_params(),
        4 * 32 + 8 * 32 + 32 + 8 * 32 + 8 * 32 + 32 + 8 * 45 + 45
    );
}

#[test]
fn zero_network_gives_zero_logits() {
    let p = NetworkParams::zeros(NetworkShape::new(4, 3));
    let xs = time_major(&random_windows(1, 2, 3));
    let t = forward(&p, &xs, 2).unwrap();
    assert!(t.logits.iter().all(|&z| z == 0.0));
}

#[test]
fn forward_rejects_wrong_length() {
    let p = NetworkParams::zeros(NetworkShape::new(4, 3));
    assert!(matches!(forward(&p, &[0.0; 11], 1), Err(Error::Shape(_))));
}

#[test]
fn single_cell_by_hand() {
    // hidden 2, one step: only the cell-candidate path of unit 0 is wired
    let mut p = NetworkParams::zeros(NetworkShape::new(2, 1));
    p.tensor_mut("lstm0.w_x").unwrap()[2 * 2] = 1.0; // x0 -> g0
    p.tensor_mut("lstm1.w_x").unwrap()[2 * 2] = 1.0; // h0 -> g0
    p.tensor_mut("head.w").unwrap()[0] = 1.0; // h0 -> z0
    p.tensor_mut("head.b").unwrap()[1] = 0.25;
    let t = forward(&p, &[1.0, 0.0, 0.0, 0.0], 1).unwrap();
    // i = o = σ(0) = 1/2, c = tanh(1)/2, h = tanh(c)/2 in each layer
    let h0 = 0.5 * libm::tanh(0.5 * libm::tanh(1.0));
    let h1 = 0.5 * libm::tanh(0.5 * libm::tanh(h0));
    assert_abs_diff_eq!(t.logits[0], h1, epsilon = 1e-15);
    assert_eq!(t.logits[1], 0.25);
    assert!(t.logits[2..].iter().all(|&z| z == 0.0));
}

#[test]
fn batched_forward_matches_reference() {
    for seed in 0..5 {
        let p = init_params(NetworkShape::new(6, 4), seed).unwrap();
        let wins = random_windows(seed + 100, 3, 4);
        let t = forward(&p, &time_major(&wins), 3).unwrap();
        for (b, w) in wins.iter().enumerate() {
            let r = reference_logits(&p, w);
            for c in 0..45 {
                assert_abs_diff_eq!(t.logits[b * 45 + c], r[c], epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn softmax_properties() {
    let p = softmax(&[0.0; 45]);
    assert!(p.iter().all(|&v| (v - 1.0 / 45.0).abs() < 1e-15));
    let z: Vec<f64> = (0..45).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
    let shifted: Vec<f64> = z.iter().map(|v| v + 17.5).collect();
    for (a, b) in softmax(&z).iter().zip(softmax(&shifted)) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
    }
    let mut big = vec![0.0; 45];
    big[7] = 1000.0;
    let p = softmax(&big);
    assert!(p.iter().all(|v| v.is_finite()));
    assert_abs_diff_eq!(p[7], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
    assert_eq!(argmax(&z), argmax(&shifted));
}

#[test]
fn loss_examples() {
    let w = ClassWeights::uniform();
    for c in [0, 4, 44] {
        assert_abs_diff_eq!(
            loss(&[0.0; 45], id(c), &w),
            libm::log(45.0),
            epsilon = 1e-12
        );
    }
    assert_abs_diff_eq!(libm::log(45.0), 3.8067, epsilon = 1e-4);
    let z: Vec<f64> = (0..45).map(|i| i as f64 * 0.1).collect();
    assert_eq!(loss(&z, id(9), &w), cross_entropy(&z, id(9)));
    assert_abs_diff_eq!(
        cross_entropy(&z, id(9)),
        -libm::log(softmax(&z)[9]),
        epsilon = 1e-12
    );
    let mut sure = vec![0.0; 45];
    sure[3] = 60.0;
    assert!(loss(&sure, id(3), &w) < 1e-20);
}

#[test]
fn argmax_ties_break_low() {
    assert_eq!(argmax(&[0.0; 45]).index(), 0);
    let mut z = [0.0; 45];
    z[9] = 1.0;
    z[30] = 1.0;
    assert_eq!(argmax(&z).index(), 9);
}

fn weights(seed: u64) -> ClassWeights {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = Uniform::new(0.2, 3.0).unwrap();
    let mut w = [0.0; 45];
    for v in &mut w {
        *v = u.sample(&mut rng);
    }
    ClassWeights(w)
}

fn batch_loss(p: &NetworkParams, xs: &[f64], labels: &[ActionId], w: &ClassWeights) -> f64 {
    let t = forward(p, xs, labels.len()).unwrap();
    labels
        .iter()
        .enumerate()
        .map(|(b, &y)| loss(&t.logits[b * 45..(b + 1) * 45], y, w))
        .sum::<f64>()
        / labels.len() as f64
}

#[test]
fn gradients_match_central_differences() {
    let shape = NetworkShape::new(8, 5);
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let mut p = init_params(shape, seed).unwrap();
        // larger weights make the gate nonlinearities matter
        for v in &mut p.values {
            *v *= 1.5;
        }
        let xs = time_major(&random_windows(seed + 50, 3, 5));
        let labels = [id(seed as usize % 45), id(13), id(40)];
        let w = weights(seed);
        let (_, g, _) = loss_and_gradients(&p, &xs, &labels, &w).unwrap();
        for i in 0..p.values.len() {
            let orig = p.values[i];
            p.values[i] = orig + eps;
            let up = batch_loss(&p, &xs, &labels, &w);
            p.values[i] = orig - eps;
            let down = batch_loss(&p, &xs, &labels, &w);
            p.values[i] = orig;
            let num = (up - down) / (2.0 * eps);
            // Below ~1e-5 the difference quotient is dominated by loss
            // roundoff (a few ulps of ln 45 over 2e-5, about 1e-10), so the
            // denominator is floored there.
            let rel = (g[i] - num).abs() / (g[i].abs() + num.abs()).max(1e-5);
            worst = worst.max(rel);
        }
    }
    assert!(worst < 1e-4, "max relative error {worst:e}");
}

#[test]
fn unused_paths_get_zero_gradient_and_weights_scale_linearly() {
    let shape = NetworkShape::new(4, 3);
    let p = init_params(shape, 3).unwrap();
    let xs = vec![0.0; 3 * 2 * 4];
    let labels = [id(5), id(14)];
    let w = weights(1);
    let (_, g, _) = loss_and_gradients(&p, &xs, &labels, &w).unwrap();
    let wx = shape.tensors()[0].range();
    assert!(g[wx].iter().all(|&v| v == 0.0));

    let xs = time_major(&random_windows(9, 2, 3));
    let (_, g1, _) = loss_and_gradients(&p, &xs, &labels, &w).unwrap();
    let doubled = ClassWeights(w.0.map(|v| 2.0 * v));
    let (_, g2, _) = loss_and_gradients(&p, &xs, &labels, &doubled).unwrap();
    for (a, b) in g1.iter().zip(&g2) {
        assert_abs_diff_eq!(2.0 * a, *b, epsilon = 1e-15 * (1.0 + a.abs()));
    }
}

#[test]
fn adam_first_step_moves_by_lr_against_the_sign() {
    let mut p = vec![1.0, -2.0, 0.5, 3.0];
    let g = vec![0.3, -4.0, 1e-3, 0.0];
    let mut st = AdamState::new(4, 1e-3);
    adam_step(&mut p, &g, &mut st).unwrap();
    // m̂ = g, v̂ = g², so the step is lr·g/(|g| + ε)
    assert_abs_diff_eq!(p[0], 1.0 - 1e-3 * 0.3 / (0.3 + 1e-8), epsilon = 1e-15);
    assert_abs_diff_eq!(p[1], -2.0 + 1e-3 * 4.0 / (4.0 + 1e-8), epsilon = 1e-15);
    assert_abs_diff_eq!(p[2], 0.5 - 1e-3, epsilon = 2e-8);
    assert_eq!(p[3], 3.0);

    let mut q = vec![1.0, 2.0];
    let mut st = AdamState::new(2, 1e-3);
    for _ in 0..5 {
        adam_step(&mut q, &[0.0, 0.0], &mut st).unwrap();
    }
    assert_eq!(q, vec![1.0, 2.0]);
    assert!(adam_step(&mut q, &[0.0], &mut st).is_err());
}

fn toy_dataset(m: usize, n: usize) -> WindowedDataset {
    let mut ds = WindowedDataset::empty(m);
    for i in 0..n {
        let label = [5, 13, 3][i % 3];
        let x = (0..m)
            .map(|t| {
                [
                    label as f64 + t as f64 * 0.1,
                    (i % 7) as f64,
                    0.0,
                    100.0 - label as f64,
                ]
            })
            .collect();
        ds.push(Sample {
            x,
            label: id(label),
        });
    }
    ds
}

#[test]
fn memorizes_one_sample() {
    let ds = toy_dataset(4, 1);
    let cfg = TrainConfig {
        max_steps: 200,
        eval_every: 10,
        target_accuracy: Some(1.0),
        ..TrainConfig::default()
    };
    let (ck, rep) = train(&ds, NetworkShape::new(8, 4), &cfg, 7).unwrap();
    assert!(rep.steps <= 200);
    assert_eq!(rep.final_accuracy, 1.0);
    assert_eq!(evaluate_accuracy(&ck, &ds).unwrap(), 1.0);
    assert_eq!(rep.loss.len() as u64, rep.steps);
    assert_eq!(rep.accuracy.len() as u64, rep.steps);
}

#[test]
fn training_is_deterministic_and_order_free_to_evaluate() {
    let ds = toy_dataset(3, 40);
    let cfg = TrainConfig {
        max_steps: 60,
        eval_every: 20,
        ..TrainConfig::default()
    };
    let shape = NetworkShape::new(6, 3);
    let (a, ra) = train(&ds, shape, &cfg, 11).unwrap();
    let (b, rb) = train(&ds, shape, &cfg, 11).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra, rb);
    let (c, _) = train(&ds, shape, &cfg, 12).unwrap();
    assert_ne!(a.params, c.params);

    let mut rev = ds.clone();
    rev.samples.reverse();
    assert_eq!(
        evaluate_accuracy(&a, &ds).unwrap(),
        evaluate_accuracy(&a, &rev).unwrap()
    );
    assert!(matches!(
        evaluate_accuracy(&a, &toy_dataset(4, 3)),
        Err(Error::Shape(_))
    ));
}

#[test]
fn untrained_zero_network_predicts_the_lowest_id() {
    let ds = toy_dataset(3, 30);
    let ck = NetworkCheckpoint {
        params: NetworkParams::zeros(NetworkShape::new(4, 3)),
        normalization: Normalization::IDENTITY,
        meta: TrainMeta {
            seed: 0,
            steps: 0,
            batch_size: 32,
            final_loss: 0.0,
            final_accuracy: 0.0,
            dataset_digest: String::new(),
            transfer: false,
        },
    };
    // all ties resolve to id 0, which never occurs
    assert_eq!(evaluate_accuracy(&ck, &ds).unwrap(), 0.0);
    let mut ds0 = WindowedDataset::empty(3);
    for i in 0..10 {
        ds0.push(Sample {
            x: vec![[i as f64; 4]; 3],
            label: id(if i < 4 { 0 } else { 1 }),
        });
    }
    assert_abs_diff_eq!(evaluate_accuracy(&ck, &ds0).unwrap(), 0.4, epsilon = 1e-12);
}

#[test]
fn empty_dataset_is_rejected() {
    let ds = WindowedDataset::empty(3);
    assert!(matches!(
        train(&ds, NetworkShape::new(4, 3), &TrainConfig::default(), 0),
        Err(Error::Size(_))
    ));
}

#[test]
fn transfer_keeps_recurrent_layers_and_redraws_the_head() {
    let ds = toy_dataset(3, 30);
    let shape = NetworkShape::new(6, 3);
    let cfg = TrainConfig {
        max_steps: 40,
        ..TrainConfig::default()
    };
    let (src, _) = train(&ds, shape, &cfg, 1).unwrap();
    let (t0, rep) = transfer_train(
        &src,
        &ds,
        &TrainConfig {
            max_steps: 0,
            ..cfg
        },
        99,
    )
    .unwrap();
    let k = shape.head_offset();
    assert_eq!(t0.params.values[..k], src.params.values[..k]);
    assert_eq!(
        t0.params.values[k..],
        init_params(shape, 99).unwrap().values[k..]
    );
    assert_eq!(t0.normalization, src.normalization);
    assert!(rep.transfer && t0.meta.transfer);
    assert!(matches!(
        transfer_train(&src, &toy_dataset(4, 3), &cfg, 1),
        Err(Error::Shape(_))
    ));
}

#[test]
fn checkpoint_logits_normalize_the_window() {
    let ds = toy_dataset(3, 9);
    let (ck, _) = train(
        &ds,
        NetworkShape::new(4, 3),
        &TrainConfig {
            max_steps: 5,
            ..TrainConfig::default()
        },
        2,
    )
    .unwrap();
    let raw = &ds.samples[0].x;
    let z = ck.logits(raw).unwrap();
    let xs: Vec<f64> = raw.iter().flat_map(|r| ck.normalization.apply(r)).collect();
    assert_eq!(z.to_vec(), forward(&ck.params, &xs, 1).unwrap().logits);
    assert!(ck.logits(&raw[..2]).is_err());
}
