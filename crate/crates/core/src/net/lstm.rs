use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::gemm::gemm;
use super::NetworkParams;
use crate::error::{Error, Result};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Activations of one layer over the whole window, time-major: row
/// `t * batch + b` holds sample `b` at step `t`.
#[derive(Debug, Clone)]
pub(crate) struct LayerTape {
    pub x: Vec<f64>,
    /// Gate activations `[i, f, g, o]`, `4H` per row.
    pub gates: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    pub batch: usize,
    pub(crate) layers: Vec<LayerTape>,
    /// `batch × 45` raw scores.
    pub logits: Vec<f64>,
}

/// Flat gradient buffer in the parameter layout.
pub type Gradients = Vec<f64>;

/// Run the network on `batch` windows. `xs` is time-major
/// (`m × batch × input_dim`) and already normalized. Initial hidden and cell
/// states are zero; the head reads the top layer's last hidden state.
pub fn forward(params: &NetworkParams, xs: &[f64], batch: usize) -> Result<Tape> {
    let s = params.shape;
    let (m, h) = (s.m, s.hidden);
    if xs.len() != m * batch * s.input_dim {
        return Err(Error::Shape(format!(
            "input has {} values, expected {} x {} x {}",
            xs.len(),
            m,
            batch,
            s.input_dim
        )));
    }
    let (layers, head_w, head_b) = params.split();
    let rows = m * batch;
    let mut tapes: Vec<LayerTape> = Vec::with_capacity(s.layers);
    for (l, (wx, wh, b)) in layers.into_iter().enumerate() {
        let inp = s.layer_input(l);
        let x = if l == 0 {
            xs.to_vec()
        } else {
            tapes[l - 1].h.clone()
        };
        let mut gates = vec![0.0; rows * 4 * h];
        for row in gates.chunks_exact_mut(4 * h) {
            row.copy_from_slice(b);
        }
        gemm(rows, inp, 4 * h, &x, false, wx, false, 1.0, &mut gates);
        let mut c = vec![0.0; rows * h];
        let mut tanh_c = vec![0.0; rows * h];
        let mut hs = vec![0.0; rows * h];
        for t in 0..m {
            let cur = t * batch;
            if t > 0 {
                let prev_h = &hs[(cur - batch) * h..cur * h];
                gemm(
                    batch,
                    h,
                    4 * h,
                    prev_h,
                    false,
                    wh,
                    false,
                    1.0,
                    &mut gates[cur * 4 * h..(cur + batch) * 4 * h],
                );
            }
            for bi in 0..batch {
                let r = cur + bi;
                let g = &mut gates[r * 4 * h..(r + 1) * 4 * h];
                for j in 0..h {
                    let i_g = sigmoid(g[j]);
                    let f_g = sigmoid(g[h + j]);
                    let c_g = libm::tanh(g[2 * h + j]);
                    let o_g = sigmoid(g[3 * h + j]);
                    g[j] = i_g;
                    g[h + j] = f_g;
                    g[2 * h + j] = c_g;
                    g[3 * h + j] = o_g;
                    let c_prev = if t > 0 { c[(r - batch) * h + j] } else { 0.0 };
                    let cv = f_g * c_prev + i_g * c_g;
                    let tc = libm::tanh(cv);
                    c[r * h + j] = cv;
                    tanh_c[r * h + j] = tc;
                    hs[r * h + j] = o_g * tc;
                }
            }
        }
        tapes.push(LayerTape {
            x,
            gates,
            c,
            tanh_c,
            h: hs,
        });
    }

    let out = s.output_dim;
    let last = &tapes.last().expect("at least one layer").h[(m - 1) * batch * h..];
    let mut logits = vec![0.0; batch * out];
    for row in logits.chunks_exact_mut(out) {
        row.copy_from_slice(head_b);
    }
    gemm(batch, h, out, last, false, head_w, false, 1.0, &mut logits);
    Ok(Tape {
        batch,
        layers: tapes,
        logits,
    })
}

/// Backpropagation through time. `dlogits` is `batch × 45`, the gradient of
/// the loss with respect to the logits.
pub fn backward(params: &NetworkParams, tape: &Tape, dlogits: &[f64]) -> Result<Gradients> {
    let s = params.shape;
    let (m, h, out, batch) = (s.m, s.hidden, s.output_dim, tape.batch);
    if dlogits.len() != batch * out {
        return Err(Error::Shape(format!(
            "dlogits has {} values, expected {}",
            dlogits.len(),
            batch * out
        )));
    }
    let tensors = s.tensors();
    let mut grads = vec![0.0; s.num_params()];
    let (layers, head_w, _) = params.split();
    let rows = m * batch;

    // head
    let top = &tape.layers[s.layers - 1];
    let last = &top.h[(m - 1) * batch * h..];
    let nt = tensors.len();
    gemm(
        h,
        batch,
        out,
        last,
        true,
        dlogits,
        false,
        0.0,
        &mut grads[tensors[nt - 2].range()],
    );
    {
        let db = &mut grads[tensors[nt - 1].range()];
        for row in dlogits.chunks_exact(out) {
            for (d, v) in db.iter_mut().zip(row) {
                *d += v;
            }
        }
    }
    // gradient flowing into each layer's hidden outputs from above
    let mut dh_above = vec![0.0; rows * h];
    gemm(
        batch,
        out,
        h,
        dlogits,
        false,
        head_w,
        true,
        0.0,
        &mut dh_above[(m - 1) * batch * h..],
    );

    for l in (0..s.layers).rev() {
        let lt = &tape.layers[l];
        let (wx, wh, _) = layers[l];
        let inp = s.layer_input(l);
        let mut dz = vec![0.0; rows * 4 * h];
        let mut dh_rec = vec![0.0; batch * h];
        let mut dc_next = vec![0.0; batch * h];
        for t in (0..m).rev() {
            let cur = t * batch;
            for bi in 0..batch {
                let r = cur + bi;
                let g = &lt.gates[r * 4 * h..(r + 1) * 4 * h];
                let d = &mut dz[r * 4 * h..(r + 1) * 4 * h];
                for j in 0..h {
                    let (i_g, f_g, c_g, o_g) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                    let tc = lt.tanh_c[r * h + j];
                    let dh = dh_above[r * h + j] + dh_rec[bi * h + j];
                    let dc = dc_next[bi * h + j] + dh * o_g * (1.0 - tc * tc);
                    let c_prev = if t > 0 {
                        lt.c[(r - batch) * h + j]
                    } else {
                        0.0
                    };
                    d[j] = dc * c_g * i_g * (1.0 - i_g);
                    d[h + j] = dc * c_prev * f_g * (1.0 - f_g);
                    d[2 * h + j] = dc * i_g * (1.0 - c_g * c_g);
                    d[3 * h + j] = dh * tc * o_g * (1.0 - o_g);
                    dc_next[bi * h + j] = dc * f_g;
                }
            }
            let dz_t = &dz[cur * 4 * h..(cur + batch) * 4 * h];
            if t > 0 {
                gemm(batch, 4 * h, h, dz_t, false, wh, true, 0.0, &mut dh_rec);
                let prev_h = &lt.h[(cur - batch) * h..cur * h];
                gemm(
                    h,
                    batch,
                    4 * h,
                    prev_h,
                    true,
                    dz_t,
                    false,
                    1.0,
                    &mut grads[tensors[3 * l + 1].range()],
                );
            }
        }
        gemm(
            inp,
            rows,
            4 * h,
            &lt.x,
            true,
            &dz,
            false,
            0.0,
            &mut grads[tensors[3 * l].range()],
        );
        {
            let db = &mut grads[tensors[3 * l + 2].range()];
            for row in dz.chunks_exact(4 * h) {
                for (d, v) in db.iter_mut().zip(row) {
                    *d += v;
                }
            }
        }
        if l > 0 {
            gemm(rows, 4 * h, inp, &dz, false, wx, true, 0.0, &mut dh_above);
        }
    }
    Ok(grads)
}
