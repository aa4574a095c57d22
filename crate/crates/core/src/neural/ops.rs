//! Shared layer primitives: linear projection, softmax cross-entropy,
//! inverted dropout and 1-D convolution with global max-pooling.

use rand::Rng;

use super::store::{GradBuffer, ParamStore, SegId};

/// y = W·x + b for one input vector.
pub fn linear_forward(
    store: &ParamStore,
    w: SegId,
    b: SegId,
    x: &[f64],
    out_dim: usize,
) -> Vec<f64> {
    let weights = store.seg(w);
    let bias = store.seg(b);
    let in_dim = x.len();
    (0..out_dim)
        .map(|r| {
            bias[r]
                + weights[r * in_dim..(r + 1) * in_dim]
                    .iter()
                    .zip(x)
                    .map(|(w, x)| w * x)
                    .sum::<f64>()
        })
        .collect()
}

/// Backward of [`linear_forward`]; returns dL/dx.
pub fn linear_backward(
    store: &ParamStore,
    w: SegId,
    b: SegId,
    x: &[f64],
    d_out: &[f64],
    grads: &mut GradBuffer,
) -> Vec<f64> {
    let in_dim = x.len();
    {
        let gw = grads.seg_mut(&store.layout, w);
        for (r, d) in d_out.iter().enumerate() {
            if *d == 0.0 {
                continue;
            }
            let row = &mut gw[r * in_dim..(r + 1) * in_dim];
            for (g, xv) in row.iter_mut().zip(x) {
                *g += d * xv;
            }
        }
    }
    {
        let gb = grads.seg_mut(&store.layout, b);
        for (g, d) in gb.iter_mut().zip(d_out) {
            *g += d;
        }
    }
    let weights = store.seg(w);
    let mut dx = vec![0.0; in_dim];
    for (r, d) in d_out.iter().enumerate() {
        if *d == 0.0 {
            continue;
        }
        let row = &weights[r * in_dim..(r + 1) * in_dim];
        for (dx, w) in dx.iter_mut().zip(row) {
            *dx += d * w;
        }
    }
    dx
}

/// Numerically stable log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + logits.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    logits.iter().map(|x| x - log_z).collect()
}

/// Cross-entropy of one gold class; returns (loss, dL/dlogits).
pub fn softmax_xent(logits: &[f64], gold: usize) -> (f64, Vec<f64>) {
    let log_probs = log_softmax(logits);
    let loss = -log_probs[gold];
    let mut d = log_probs.iter().map(|lp| lp.exp()).collect::<Vec<f64>>();
    d[gold] -= 1.0;
    (loss, d)
}

/// Inverted dropout mask: elements are 0 with probability `p`, else
/// 1/(1−p), so inference needs no rescaling.
pub fn dropout_mask(len: usize, p: f64, rng: &mut impl Rng) -> Vec<f64> {
    assert!((0.0..1.0).contains(&p), "dropout rate outside [0, 1)");
    if p == 0.0 {
        return vec![1.0; len];
    }
    let keep = 1.0 / (1.0 - p);
    (0..len).map(|_| if rng.gen_bool(p) { 0.0 } else { keep }).collect()
}

pub fn apply_mask(values: &mut [f64], mask: &[f64]) {
    for (v, m) in values.iter_mut().zip(mask) {
        *v *= m;
    }
}

/// Cache of one conv + max-pool application.
pub struct ConvCache {
    /// Inputs after left-zero-padding to at least the kernel size.
    pub padded: Vec<Vec<f64>>,
    /// Pre-ReLU activations, (T−k+1) × filters.
    pub pre_relu: Vec<Vec<f64>>,
    /// Arg-max window per filter (first maximum on ties).
    pub argmax: Vec<usize>,
}

/// Valid 1-D convolution over time, ReLU, then max over time per filter.
/// Sequences shorter than the kernel are left-zero-padded to the kernel
/// size. `w` has shape `[filters, kernel·dim]`, `b` `[filters]`.
pub fn conv1d_maxpool_forward(
    store: &ParamStore,
    w: SegId,
    b: SegId,
    inputs: &[Vec<f64>],
    kernel: usize,
    filters: usize,
) -> (Vec<f64>, ConvCache) {
    let dim = inputs.first().map(|x| x.len()).unwrap_or(0);
    let mut padded: Vec<Vec<f64>> = Vec::new();
    if inputs.len() < kernel {
        padded.extend(std::iter::repeat_n(vec![0.0; dim], kernel - inputs.len()));
    }
    padded.extend(inputs.iter().cloned());

    let windows = padded.len() - kernel + 1;
    let weights = store.seg(w);
    let bias = store.seg(b);
    let mut pre_relu = vec![vec![0.0; filters]; windows];
    for t in 0..windows {
        for f in 0..filters {
            let mut acc = bias[f];
            let wrow = &weights[f * kernel * dim..(f + 1) * kernel * dim];
            for dt in 0..kernel {
                let x = &padded[t + dt];
                let wseg = &wrow[dt * dim..(dt + 1) * dim];
                acc += wseg.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            }
            pre_relu[t][f] = acc;
        }
    }

    let mut pooled = vec![0.0; filters];
    let mut argmax = vec![0usize; filters];
    for f in 0..filters {
        let mut best = f64::NEG_INFINITY;
        let mut best_t = 0;
        for (t, row) in pre_relu.iter().enumerate() {
            let act = row[f].max(0.0);
            if act > best {
                best = act;
                best_t = t;
            }
        }
        pooled[f] = best;
        argmax[f] = best_t;
    }
    (pooled, ConvCache { padded, pre_relu, argmax })
}

/// Backward of [`conv1d_maxpool_forward`]; returns gradients on the
/// unpadded inputs.
#[allow(clippy::too_many_arguments)]
pub fn conv1d_maxpool_backward(
    store: &ParamStore,
    w: SegId,
    b: SegId,
    cache: &ConvCache,
    d_pooled: &[f64],
    kernel: usize,
    input_len: usize,
    grads: &mut GradBuffer,
) -> Vec<Vec<f64>> {
    let filters = d_pooled.len();
    let dim = cache.padded.first().map(|x| x.len()).unwrap_or(0);
    let pad = cache.padded.len() - input_len;
    let mut d_padded = vec![vec![0.0; dim]; cache.padded.len()];

    let weights = store.seg(w);
    for f in 0..filters {
        let t = cache.argmax[f];
        // max-pool routes to the winning window; ReLU gates it
        if cache.pre_relu[t][f] <= 0.0 || d_pooled[f] == 0.0 {
            continue;
        }
        let d = d_pooled[f];
        {
            let gb = grads.seg_mut(&store.layout, b);
            gb[f] += d;
        }
        let gw = grads.seg_mut(&store.layout, w);
        let wrow_g = &mut gw[f * kernel * dim..(f + 1) * kernel * dim];
        for dt in 0..kernel {
            let x = &cache.padded[t + dt];
            let gseg = &mut wrow_g[dt * dim..(dt + 1) * dim];
            for (g, xv) in gseg.iter_mut().zip(x) {
                *g += d * xv;
            }
        }
        let wrow = &weights[f * kernel * dim..(f + 1) * kernel * dim];
        for dt in 0..kernel {
            let wseg = &wrow[dt * dim..(dt + 1) * dim];
            for (dx, wv) in d_padded[t + dt].iter_mut().zip(wseg) {
                *dx += d * wv;
            }
        }
    }
    d_padded.split_off(pad)
}
