//! LSTM cell and bidirectional layer with hand-derived backpropagation.

#![allow(clippy::needless_range_loop)]

use rand::Rng;

use super::store::{GradBuffer, LayoutBuilder, ParamStore, SegId};

/// Gate order used throughout: input, forget, candidate, output.
pub const GATES: [&str; 4] = ["i", "f", "g", "o"];

/// Segment handles of one directional LSTM.
#[derive(Debug, Clone, Copy)]
pub struct LstmSegs {
    pub w_x: [SegId; 4],
    pub w_h: [SegId; 4],
    pub b: [SegId; 4],
    pub input_dim: usize,
    pub hidden: usize,
}

impl LstmSegs {
    pub fn declare(
        builder: &mut LayoutBuilder,
        prefix: &str,
        input_dim: usize,
        hidden: usize,
    ) -> LstmSegs {
        let mut w_x = [SegId::default(); 4];
        let mut w_h = [SegId::default(); 4];
        let mut b = [SegId::default(); 4];
        for (g, name) in GATES.iter().enumerate() {
            w_x[g] = builder.add(format!("{prefix}.w_x{name}"), &[hidden, input_dim]);
            w_h[g] = builder.add(format!("{prefix}.w_h{name}"), &[hidden, hidden]);
            b[g] = builder.add(format!("{prefix}.b{name}"), &[hidden]);
        }
        LstmSegs { w_x, w_h, b, input_dim, hidden }
    }

    /// Xavier-uniform weights; forget-gate bias at 1.0, others zero.
    pub fn init(&self, store: &mut ParamStore, rng: &mut impl Rng) {
        for g in 0..4 {
            let bound = (6.0 / (self.input_dim + self.hidden) as f64).sqrt();
            for w in store.seg_mut(self.w_x[g]) {
                *w = rng.gen_range(-bound..bound);
            }
            let bound = (6.0 / (2 * self.hidden) as f64).sqrt();
            for w in store.seg_mut(self.w_h[g]) {
                *w = rng.gen_range(-bound..bound);
            }
            let bias = if GATES[g] == "f" { 1.0 } else { 0.0 };
            for b in store.seg_mut(self.b[g]) {
                *b = bias;
            }
        }
    }
}

/// Forward activations cached for backpropagation.
#[derive(Debug, Clone)]
pub struct LstmCache {
    /// Per timestep, the post-nonlinearity gate activations (i, f, g, o).
    pub gates: Vec<[Vec<f64>; 4]>,
    pub cell: Vec<Vec<f64>>,
    pub tanh_cell: Vec<Vec<f64>>,
    pub hidden: Vec<Vec<f64>>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn mat_vec(w: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        out[r] += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// Run the recurrence over `inputs` (T × input_dim), starting from zero
/// states.
pub fn lstm_forward(store: &ParamStore, segs: &LstmSegs, inputs: &[Vec<f64>]) -> LstmCache {
    let h_dim = segs.hidden;
    let mut cache = LstmCache {
        gates: Vec::with_capacity(inputs.len()),
        cell: Vec::with_capacity(inputs.len()),
        tanh_cell: Vec::with_capacity(inputs.len()),
        hidden: Vec::with_capacity(inputs.len()),
    };
    let zero = vec![0.0; h_dim];
    for (t, x) in inputs.iter().enumerate() {
        let h_prev = if t == 0 { &zero } else { &cache.hidden[t - 1] };
        let c_prev = if t == 0 { &zero } else { &cache.cell[t - 1] };
        let mut pre = [vec![0.0; h_dim], vec![0.0; h_dim], vec![0.0; h_dim], vec![0.0; h_dim]];
        for g in 0..4 {
            pre[g].copy_from_slice(store.seg(segs.b[g]));
            mat_vec(store.seg(segs.w_x[g]), h_dim, segs.input_dim, x, &mut pre[g]);
            mat_vec(store.seg(segs.w_h[g]), h_dim, h_dim, h_prev, &mut pre[g]);
        }
        let gates = [
            pre[0].iter().map(|&z| sigmoid(z)).collect::<Vec<f64>>(),
            pre[1].iter().map(|&z| sigmoid(z)).collect::<Vec<f64>>(),
            pre[2].iter().map(|&z| z.tanh()).collect::<Vec<f64>>(),
            pre[3].iter().map(|&z| sigmoid(z)).collect::<Vec<f64>>(),
        ];
        let cell: Vec<f64> = (0..h_dim)
            .map(|j| gates[1][j] * c_prev[j] + gates[0][j] * gates[2][j])
            .collect();
        let tanh_cell: Vec<f64> = cell.iter().map(|c| c.tanh()).collect();
        let hidden: Vec<f64> = (0..h_dim).map(|j| gates[3][j] * tanh_cell[j]).collect();
        cache.gates.push(gates);
        cache.cell.push(cell);
        cache.tanh_cell.push(tanh_cell);
        cache.hidden.push(hidden);
    }
    cache
}

/// Backpropagate `d_hidden` (upstream gradient on every h_t) through the
/// recurrence; accumulates parameter gradients and returns input gradients.
pub fn lstm_backward(
    store: &ParamStore,
    segs: &LstmSegs,
    inputs: &[Vec<f64>],
    cache: &LstmCache,
    d_hidden: &[Vec<f64>],
    grads: &mut GradBuffer,
) -> Vec<Vec<f64>> {
    let h_dim = segs.hidden;
    let len = inputs.len();
    let zero = vec![0.0; h_dim];
    let mut d_inputs = vec![vec![0.0; segs.input_dim]; len];
    let mut dh_next = vec![0.0; h_dim];
    let mut dc_next = vec![0.0; h_dim];

    for t in (0..len).rev() {
        let h_prev = if t == 0 { &zero } else { &cache.hidden[t - 1] };
        let c_prev = if t == 0 { &zero } else { &cache.cell[t - 1] };
        let [gi, gf, gg, go] = &cache.gates[t];
        let tanh_c = &cache.tanh_cell[t];

        let mut d_pre = [vec![0.0; h_dim], vec![0.0; h_dim], vec![0.0; h_dim], vec![0.0; h_dim]];
        for j in 0..h_dim {
            let dh = d_hidden[t][j] + dh_next[j];
            let d_o = dh * tanh_c[j];
            let dc = dh * go[j] * (1.0 - tanh_c[j] * tanh_c[j]) + dc_next[j];
            let d_i = dc * gg[j];
            let d_g = dc * gi[j];
            let d_f = dc * c_prev[j];
            dc_next[j] = dc * gf[j];
            d_pre[0][j] = d_i * gi[j] * (1.0 - gi[j]);
            d_pre[1][j] = d_f * gf[j] * (1.0 - gf[j]);
            d_pre[2][j] = d_g * (1.0 - gg[j] * gg[j]);
            d_pre[3][j] = d_o * go[j] * (1.0 - go[j]);
        }

        dh_next.iter_mut().for_each(|d| *d = 0.0);
        for g in 0..4 {
            let w_x = store.seg(segs.w_x[g]);
            let w_h = store.seg(segs.w_h[g]);
            {
                let gw_x = grads.seg_mut(&store.layout, segs.w_x[g]);
                for r in 0..h_dim {
                    let d = d_pre[g][r];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut gw_x[r * segs.input_dim..(r + 1) * segs.input_dim];
                    for (gw, x) in row.iter_mut().zip(&inputs[t]) {
                        *gw += d * x;
                    }
                }
            }
            {
                let gw_h = grads.seg_mut(&store.layout, segs.w_h[g]);
                for r in 0..h_dim {
                    let d = d_pre[g][r];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut gw_h[r * h_dim..(r + 1) * h_dim];
                    for (gw, h) in row.iter_mut().zip(h_prev) {
                        *gw += d * h;
                    }
                }
            }
            {
                let gb = grads.seg_mut(&store.layout, segs.b[g]);
                for (gb, d) in gb.iter_mut().zip(&d_pre[g]) {
                    *gb += d;
                }
            }
            for r in 0..h_dim {
                let d = d_pre[g][r];
                if d == 0.0 {
                    continue;
                }
                let row_x = &w_x[r * segs.input_dim..(r + 1) * segs.input_dim];
                for (dx, w) in d_inputs[t].iter_mut().zip(row_x) {
                    *dx += d * w;
                }
                let row_h = &w_h[r * h_dim..(r + 1) * h_dim];
                for (dh, w) in dh_next.iter_mut().zip(row_h) {
                    *dh += d * w;
                }
            }
        }
    }
    d_inputs
}

/// Segment handles of a bidirectional layer.
#[derive(Debug, Clone, Copy)]
pub struct BiLstmSegs {
    pub fwd: LstmSegs,
    pub bwd: LstmSegs,
}

impl BiLstmSegs {
    pub fn declare(
        builder: &mut LayoutBuilder,
        prefix: &str,
        input_dim: usize,
        hidden: usize,
    ) -> BiLstmSegs {
        BiLstmSegs {
            fwd: LstmSegs::declare(builder, &format!("{prefix}.fwd"), input_dim, hidden),
            bwd: LstmSegs::declare(builder, &format!("{prefix}.bwd"), input_dim, hidden),
        }
    }

    pub fn init(&self, store: &mut ParamStore, rng: &mut impl Rng) {
        self.fwd.init(store, rng);
        self.bwd.init(store, rng);
    }
}

/// Forward + backward passes concatenated per position (T × 2H).
pub struct BiLstmCache {
    pub fwd: LstmCache,
    pub bwd: LstmCache,
}

pub fn bilstm_forward(
    store: &ParamStore,
    segs: &BiLstmSegs,
    inputs: &[Vec<f64>],
) -> (Vec<Vec<f64>>, BiLstmCache) {
    let fwd = lstm_forward(store, &segs.fwd, inputs);
    let reversed: Vec<Vec<f64>> = inputs.iter().rev().cloned().collect();
    let bwd = lstm_forward(store, &segs.bwd, &reversed);
    let len = inputs.len();
    let outputs = (0..len)
        .map(|t| {
            let mut v = fwd.hidden[t].clone();
            v.extend_from_slice(&bwd.hidden[len - 1 - t]);
            v
        })
        .collect();
    (outputs, BiLstmCache { fwd, bwd })
}

pub fn bilstm_backward(
    store: &ParamStore,
    segs: &BiLstmSegs,
    inputs: &[Vec<f64>],
    cache: &BiLstmCache,
    d_out: &[Vec<f64>],
    grads: &mut GradBuffer,
) -> Vec<Vec<f64>> {
    let len = inputs.len();
    let hidden = segs.fwd.hidden;
    let d_fwd: Vec<Vec<f64>> = d_out.iter().map(|d| d[..hidden].to_vec()).collect();
    let d_bwd: Vec<Vec<f64>> = (0..len)
        .map(|t| d_out[len - 1 - t][hidden..].to_vec())
        .collect();
    let mut d_inputs = lstm_backward(store, &segs.fwd, inputs, &cache.fwd, &d_fwd, grads);
    let reversed: Vec<Vec<f64>> = inputs.iter().rev().cloned().collect();
    let d_rev = lstm_backward(store, &segs.bwd, &reversed, &cache.bwd, &d_bwd, grads);
    for (t, d) in d_rev.into_iter().enumerate() {
        for (a, b) in d_inputs[len - 1 - t].iter_mut().zip(d) {
            *a += b;
        }
    }
    d_inputs
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(input_dim: usize, hidden: usize, seed: u64) -> (ParamStore, LstmSegs) {
        let mut builder = LayoutBuilder::new();
        let segs = LstmSegs::declare(&mut builder, "lstm", input_dim, hidden);
        let mut store = ParamStore::zeros(builder.finish());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        segs.init(&mut store, &mut rng);
        // non-default biases make the gradient check less symmetric
        for g in 0..4 {
            for b in store.seg_mut(segs.b[g]) {
                *b += rng.gen_range(-0.2..0.2);
            }
        }
        (store, segs)
    }

    #[test]
    fn zero_weights_give_zero_hidden_states() {
        let mut builder = LayoutBuilder::new();
        let segs = LstmSegs::declare(&mut builder, "lstm", 3, 4);
        let store = ParamStore::zeros(builder.finish());
        let inputs = vec![vec![1.0, -2.0, 0.5]; 5];
        let cache = lstm_forward(&store, &segs, &inputs);
        // g = tanh(0) = 0 forces c = 0 and h = 0 at every step
        for h in &cache.hidden {
            assert!(h.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn length_one_equals_single_cell_application() {
        let (store, segs) = setup(3, 4, 5);
        let x = vec![0.3, -0.7, 1.1];
        let seq = lstm_forward(&store, &segs, std::slice::from_ref(&x));
        let pair = lstm_forward(&store, &segs, &[x.clone(), x.clone()]);
        assert_eq!(seq.hidden[0], pair.hidden[0]);
    }

    fn loss_of(store: &ParamStore, segs: &LstmSegs, inputs: &[Vec<f64>]) -> f64 {
        // weighted sum of all hidden states, a smooth scalar objective
        let cache = lstm_forward(store, segs, inputs);
        cache
            .hidden
            .iter()
            .enumerate()
            .map(|(t, h)| {
                h.iter()
                    .enumerate()
                    .map(|(j, x)| x * ((t + 1) as f64 * 0.4 - j as f64 * 0.3))
                    .sum::<f64>()
            })
            .sum()
    }

    #[test]
    fn backward_matches_finite_differences() {
        let (mut store, segs) = setup(2, 3, 9);
        let inputs = vec![vec![0.4, -0.2], vec![-0.9, 0.6]];
        let cache = lstm_forward(&store, &segs, &inputs);
        let d_hidden: Vec<Vec<f64>> = (0..inputs.len())
            .map(|t| {
                (0..3).map(|j| (t + 1) as f64 * 0.4 - j as f64 * 0.3).collect()
            })
            .collect();
        let mut grads = GradBuffer::zeros(&store.layout);
        let d_inputs = lstm_backward(&store, &segs, &inputs, &cache, &d_hidden, &mut grads);

        let eps = 1e-5;
        for p in 0..store.len() {
            let orig = store.data[p];
            store.data[p] = orig + eps;
            let hi = loss_of(&store, &segs, &inputs);
            store.data[p] = orig - eps;
            let lo = loss_of(&store, &segs, &inputs);
            store.data[p] = orig;
            let numeric = (hi - lo) / (2.0 * eps);
            let analytic = grads.data[p];
            let denom = analytic.abs().max(numeric.abs()).max(1e-6);
            assert!(
                (analytic - numeric).abs() / denom < 1e-5,
                "param {p}: {analytic} vs {numeric}"
            );
        }
        // input gradients too
        let mut inputs_fd = inputs.clone();
        for t in 0..inputs.len() {
            for j in 0..2 {
                let orig = inputs_fd[t][j];
                inputs_fd[t][j] = orig + eps;
                let hi = loss_of(&store, &segs, &inputs_fd);
                inputs_fd[t][j] = orig - eps;
                let lo = loss_of(&store, &segs, &inputs_fd);
                inputs_fd[t][j] = orig;
                let numeric = (hi - lo) / (2.0 * eps);
                let analytic = d_inputs[t][j];
                let denom = analytic.abs().max(numeric.abs()).max(1e-6);
                assert!((analytic - numeric).abs() / denom < 1e-5);
            }
        }
    }

    #[test]
    fn bilstm_output_reacts_to_every_input_position() {
        let mut builder = LayoutBuilder::new();
        let segs = BiLstmSegs::declare(&mut builder, "bi", 2, 3);
        let mut store = ParamStore::zeros(builder.finish());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        segs.init(&mut store, &mut rng);
        let inputs = vec![vec![0.1, 0.2], vec![-0.4, 0.5], vec![0.8, -0.3]];
        let (base, _) = bilstm_forward(&store, &segs, &inputs);
        // full-context sensitivity: every output position shifts when any
        // single input changes
        for changed in 0..inputs.len() {
            let mut altered = inputs.clone();
            altered[changed][0] += 0.7;
            let (out, _) = bilstm_forward(&store, &segs, &altered);
            for t in 0..inputs.len() {
                let diff: f64 = out[t]
                    .iter()
                    .zip(&base[t])
                    .map(|(a, b)| (a - b).abs())
                    .sum();
                assert!(diff > 1e-9, "position {t} ignored a change at {changed}");
            }
        }
    }
}
