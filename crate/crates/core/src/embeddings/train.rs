//! Skip-gram training with negative sampling.
//!
//! Parameters live in atomic storage so the same update routine serves both
//! the deterministic single-threaded path and the opt-in lock-free parallel
//! path (unsynchronized concurrent updates over sharded sentences). Each
//! sentence derives its own RNG from (seed, epoch, sentence index), so the
//! sequential schedule is a pure function of the seed.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::{ordered_map, ExecMode};

use super::subword::{word_bucket_indices, SubwordConfig};
use super::vocab::Vocab;
use super::{EmbeddingModel, Matrix};

/// Dense matrix over relaxed atomics, so racing updates are data-race-free.
pub struct AtomicMatrix {
    rows: usize,
    dim: usize,
    data: Vec<AtomicU64>,
}

impl AtomicMatrix {
    fn zeros(rows: usize, dim: usize) -> AtomicMatrix {
        let mut data = Vec::with_capacity(rows * dim);
        data.resize_with(rows * dim, || AtomicU64::new(0f64.to_bits()));
        AtomicMatrix { rows, dim, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn get(&self, row: usize, j: usize) -> f64 {
        f64::from_bits(self.data[row * self.dim + j].load(Ordering::Relaxed))
    }

    #[inline]
    pub fn set(&self, row: usize, j: usize, value: f64) {
        self.data[row * self.dim + j].store(value.to_bits(), Ordering::Relaxed);
    }

    #[inline]
    fn add(&self, row: usize, j: usize, delta: f64) {
        // read-modify-write without CAS: lost updates are acceptable in the
        // parallel mode and impossible in the sequential one
        self.set(row, j, self.get(row, j) + delta);
    }

    fn to_matrix(&self) -> Matrix {
        let data = (0..self.rows * self.dim)
            .map(|i| f64::from_bits(self.data[i].load(Ordering::Relaxed)))
            .collect();
        Matrix { rows: self.rows, dim: self.dim, data }
    }
}

/// Trainable skip-gram parameters: input rows (vocabulary words followed by
/// subword buckets) and output (context) rows.
pub struct SkipgramParams {
    pub dim: usize,
    pub vocab_size: usize,
    input: AtomicMatrix,
    output: AtomicMatrix,
}

impl SkipgramParams {
    /// Word and bucket input rows initialized uniformly in ±0.5/dim,
    /// output rows at zero.
    pub fn init(vocab_size: usize, bucket_rows: usize, dim: usize, seed: u64) -> SkipgramParams {
        let input = AtomicMatrix::zeros(vocab_size + bucket_rows, dim);
        let output = AtomicMatrix::zeros(vocab_size, dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 0.5 / dim as f64;
        for r in 0..input.rows {
            for j in 0..dim {
                input.set(r, j, rng.gen_range(-bound..bound));
            }
        }
        SkipgramParams { dim, vocab_size, input, output }
    }

    pub fn input_rows(&self) -> usize {
        self.input.rows()
    }

    pub fn input_get(&self, row: usize, j: usize) -> f64 {
        self.input.get(row, j)
    }

    pub fn input_set(&self, row: usize, j: usize, value: f64) {
        self.input.set(row, j, value);
    }

    pub fn output_get(&self, row: usize, j: usize) -> f64 {
        self.output.get(row, j)
    }

    pub fn output_set(&self, row: usize, j: usize, value: f64) {
        self.output.set(row, j, value);
    }
}

/// Gradients of one pair loss, one entry per parameter row touched.
/// Rows appearing several times (duplicate n-gram buckets, repeated
/// negatives) get one entry per occurrence; accumulate before comparing.
pub struct PairGrads {
    pub input: Vec<(usize, Vec<f64>)>,
    pub output: Vec<(usize, Vec<f64>)>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// ln(1 + e^x), stable for large |x|.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

struct Scratch {
    composed: Vec<f64>,
    grad_composed: Vec<f64>,
}

impl Scratch {
    fn new(dim: usize) -> Scratch {
        Scratch { composed: vec![0.0; dim], grad_composed: vec![0.0; dim] }
    }
}

/// Forward/backward for one (center, context) pair with negatives.
///
/// The composed center vector is the mean of all `center_rows` (the word
/// row plus its n-gram bucket rows). The loss is
/// `−log σ(u_ctx·v) − Σ log σ(−u_neg·v)`. When `apply_lr` is set the
/// gradients are immediately subtracted, scaled by the learning rate;
/// `collect` additionally returns them (used by gradient checks).
fn pair_step(
    params: &SkipgramParams,
    center_rows: &[usize],
    context: usize,
    negatives: &[usize],
    apply_lr: Option<f64>,
    collect: bool,
    scratch: &mut Scratch,
) -> (f64, Option<PairGrads>) {
    let dim = params.dim;
    let k = center_rows.len() as f64;
    for j in 0..dim {
        let sum: f64 = center_rows.iter().map(|&r| params.input.get(r, j)).sum();
        scratch.composed[j] = sum / k;
        scratch.grad_composed[j] = 0.0;
    }

    let mut grads = collect.then(|| PairGrads { input: Vec::new(), output: Vec::new() });
    let mut loss = 0.0;
    let targets = std::iter::once((context, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0)));
    for (row, label) in targets {
        let dot: f64 = (0..dim).map(|j| params.output.get(row, j) * scratch.composed[j]).sum();
        // −ln σ(x) = softplus(−x); −ln σ(−x) = softplus(x)
        loss += if label == 1.0 { softplus(-dot) } else { softplus(dot) };
        let coef = sigmoid(dot) - label;
        let mut out_grad = collect.then(|| vec![0.0; dim]);
        for j in 0..dim {
            let g = coef * scratch.composed[j];
            scratch.grad_composed[j] += coef * params.output.get(row, j);
            if let Some(v) = out_grad.as_mut() {
                v[j] = g;
            }
            if let Some(lr) = apply_lr {
                params.output.add(row, j, -lr * g);
            }
        }
        if let (Some(grads), Some(v)) = (grads.as_mut(), out_grad) {
            grads.output.push((row, v));
        }
    }

    for &r in center_rows {
        if let Some(lr) = apply_lr {
            for j in 0..dim {
                params.input.add(r, j, -lr * scratch.grad_composed[j] / k);
            }
        }
        if let Some(grads) = grads.as_mut() {
            grads.input.push((r, scratch.grad_composed.iter().map(|g| g / k).collect()));
        }
    }
    (loss, grads)
}

/// Loss of one pair under the current parameters (no update).
pub fn pair_loss(
    params: &SkipgramParams,
    center_rows: &[usize],
    context: usize,
    negatives: &[usize],
) -> f64 {
    let mut scratch = Scratch::new(params.dim);
    pair_step(params, center_rows, context, negatives, None, false, &mut scratch).0
}

/// Loss and analytic gradients of one pair (no update).
pub fn pair_grad(
    params: &SkipgramParams,
    center_rows: &[usize],
    context: usize,
    negatives: &[usize],
) -> (f64, PairGrads) {
    let mut scratch = Scratch::new(params.dim);
    let (loss, grads) =
        pair_step(params, center_rows, context, negatives, None, true, &mut scratch);
    (loss, grads.expect("collected"))
}

/// Skip-gram training options.
#[derive(Debug, Clone)]
pub struct TrainOpts {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
    pub min_count: u64,
    pub subword: SubwordConfig,
    pub seed: u64,
    /// 1 = deterministic sequential training; >1 enables lock-free parallel
    /// updates (nondeterministic).
    pub threads: usize,
}

impl Default for TrainOpts {
    fn default() -> Self {
        TrainOpts {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
            min_count: 1,
            subword: SubwordConfig::default(),
            seed: 1,
            threads: 1,
        }
    }
}

/// Per-epoch training diagnostics.
#[derive(Debug, Clone)]
pub struct TrainLog {
    pub epoch_mean_loss: Vec<f64>,
    pub pairs_per_epoch: usize,
}

use crate::exec::mix_seed;

/// Train skip-gram embeddings on `lines` (one sentence per line, tokens
/// separated by whitespace).
pub fn train_skipgram<S: AsRef<str> + Sync>(
    lines: &[S],
    opts: &TrainOpts,
) -> Result<(EmbeddingModel, TrainLog)> {
    if opts.lr <= 0.0 {
        return Err(Error::Config("learning rate must be positive".into()));
    }
    if opts.epochs == 0 || opts.window == 0 {
        return Err(Error::Config("epochs and window must be at least 1".into()));
    }
    let vocab = Vocab::build(lines, opts.min_count)?;
    let sentences: Vec<Vec<usize>> = lines
        .iter()
        .map(|line| {
            line.as_ref()
                .split_whitespace()
                .filter_map(|t| vocab.get(t))
                .collect::<Vec<usize>>()
        })
        .filter(|s| s.len() >= 2)
        .collect();
    if sentences.is_empty() {
        return Err(Error::Data("no sentence has two in-vocabulary tokens".into()));
    }

    // input rows per word: the word itself plus its hashed n-gram buckets
    let center_rows_table: Vec<Vec<usize>> = (0..vocab.len())
        .map(|w| {
            let mut rows = vec![w];
            if opts.subword.enabled {
                rows.extend(
                    word_bucket_indices(vocab.token(w), &opts.subword)
                        .into_iter()
                        .map(|b| vocab.len() + b),
                );
            }
            rows
        })
        .collect();

    let bucket_rows = if opts.subword.enabled { opts.subword.bucket_count } else { 0 };
    let params = SkipgramParams::init(vocab.len(), bucket_rows, opts.dim, opts.seed);

    let pairs_in = |len: usize| -> usize {
        (0..len).map(|t| t.min(opts.window) + (len - 1 - t).min(opts.window)).sum()
    };
    let pairs_per_epoch: usize = sentences.iter().map(|s| pairs_in(s.len())).sum();
    let total_pairs = pairs_per_epoch * opts.epochs;
    let processed = AtomicUsize::new(0);

    let mode = if opts.threads > 1 { ExecMode::Parallel } else { ExecMode::Sequential };
    let indices: Vec<usize> = (0..sentences.len()).collect();
    let mut epoch_mean_loss = Vec::with_capacity(opts.epochs);

    for epoch in 0..opts.epochs {
        let results = ordered_map(mode, &indices, |&si| {
            let sent = &sentences[si];
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(opts.seed, epoch as u64, si as u64));
            let done = processed.fetch_add(pairs_in(sent.len()), Ordering::Relaxed);
            let progress = done as f64 / total_pairs as f64;
            let lr = opts.lr * (1.0 - progress).max(1e-4);
            let mut scratch = Scratch::new(opts.dim);
            let mut negatives = Vec::with_capacity(opts.negatives);
            let mut loss_sum = 0.0;
            let mut pairs = 0usize;
            for t in 0..sent.len() {
                let lo = t.saturating_sub(opts.window);
                let hi = (t + opts.window).min(sent.len() - 1);
                for c in lo..=hi {
                    if c == t {
                        continue;
                    }
                    let center = sent[t];
                    let context = sent[c];
                    negatives.clear();
                    for _ in 0..opts.negatives {
                        let draw = vocab.sample_negative(&mut rng);
                        if draw != context {
                            negatives.push(draw);
                        }
                    }
                    let (loss, _) = pair_step(
                        &params,
                        &center_rows_table[center],
                        context,
                        &negatives,
                        Some(lr),
                        false,
                        &mut scratch,
                    );
                    loss_sum += loss;
                    pairs += 1;
                }
            }
            (loss_sum, pairs)
        });
        let (loss_sum, pair_count) = results
            .iter()
            .fold((0.0, 0usize), |(l, n), (dl, dn)| (l + dl, n + dn));
        epoch_mean_loss.push(loss_sum / pair_count.max(1) as f64);
    }

    let model = EmbeddingModel {
        dim: opts.dim,
        vocab,
        subword: opts.subword.clone(),
        words: {
            let full = params.input.to_matrix();
            Matrix {
                rows: params.vocab_size,
                dim: opts.dim,
                data: full.data[..params.vocab_size * opts.dim].to_vec(),
            }
        },
        buckets: opts.subword.enabled.then(|| {
            let full = params.input.to_matrix();
            Matrix {
                rows: bucket_rows,
                dim: opts.dim,
                data: full.data[params.vocab_size * opts.dim..].to_vec(),
            }
        }),
        precomposed: false,
    };
    Ok((model, TrainLog { epoch_mean_loss, pairs_per_epoch }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(params: &SkipgramParams, center_rows: &[usize], ctx: usize, negs: &[usize]) {
        let eps = 1e-5;
        let (_, grads) = pair_grad(params, center_rows, ctx, negs);

        // accumulate per (matrix, row, col)
        let mut acc: std::collections::HashMap<(bool, usize, usize), f64> =
            std::collections::HashMap::new();
        for (row, g) in &grads.input {
            for (j, v) in g.iter().enumerate() {
                *acc.entry((true, *row, j)).or_default() += v;
            }
        }
        for (row, g) in &grads.output {
            for (j, v) in g.iter().enumerate() {
                *acc.entry((false, *row, j)).or_default() += v;
            }
        }

        for (&(is_input, row, j), &analytic) in &acc {
            let read = |p: &SkipgramParams| {
                if is_input {
                    p.input_get(row, j)
                } else {
                    p.output_get(row, j)
                }
            };
            let write = |p: &SkipgramParams, v: f64| {
                if is_input {
                    p.input_set(row, j, v)
                } else {
                    p.output_set(row, j, v)
                }
            };
            let orig = read(params);
            write(params, orig + eps);
            let hi = pair_loss(params, center_rows, ctx, negs);
            write(params, orig - eps);
            let lo = pair_loss(params, center_rows, ctx, negs);
            write(params, orig);
            let numeric = (hi - lo) / (2.0 * eps);
            let denom = analytic.abs().max(numeric.abs()).max(1e-8);
            assert!(
                (analytic - numeric).abs() / denom < 1e-6,
                "grad mismatch at ({is_input},{row},{j}): {analytic} vs {numeric}"
            );
        }
    }

    #[test]
    fn pair_gradients_match_finite_differences() {
        // five words, three subword bucket rows, non-trivial values
        let params = SkipgramParams::init(5, 3, 7, 42);
        for r in 0..params.output.rows() {
            for j in 0..params.dim {
                params.output_set(r, j, ((r * 7 + j) as f64).sin() * 0.3);
            }
        }
        // word 0 composed with two bucket rows, one duplicated
        fd_check(&params, &[0, 5, 6, 5], 1, &[2, 3, 3]);
        // no subword composition
        fd_check(&params, &[4], 0, &[1, 2]);
    }

    #[test]
    fn correlated_tokens_end_up_closer_than_controls() {
        // 200 "x y" pairs in a continuous alternating stream, plus
        // unrelated filler around the control token z
        let mut lines: Vec<String> =
            std::iter::repeat_n("x y x y x y x y x y".to_string(), 40).collect();
        for i in 0..100 {
            lines.push(format!("z q{} r{}", i % 3, i % 5));
        }
        let opts = TrainOpts {
            dim: 10,
            window: 2,
            negatives: 5,
            epochs: 50,
            lr: 0.025,
            min_count: 1,
            subword: SubwordConfig::disabled(),
            seed: 9,
            threads: 1,
        };
        let (model, _) = train_skipgram(&lines, &opts).unwrap();
        let cos = |a: &str, b: &str| {
            let (va, _) = model.word_vector(a);
            let (vb, _) = model.word_vector(b);
            super::super::cosine(&va, &vb)
        };
        assert!(
            cos("x", "y") > cos("x", "z"),
            "cos(x,y)={} cos(x,z)={}",
            cos("x", "y"),
            cos("x", "z")
        );
    }

    #[test]
    fn epoch_loss_is_non_increasing_early() {
        let lines: Vec<String> = std::iter::repeat_n("x y".to_string(), 200).collect();
        let opts = TrainOpts {
            dim: 10,
            window: 2,
            negatives: 3,
            epochs: 3,
            lr: 0.05,
            min_count: 1,
            subword: SubwordConfig::disabled(),
            seed: 4,
            threads: 1,
        };
        let (_, log) = train_skipgram(&lines, &opts).unwrap();
        assert!(log.epoch_mean_loss[0] >= log.epoch_mean_loss[1]);
        assert!(log.epoch_mean_loss[1] >= log.epoch_mean_loss[2]);
    }

    #[test]
    fn single_threaded_training_is_byte_deterministic() {
        let lines: Vec<String> = (0..40)
            .map(|i| format!("a{} b{} c{}", i % 5, i % 3, i % 7))
            .collect();
        let opts = TrainOpts {
            dim: 8,
            epochs: 2,
            subword: SubwordConfig { bucket_count: 64, ..SubwordConfig::default() },
            seed: 11,
            ..TrainOpts::default()
        };
        let (a, _) = train_skipgram(&lines, &opts).unwrap();
        let (b, _) = train_skipgram(&lines, &opts).unwrap();
        for w in 0..a.vocab.len() {
            let (va, _) = a.word_vector(a.vocab.token(w));
            let (vb, _) = b.word_vector(b.vocab.token(w));
            assert!(va.iter().zip(&vb).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn empty_vocab_is_an_error() {
        let lines = vec!["a b".to_string()];
        let opts = TrainOpts { min_count: 5, ..TrainOpts::default() };
        assert!(train_skipgram(&lines, &opts).is_err());
    }
}
