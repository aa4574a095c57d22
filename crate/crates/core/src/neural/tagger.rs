//! Bidirectional LSTM slot tagger with a per-token softmax or a jointly
//! trained CRF output layer.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::crf::inference;
use crate::data::{spans_from_bio, SlotSpan, Utterance};
use crate::embeddings::EmbeddingModel;
use crate::error::{Error, Result};

use super::lstm::{bilstm_backward, bilstm_forward, BiLstmCache, BiLstmSegs};
use super::ops::{apply_mask, dropout_mask, linear_backward, linear_forward, softmax_xent};
use super::store::{GradBuffer, LayoutBuilder, ParamStore, SegId};

/// Output layer: independent per-token softmax or a CRF whose transition
/// matrix is trained jointly with the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputMode {
    Softmax,
    Crf,
}

/// Architecture and regularization knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggerConfig {
    pub embed_dim: usize,
    pub hidden: usize,
    /// 1 or 2 biLSTM layers.
    pub layers: usize,
    pub dropout_embed: f64,
    pub dropout_lstm: f64,
    pub output: OutputMode,
    /// Keep pretrained embedding rows fixed during training.
    pub freeze_embeddings: bool,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            embed_dim: 50,
            hidden: 64,
            layers: 1,
            dropout_embed: 0.1,
            dropout_lstm: 0.1,
            output: OutputMode::Softmax,
            freeze_embeddings: false,
        }
    }
}

#[derive(Debug, Clone)]
struct TaggerSegs {
    embed: SegId,
    layers: Vec<BiLstmSegs>,
    proj_w: SegId,
    proj_b: SegId,
    transitions: Option<SegId>,
}

/// The tagger: token embedding table, stacked biLSTM layers, a linear
/// projection to label scores and the optional CRF transition matrix.
#[derive(Debug, Clone)]
pub struct BiLstmTagger {
    pub config: TaggerConfig,
    pub labels: Vec<String>,
    /// Token inventory; index 0 is the unknown-word symbol.
    pub vocab: Vec<String>,
    vocab_index: HashMap<String, usize>,
    pub store: ParamStore,
    segs: TaggerSegs,
}

pub const UNK: &str = "<unk>";

fn declare(config: &TaggerConfig, vocab_len: usize, n_labels: usize) -> (TaggerSegs, ParamStore) {
    let mut builder = LayoutBuilder::new();
    let embed = builder.add("embed", &[vocab_len, config.embed_dim]);
    let mut layers = Vec::new();
    let mut input_dim = config.embed_dim;
    for l in 0..config.layers {
        layers.push(BiLstmSegs::declare(
            &mut builder,
            &format!("bilstm{l}"),
            input_dim,
            config.hidden,
        ));
        input_dim = 2 * config.hidden;
    }
    let proj_w = builder.add("proj.w", &[n_labels, input_dim]);
    let proj_b = builder.add("proj.b", &[n_labels]);
    let transitions = matches!(config.output, OutputMode::Crf)
        .then(|| builder.add("crf.transitions", &[n_labels, n_labels]));
    let segs = TaggerSegs { embed, layers, proj_w, proj_b, transitions };
    (segs, ParamStore::zeros(builder.finish()))
}

impl BiLstmTagger {
    /// Build and initialize a tagger. `pretrained` seeds the embedding
    /// table (subword composition covers corpus words missing from the
    /// embedding vocabulary); the projection starts at zero so the initial
    /// score distribution is uniform.
    pub fn new(
        config: TaggerConfig,
        labels: Vec<String>,
        vocab: Vec<String>,
        seed: u64,
        pretrained: Option<&EmbeddingModel>,
    ) -> Result<BiLstmTagger> {
        if !(1..=2).contains(&config.layers) {
            return Err(Error::Config(format!("layers must be 1 or 2, got {}", config.layers)));
        }
        if let Some(model) = pretrained {
            if model.dim != config.embed_dim {
                return Err(Error::Config(format!(
                    "pretrained dimension {} != embed_dim {}",
                    model.dim, config.embed_dim
                )));
            }
        }
        let (segs, mut store) = declare(&config, vocab.len(), labels.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        {
            let embed = store.seg_mut(segs.embed);
            for x in embed.iter_mut() {
                *x = rng.gen_range(-0.1..0.1);
            }
        }
        if let Some(model) = pretrained {
            for (i, token) in vocab.iter().enumerate() {
                let (v, _) = model.word_vector(token);
                if v.iter().any(|&x| x != 0.0) {
                    let embed = store.seg_mut(segs.embed);
                    embed[i * config.embed_dim..(i + 1) * config.embed_dim]
                        .copy_from_slice(&v);
                }
            }
        }
        for layer in &segs.layers {
            layer.init(&mut store, &mut rng);
        }
        let vocab_index = vocab.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(BiLstmTagger { config, labels, vocab, vocab_index, store, segs })
    }

    pub fn token_ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens
            .iter()
            .map(|t| self.vocab_index.get(t).copied().unwrap_or(0))
            .collect()
    }

    pub fn label_index(&self, tag: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == tag)
            .ok_or_else(|| Error::Schema(format!("tag '{tag}' missing from label set")))
    }

    fn forward(
        &self,
        ids: &[usize],
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> (Vec<Vec<f64>>, TagCache) {
        let dim = self.config.embed_dim;
        let mut embedded: Vec<Vec<f64>> =
            ids.iter().map(|&i| self.store.row(self.segs.embed, i).to_vec()).collect();

        let mut masks: Vec<Vec<Vec<f64>>> = Vec::new();
        let mut rng = dropout_rng;
        if let Some(rng) = rng.as_mut() {
            let mask: Vec<Vec<f64>> = (0..ids.len())
                .map(|_| dropout_mask(dim, self.config.dropout_embed, rng))
                .collect();
            for (x, m) in embedded.iter_mut().zip(&mask) {
                apply_mask(x, m);
            }
            masks.push(mask);
        }

        let mut layer_inputs = vec![embedded];
        let mut layer_caches: Vec<BiLstmCache> = Vec::new();
        for (l, layer) in self.segs.layers.iter().enumerate() {
            let (mut out, cache) =
                bilstm_forward(&self.store, layer, &layer_inputs[l]);
            if let Some(rng) = rng.as_mut() {
                let mask: Vec<Vec<f64>> = (0..out.len())
                    .map(|_| dropout_mask(2 * self.config.hidden, self.config.dropout_lstm, rng))
                    .collect();
                for (x, m) in out.iter_mut().zip(&mask) {
                    apply_mask(x, m);
                }
                masks.push(mask);
            }
            layer_caches.push(cache);
            layer_inputs.push(out);
        }

        let scores: Vec<Vec<f64>> = layer_inputs
            .last()
            .expect("at least the embedding level")
            .iter()
            .map(|h| {
                linear_forward(&self.store, self.segs.proj_w, self.segs.proj_b, h, self.labels.len())
            })
            .collect();
        (scores, TagCache { ids: ids.to_vec(), layer_inputs, layer_caches, masks })
    }

    fn backward(&self, cache: &TagCache, d_scores: &[Vec<f64>], grads: &mut GradBuffer) {
        let top = cache.layer_inputs.len() - 1;
        let mut d_layer: Vec<Vec<f64>> = cache.layer_inputs[top]
            .iter()
            .zip(d_scores)
            .map(|(h, d)| {
                linear_backward(&self.store, self.segs.proj_w, self.segs.proj_b, h, d, grads)
            })
            .collect();

        let with_dropout = !cache.masks.is_empty();
        for l in (0..self.segs.layers.len()).rev() {
            if with_dropout {
                // mask index l+1 covers this layer's output
                for (d, m) in d_layer.iter_mut().zip(&cache.masks[l + 1]) {
                    apply_mask(d, m);
                }
            }
            d_layer = bilstm_backward(
                &self.store,
                &self.segs.layers[l],
                &cache.layer_inputs[l],
                &cache.layer_caches[l],
                &d_layer,
                grads,
            );
        }
        if with_dropout {
            for (d, m) in d_layer.iter_mut().zip(&cache.masks[0]) {
                apply_mask(d, m);
            }
        }
        for (t, &id) in cache.ids.iter().enumerate() {
            let row = grads.row_mut(&self.store.layout, self.segs.embed, id);
            for (g, d) in row.iter_mut().zip(&d_layer[t]) {
                *g += d;
            }
        }
    }

    fn transitions_nested(&self) -> Vec<Vec<f64>> {
        let n = self.labels.len();
        let seg = self.store.seg(self.segs.transitions.expect("crf mode"));
        (0..n).map(|a| seg[a * n..(a + 1) * n].to_vec()).collect()
    }

    fn loss_impl(
        &self,
        ids: &[usize],
        gold: &[usize],
        dropout_rng: Option<&mut ChaCha8Rng>,
        grads: &mut GradBuffer,
    ) -> f64 {
        let (scores, cache) = self.forward(ids, dropout_rng);
        let (loss, d_scores) = match self.config.output {
            OutputMode::Softmax => {
                // mean token cross-entropy
                let len = ids.len() as f64;
                let mut d_all = Vec::with_capacity(scores.len());
                let mut total = 0.0;
                for (logits, &g) in scores.iter().zip(gold) {
                    let (l, mut d) = softmax_xent(logits, g);
                    total += l;
                    d.iter_mut().for_each(|x| *x /= len);
                    d_all.push(d);
                }
                (total / len, d_all)
            }
            OutputMode::Crf => {
                let trans = self.transitions_nested();
                let (nll, d_scores, d_trans) = inference::nll_grad_scores(&scores, &trans, gold);
                let seg = self.segs.transitions.expect("crf mode");
                let g = grads.seg_mut(&self.store.layout, seg);
                let n = self.labels.len();
                for a in 0..n {
                    for b in 0..n {
                        g[a * n + b] += d_trans[a][b];
                    }
                }
                (nll, d_scores)
            }
        };
        self.backward(&cache, &d_scores, grads);
        loss
    }

    /// Loss and full-parameter gradient of one utterance with dropout off
    /// (training applies dropout internally; this entry point is
    /// deterministic, which gradient verification relies on).
    pub fn tag_loss(&self, utt: &Utterance) -> Result<(f64, GradBuffer)> {
        let ids = self.token_ids(&utt.tokens);
        let gold: Vec<usize> = utt
            .slot_tags
            .iter()
            .map(|t| self.label_index(t))
            .collect::<Result<_>>()?;
        let mut grads = GradBuffer::zeros(&self.store.layout);
        let loss = self.loss_impl(&ids, &gold, None, &mut grads);
        Ok((loss, grads))
    }

    /// Decode one token sequence: Viterbi in CRF mode, per-token argmax in
    /// softmax mode (ties toward the lower label index), then BIO repair.
    pub fn predict(&self, tokens: &[String]) -> Result<(Vec<String>, Vec<SlotSpan>)> {
        if tokens.is_empty() {
            return Ok((Vec::new(), Vec::new()));
        }
        let ids = self.token_ids(tokens);
        let (scores, _) = self.forward(&ids, None);
        let path: Vec<usize> = match self.config.output {
            OutputMode::Crf => inference::viterbi(&scores, &self.transitions_nested()),
            OutputMode::Softmax => scores
                .iter()
                .map(|row| {
                    let mut best = 0;
                    for y in 1..row.len() {
                        if row[y] > row[best] {
                            best = y;
                        }
                    }
                    best
                })
                .collect(),
        };
        let tags: Vec<String> = path.iter().map(|&y| self.labels[y].clone()).collect();
        let spans = spans_from_bio(&tags)?;
        Ok((tags, spans))
    }

    pub(super) fn segs_embed(&self) -> SegId {
        self.segs.embed
    }

    #[cfg(test)]
    pub(super) fn set_transitions(&mut self, values: &[f64]) {
        let seg = self.segs.transitions.expect("crf mode");
        self.store.seg_mut(seg).copy_from_slice(values);
    }

    #[cfg(test)]
    pub(super) fn set_proj_bias(&mut self, values: &[f64]) {
        self.store.seg_mut(self.segs.proj_b).copy_from_slice(values);
    }

    pub(super) fn train_step_loss(
        &self,
        ids: &[usize],
        gold: &[usize],
        rng: &mut ChaCha8Rng,
        grads: &mut GradBuffer,
    ) -> f64 {
        let use_dropout = self.config.dropout_embed > 0.0 || self.config.dropout_lstm > 0.0;
        self.loss_impl(ids, gold, use_dropout.then_some(rng), grads)
    }
}

struct TagCache {
    ids: Vec<usize>,
    /// `layer_inputs[0]` is the (masked) embedding; `layer_inputs[l+1]` the
    /// (masked) output of biLSTM layer `l`.
    layer_inputs: Vec<Vec<Vec<f64>>>,
    layer_caches: Vec<BiLstmCache>,
    masks: Vec<Vec<Vec<f64>>>,
}
