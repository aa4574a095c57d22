//! Convolutional intent classifier: shared 1-D conv encoder with global
//! max-pooling and one softmax head per intent axis.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{IntentAxis, Utterance};
use crate::embeddings::EmbeddingModel;
use crate::error::{Error, Result};

use super::ops::{
    conv1d_maxpool_backward, conv1d_maxpool_forward, linear_backward, linear_forward,
    softmax_xent,
};
use super::store::{GradBuffer, LayoutBuilder, ParamStore, SegId};

/// Architecture knobs. With `shared_encoder` every head reads one conv
/// encoder; otherwise each axis gets its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentConfig {
    pub embed_dim: usize,
    /// Convolution kernel size (2..=5 in the tuning grid).
    pub kernel: usize,
    /// Number of filters (50..=250 in the tuning grid).
    pub filters: usize,
    pub shared_encoder: bool,
    pub freeze_embeddings: bool,
}

impl Default for IntentConfig {
    fn default() -> Self {
        IntentConfig {
            embed_dim: 50,
            kernel: 3,
            filters: 64,
            shared_encoder: true,
            freeze_embeddings: false,
        }
    }
}

#[derive(Debug, Clone)]
struct IntentSegs {
    embed: SegId,
    /// One (weights, bias) per encoder: a single shared one, or one per axis.
    convs: Vec<(SegId, SegId)>,
    heads: Vec<(SegId, SegId)>,
}

/// The classifier. Head output sizes match the schema axis cardinalities.
#[derive(Debug, Clone)]
pub struct CnnIntentClassifier {
    pub config: IntentConfig,
    pub axes: Vec<IntentAxis>,
    pub vocab: Vec<String>,
    vocab_index: HashMap<String, usize>,
    pub store: ParamStore,
    segs: IntentSegs,
}

impl CnnIntentClassifier {
    pub fn new(
        config: IntentConfig,
        axes: Vec<IntentAxis>,
        vocab: Vec<String>,
        seed: u64,
        pretrained: Option<&EmbeddingModel>,
    ) -> Result<CnnIntentClassifier> {
        if !(2..=5).contains(&config.kernel) {
            return Err(Error::Config(format!("kernel must be in 2..=5, got {}", config.kernel)));
        }
        if axes.is_empty() {
            return Err(Error::Config("no intent axes".into()));
        }
        if let Some(model) = pretrained {
            if model.dim != config.embed_dim {
                return Err(Error::Config(format!(
                    "pretrained dimension {} != embed_dim {}",
                    model.dim, config.embed_dim
                )));
            }
        }
        let mut builder = LayoutBuilder::new();
        let embed = builder.add("embed", &[vocab.len(), config.embed_dim]);
        let n_encoders = if config.shared_encoder { 1 } else { axes.len() };
        let convs: Vec<(SegId, SegId)> = (0..n_encoders)
            .map(|e| {
                (
                    builder.add(
                        format!("conv{e}.w"),
                        &[config.filters, config.kernel * config.embed_dim],
                    ),
                    builder.add(format!("conv{e}.b"), &[config.filters]),
                )
            })
            .collect();
        let heads: Vec<(SegId, SegId)> = axes
            .iter()
            .map(|axis| {
                (
                    builder.add(
                        format!("head.{}.w", axis.name),
                        &[axis.categories.len(), config.filters],
                    ),
                    builder.add(format!("head.{}.b", axis.name), &[axis.categories.len()]),
                )
            })
            .collect();
        let mut store = ParamStore::zeros(builder.finish());

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        {
            let embed_w = store.seg_mut(embed);
            for x in embed_w.iter_mut() {
                *x = rng.gen_range(-0.1..0.1);
            }
        }
        if let Some(model) = pretrained {
            for (i, token) in vocab.iter().enumerate() {
                let (v, _) = model.word_vector(token);
                if v.iter().any(|&x| x != 0.0) {
                    let embed_w = store.seg_mut(embed);
                    embed_w[i * config.embed_dim..(i + 1) * config.embed_dim]
                        .copy_from_slice(&v);
                }
            }
        }
        let fan_in = (config.kernel * config.embed_dim) as f64;
        let bound = (6.0 / (fan_in + config.filters as f64)).sqrt();
        for (w, _) in &convs {
            for x in store.seg_mut(*w) {
                *x = rng.gen_range(-bound..bound);
            }
        }
        // heads start at zero: the initial loss is exactly Σ ln|axis|

        let vocab_index = vocab.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(CnnIntentClassifier { config, axes, vocab, vocab_index, store, segs: IntentSegs { embed, convs, heads } })
    }

    pub fn token_ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens
            .iter()
            .map(|t| self.vocab_index.get(t).copied().unwrap_or(0))
            .collect()
    }

    fn embedded(&self, ids: &[usize]) -> Vec<Vec<f64>> {
        ids.iter().map(|&i| self.store.row(self.segs.embed, i).to_vec()).collect()
    }

    fn encoder_for(&self, axis_idx: usize) -> (SegId, SegId) {
        if self.config.shared_encoder {
            self.segs.convs[0]
        } else {
            self.segs.convs[axis_idx]
        }
    }

    /// Sum of per-axis cross-entropies and the full-parameter gradient.
    pub fn intent_loss(&self, utt: &Utterance) -> Result<(f64, GradBuffer)> {
        let gold: Vec<usize> = self
            .axes
            .iter()
            .map(|axis| {
                let value = utt.intents.get(&axis.name).ok_or_else(|| {
                    Error::Schema(format!(
                        "utterance '{}': missing intent axis '{}'",
                        utt.id, axis.name
                    ))
                })?;
                axis.categories.iter().position(|c| c == value).ok_or_else(|| {
                    Error::Schema(format!("unknown category '{value}' on axis '{}'", axis.name))
                })
            })
            .collect::<Result<_>>()?;

        let ids = self.token_ids(&utt.tokens);
        if ids.is_empty() {
            return Err(Error::Data(format!("utterance '{}' has no tokens", utt.id)));
        }
        let inputs = self.embedded(&ids);
        let mut grads = GradBuffer::zeros(&self.store.layout);
        let mut total = 0.0;
        let mut d_inputs_acc = vec![vec![0.0; self.config.embed_dim]; inputs.len()];

        for (a, &g) in gold.iter().enumerate() {
            let (cw, cb) = self.encoder_for(a);
            let (pooled, cache) = conv1d_maxpool_forward(
                &self.store,
                cw,
                cb,
                &inputs,
                self.config.kernel,
                self.config.filters,
            );
            let (hw, hb) = self.segs.heads[a];
            let logits =
                linear_forward(&self.store, hw, hb, &pooled, self.axes[a].categories.len());
            let (loss, d_logits) = softmax_xent(&logits, g);
            total += loss;
            let d_pooled = linear_backward(&self.store, hw, hb, &pooled, &d_logits, &mut grads);
            let d_inputs = conv1d_maxpool_backward(
                &self.store,
                cw,
                cb,
                &cache,
                &d_pooled,
                self.config.kernel,
                inputs.len(),
                &mut grads,
            );
            for (acc, d) in d_inputs_acc.iter_mut().zip(d_inputs) {
                for (a, b) in acc.iter_mut().zip(d) {
                    *a += b;
                }
            }
        }

        for (t, &id) in ids.iter().enumerate() {
            let row = grads.row_mut(&self.store.layout, self.segs.embed, id);
            for (g, d) in row.iter_mut().zip(&d_inputs_acc[t]) {
                *g += d;
            }
        }
        Ok((total, grads))
    }

    /// Arg-max category per axis (ties toward the lower category index).
    pub fn predict(&self, tokens: &[String]) -> Result<BTreeMap<String, String>> {
        if tokens.is_empty() {
            return Err(Error::Data("cannot classify an empty utterance".into()));
        }
        let ids = self.token_ids(tokens);
        let inputs = self.embedded(&ids);
        let mut out = BTreeMap::new();
        for (a, axis) in self.axes.iter().enumerate() {
            let (cw, cb) = self.encoder_for(a);
            let (pooled, _) = conv1d_maxpool_forward(
                &self.store,
                cw,
                cb,
                &inputs,
                self.config.kernel,
                self.config.filters,
            );
            let (hw, hb) = self.segs.heads[a];
            let logits = linear_forward(&self.store, hw, hb, &pooled, axis.categories.len());
            let mut best = 0;
            for c in 1..logits.len() {
                if logits[c] > logits[best] {
                    best = c;
                }
            }
            out.insert(axis.name.clone(), axis.categories[best].clone());
        }
        Ok(out)
    }

    pub(super) fn segs_embed(&self) -> SegId {
        self.segs.embed
    }
}
