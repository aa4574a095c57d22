//! Linear-chain conditional random field for slot filling.
//!
//! Emission scores combine sparse binary features with optional dense
//! embedding features (attached to emissions only); transition weights are
//! a full label-by-label matrix. Training maximizes conditional
//! log-likelihood with Adam and L2 regularization; decoding is Viterbi
//! followed by BIO span repair.

mod features;
pub mod inference;
mod train;

use serde::{Deserialize, Serialize};

use crate::data::{spans_from_bio, SlotSpan};
use crate::embeddings::EmbeddingModel;
use crate::error::{Error, Result};

pub use features::{
    extract_features, feature_names, is_date_like, DenseStats, FeatureDict, FeatureVector,
};
pub use train::{nll_and_grad, train_crf, CrfGrad, CrfTrainLog, CrfTrainOpts, SentenceExample};

/// Reference to the embedding file a model's dense features came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingRef {
    pub path: String,
    /// FNV-1a 64 checksum of the vector file, hex-encoded.
    pub checksum: String,
}

/// Trained CRF parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrfModel {
    pub labels: Vec<String>,
    pub dict: FeatureDict,
    pub l2: f64,
    /// Emission weights, `labels.len() × dict.len()`, row-major by label.
    emission: Vec<f64>,
    /// Dense emission weights, `labels.len() × dense_dim`.
    dense: Option<Vec<f64>>,
    pub dense_dim: usize,
    pub dense_stats: Option<DenseStats>,
    /// Transition weights, `labels.len() × labels.len()`, row-major.
    transitions: Vec<f64>,
    pub embedding_ref: Option<EmbeddingRef>,
}

impl CrfModel {
    /// Zero-initialized model over a frozen feature dictionary.
    pub fn new(labels: Vec<String>, dict: FeatureDict, dense_dim: usize, l2: f64) -> CrfModel {
        let n_labels = labels.len();
        let n_feats = dict.len();
        CrfModel {
            labels,
            dict,
            l2,
            emission: vec![0.0; n_labels * n_feats],
            dense: (dense_dim > 0).then(|| vec![0.0; n_labels * dense_dim]),
            dense_dim,
            dense_stats: None,
            transitions: vec![0.0; n_labels * n_labels],
            embedding_ref: None,
        }
    }

    /// Rebuild derived lookup tables after deserialization.
    pub fn rebuild(mut self) -> CrfModel {
        self.dict = self.dict.rebuild();
        self
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    /// Emission weight block, row-major by label.
    pub fn emission_weights(&self) -> &[f64] {
        &self.emission
    }

    pub fn emission_weights_mut(&mut self) -> &mut Vec<f64> {
        &mut self.emission
    }

    pub fn dense_weights(&self) -> Option<&[f64]> {
        self.dense.as_deref()
    }

    pub fn dense_weights_mut(&mut self) -> Option<&mut Vec<f64>> {
        self.dense.as_mut()
    }

    pub fn transition_weights(&self) -> &[f64] {
        &self.transitions
    }

    pub fn transition_weights_mut(&mut self) -> &mut Vec<f64> {
        &mut self.transitions
    }

    /// Transition matrix in the nested form the lattice routines take.
    pub fn transitions_nested(&self) -> Vec<Vec<f64>> {
        let n = self.n_labels();
        (0..n).map(|a| self.transitions[a * n..(a + 1) * n].to_vec()).collect()
    }

    /// Emission score of label `y` at a featurized position.
    pub fn emission_score(&self, fv: &FeatureVector, y: usize) -> f64 {
        let n_feats = self.dict.len();
        let mut score: f64 =
            fv.sparse.iter().map(|&f| self.emission[y * n_feats + f as usize]).sum();
        if let (Some(weights), Some(dense)) = (&self.dense, &fv.dense) {
            let row = &weights[y * self.dense_dim..(y + 1) * self.dense_dim];
            score += row.iter().zip(dense).map(|(w, x)| w * x).sum::<f64>();
        }
        score
    }

    /// Emission score matrix of a featurized sentence.
    pub fn emissions(&self, sentence: &[FeatureVector]) -> Vec<Vec<f64>> {
        sentence
            .iter()
            .map(|fv| (0..self.n_labels()).map(|y| self.emission_score(fv, y)).collect())
            .collect()
    }

    /// Featurize one sentence with the frozen dictionary.
    pub fn featurize(
        &self,
        tokens: &[String],
        lemmas: Option<&[String]>,
        pos: Option<&[String]>,
        embeddings: Option<&EmbeddingModel>,
    ) -> Result<Vec<FeatureVector>> {
        if self.dense.is_some() {
            let model = embeddings.ok_or_else(|| {
                Error::Config(
                    "model was trained with dense embedding features; supply the embeddings"
                        .into(),
                )
            })?;
            if model.dim != self.dense_dim {
                return Err(Error::Config(format!(
                    "embedding dimension {} does not match the model's {}",
                    model.dim, self.dense_dim
                )));
            }
        }
        let stats = self.dense_stats.as_ref();
        (0..tokens.len())
            .map(|t| {
                let sparse = feature_names(tokens, lemmas, pos, t)?
                    .iter()
                    .filter_map(|n| self.dict.lookup(n))
                    .collect();
                let dense = match (self.dense.as_ref(), embeddings, stats) {
                    (Some(_), Some(model), Some(stats)) => {
                        let (mut v, _) = model.word_vector(&tokens[t]);
                        stats.apply(&mut v);
                        Some(v)
                    }
                    _ => None,
                };
                Ok(FeatureVector { sparse, dense })
            })
            .collect()
    }

    /// Viterbi tags and repaired spans for a tokenized utterance.
    pub fn predict(
        &self,
        tokens: &[String],
        lemmas: Option<&[String]>,
        pos: Option<&[String]>,
        embeddings: Option<&EmbeddingModel>,
    ) -> Result<(Vec<String>, Vec<SlotSpan>)> {
        if tokens.is_empty() {
            return Ok((Vec::new(), Vec::new()));
        }
        let features = self.featurize(tokens, lemmas, pos, embeddings)?;
        let emissions = self.emissions(&features);
        let path = inference::viterbi(&emissions, &self.transitions_nested());
        let tags: Vec<String> = path.iter().map(|&y| self.labels[y].clone()).collect();
        let spans = spans_from_bio(&tags)?;
        Ok((tags, spans))
    }

    /// Save as JSON.
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string(self).expect("model serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Load from JSON.
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<CrfModel> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: CrfModel = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        Ok(model.rebuild())
    }
}
