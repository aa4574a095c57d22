//! Skip-gram word embeddings with optional hashed character-n-gram
//! subword vectors, plus serving utilities (OOV composition, nearest
//! neighbours, text-format I/O).

mod io;
mod subword;
mod train;
mod vocab;

pub use io::{load_vectors, save_vectors};
pub use subword::{char_ngrams, fnv1a32, fnv1a64, hash_ngram, word_bucket_indices, SubwordConfig};
pub use train::{
    pair_grad, pair_loss, train_skipgram, PairGrads, SkipgramParams, TrainLog, TrainOpts,
};
pub use vocab::Vocab;

/// Plain row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub dim: usize,
    pub(crate) data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, dim: usize) -> Matrix {
        Matrix { rows, dim, data: vec![0.0; rows * dim] }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.dim..(r + 1) * self.dim]
    }
}

/// Cosine similarity; zero vectors score 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// A trained embedding model: vocabulary word vectors plus, when subword
/// information is enabled, the hashed n-gram bucket table that serves
/// out-of-vocabulary words.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    pub dim: usize,
    pub vocab: Vocab,
    pub subword: SubwordConfig,
    pub(crate) words: Matrix,
    pub(crate) buckets: Option<Matrix>,
    /// Word rows already hold the composed vectors (models reloaded from
    /// disk); otherwise composition happens at lookup time.
    pub(crate) precomposed: bool,
}

impl EmbeddingModel {
    /// Build a serving-only model from explicit vectors (no subword table).
    pub fn from_vectors(tokens: Vec<String>, vectors: Vec<Vec<f64>>) -> crate::Result<Self> {
        if tokens.len() != vectors.len() || tokens.is_empty() {
            return Err(crate::Error::Data("tokens/vectors length mismatch".into()));
        }
        let dim = vectors[0].len();
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(crate::Error::Data("inconsistent vector dimensions".into()));
        }
        let mut words = Matrix::zeros(tokens.len(), dim);
        for (r, v) in vectors.iter().enumerate() {
            words.row_mut(r).copy_from_slice(v);
        }
        let counts = vec![1; tokens.len()];
        Ok(EmbeddingModel {
            dim,
            vocab: Vocab::from_parts(tokens, counts, 1),
            subword: SubwordConfig::disabled(),
            words,
            buckets: None,
            precomposed: true,
        })
    }

    /// Serving vector of the in-vocabulary word at `idx`: the word row
    /// averaged with its subword bucket rows, exactly as during training.
    pub fn composed(&self, idx: usize) -> Vec<f64> {
        if self.precomposed || !self.subword.enabled {
            return self.words.row(idx).to_vec();
        }
        let buckets = self.buckets.as_ref().expect("subword table present");
        let grams = word_bucket_indices(self.vocab.token(idx), &self.subword);
        let mut v = self.words.row(idx).to_vec();
        for &b in &grams {
            for (x, y) in v.iter_mut().zip(buckets.row(b)) {
                *x += y;
            }
        }
        let k = (1 + grams.len()) as f64;
        v.iter_mut().for_each(|x| *x /= k);
        v
    }

    /// Vector for any word. In-vocabulary words use the training-time
    /// composition; out-of-vocabulary words with subword information get
    /// the mean of their n-gram bucket vectors; otherwise a zero vector
    /// with the OOV flag set.
    pub fn word_vector(&self, word: &str) -> (Vec<f64>, bool) {
        if let Some(idx) = self.vocab.get(word) {
            return (self.composed(idx), false);
        }
        if self.subword.enabled {
            if let Some(buckets) = &self.buckets {
                let grams = word_bucket_indices(word, &self.subword);
                let mut v = vec![0.0; self.dim];
                for &b in &grams {
                    for (x, y) in v.iter_mut().zip(buckets.row(b)) {
                        *x += y;
                    }
                }
                let k = grams.len() as f64;
                v.iter_mut().for_each(|x| *x /= k);
                return (v, true);
            }
        }
        (vec![0.0; self.dim], true)
    }

    /// Top-k vocabulary words by cosine similarity to `word`, excluding the
    /// query itself; ties break toward the lexicographically smaller token.
    pub fn nearest(&self, word: &str, k: usize) -> Vec<(String, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let (query, _) = self.word_vector(word);
        let mut scored: Vec<(String, f64)> = (0..self.vocab.len())
            .filter(|&i| self.vocab.token(i) != word)
            .map(|i| (self.vocab.token(i).to_string(), cosine(&query, &self.composed(i))))
            .collect();
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1).expect("finite cosines").then_with(|| a.0.cmp(&b.0))
        });
        scored.truncate(k);
        scored
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_model() -> EmbeddingModel {
        EmbeddingModel::from_vectors(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![1.0, 0.0], vec![0.8, 0.6], vec![0.0, 1.0]],
        )
        .unwrap()
    }

    #[test]
    fn nearest_follows_hand_computed_cosines() {
        // cos(a,b) = 0.8, cos(a,c) = 0
        let model = toy_model();
        let hits = model.nearest("a", 2);
        assert_eq!(hits[0].0, "b");
        assert!((hits[0].1 - 0.8).abs() < 1e-12);
        assert_eq!(hits[1].0, "c");
        assert!(hits[1].1.abs() < 1e-12);
    }

    #[test]
    fn query_excluded_and_k_zero_empty() {
        let model = toy_model();
        assert!(model.nearest("a", 0).is_empty());
        let hits = model.nearest("a", 10);
        assert_eq!(hits.len(), 2);
        assert!(hits.iter().all(|(t, _)| t != "a"));
    }

    #[test]
    fn oov_without_subword_is_zero_and_flagged() {
        let model = toy_model();
        let (v, oov) = model.word_vector("inconnu");
        assert!(oov);
        assert!(v.iter().all(|&x| x == 0.0));
        let (_, known) = model.word_vector("a");
        assert!(!known);
    }

    #[test]
    fn oov_with_shared_subwords_gets_nonzero_vector() {
        let lines: Vec<String> = std::iter::repeat_n("la créatinine est dosée".to_string(), 30)
            .collect();
        let opts = TrainOpts {
            dim: 12,
            epochs: 3,
            subword: SubwordConfig { bucket_count: 1 << 12, ..SubwordConfig::default() },
            seed: 3,
            ..TrainOpts::default()
        };
        let (model, _) = train_skipgram(&lines, &opts).unwrap();
        // shares n-grams ("créat", "atin", …) with the in-vocabulary word
        let (v, oov) = model.word_vector("créatininémie");
        assert!(oov);
        assert!(v.iter().any(|&x| x != 0.0));
        let shared: std::collections::HashSet<usize> =
            word_bucket_indices("créatinine", &model.subword).into_iter().collect();
        let candidate: std::collections::HashSet<usize> =
            word_bucket_indices("créatininémie", &model.subword).into_iter().collect();
        assert!(!shared.is_disjoint(&candidate));
    }

    #[test]
    fn in_vocab_vector_equals_training_composition() {
        let lines: Vec<String> =
            std::iter::repeat_n("un deux trois".to_string(), 20).collect();
        let opts = TrainOpts {
            dim: 6,
            epochs: 1,
            subword: SubwordConfig { bucket_count: 256, ..SubwordConfig::default() },
            seed: 5,
            ..TrainOpts::default()
        };
        let (model, _) = train_skipgram(&lines, &opts).unwrap();
        let idx = model.vocab.get("deux").unwrap();
        let (served, oov) = model.word_vector("deux");
        assert!(!oov);
        assert_eq!(served, model.composed(idx));
    }
}
