//! Feature extraction for the CRF tagger.
//!
//! Sparse binary features: word identity in a ±2 window, word shape,
//! prefixes/suffixes of length 1–3, a date-shape test and a bias. Lemma and
//! POS window features join in when those optional columns are supplied.
//! Dense features are the token's embedding vector, standardized per
//! dimension with training-set statistics.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingModel;
use crate::error::{Error, Result};

/// Grow-only feature dictionary, frozen at prediction time.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FeatureDict {
    names: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
    frozen: bool,
}

impl FeatureDict {
    pub fn new() -> FeatureDict {
        FeatureDict::default()
    }

    /// Rebuild the lookup table after deserialization.
    pub fn rebuild(mut self) -> FeatureDict {
        self.index = self
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        self
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    /// Read-only lookup (prediction path).
    pub fn lookup(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    /// Intern a feature name. Unknown names map to `None` once frozen.
    pub fn intern(&mut self, name: &str) -> Option<u32> {
        if let Some(&id) = self.index.get(name) {
            return Some(id);
        }
        if self.frozen {
            return None;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        Some(id)
    }
}

/// Features of one token position: interned sparse ids plus an optional
/// dense block.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub sparse: Vec<u32>,
    pub dense: Option<Vec<f64>>,
}

/// Per-dimension standardization statistics for dense features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl DenseStats {
    /// Population statistics over all token vectors in the training set.
    pub fn fit(vectors: &[Vec<f64>]) -> DenseStats {
        assert!(!vectors.is_empty());
        let dim = vectors[0].len();
        let n = vectors.len() as f64;
        let mut mean = vec![0.0; dim];
        for v in vectors {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for v in vectors {
            for j in 0..dim {
                let d = v[j] - mean[j];
                var[j] += d * d;
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd < 1e-8 {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        DenseStats { mean, std }
    }

    pub fn apply(&self, v: &mut [f64]) {
        for (j, x) in v.iter_mut().enumerate() {
            *x = (*x - self.mean[j]) / self.std[j];
        }
    }
}

fn shape_of(token: &str) -> String {
    token
        .chars()
        .take(12)
        .map(|c| {
            if c.is_uppercase() {
                'X'
            } else if c.is_lowercase() {
                'x'
            } else if c.is_ascii_digit() {
                'd'
            } else {
                'p'
            }
        })
        .collect()
}

/// dd/mm/yyyy-like: three all-digit groups of plausible widths.
pub fn is_date_like(token: &str) -> bool {
    let parts: Vec<&str> = token.split('/').collect();
    parts.len() == 3
        && parts.iter().all(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_digit()))
        && parts[0].len() <= 2
        && parts[1].len() <= 2
        && (2..=4).contains(&parts[2].len())
}

fn window_token(tokens: &[impl AsRef<str>], t: isize) -> &str {
    if t < 0 {
        "<s>"
    } else if t as usize >= tokens.len() {
        "</s>"
    } else {
        tokens[t as usize].as_ref()
    }
}

/// Raw (un-interned) feature names for position `t`.
pub fn feature_names(
    tokens: &[String],
    lemmas: Option<&[String]>,
    pos: Option<&[String]>,
    t: usize,
) -> Result<Vec<String>> {
    if t >= tokens.len() {
        return Err(Error::Data(format!(
            "feature position {t} out of range for {} tokens",
            tokens.len()
        )));
    }
    let ti = t as isize;
    let mut names = Vec::with_capacity(24);
    names.push("bias".to_string());
    for off in -2isize..=2 {
        names.push(format!("w[{off}]={}", window_token(tokens, ti + off)));
    }
    let token = &tokens[t];
    names.push(format!("shape={}", shape_of(token)));
    let chars: Vec<char> = token.chars().collect();
    for n in 1..=3.min(chars.len()) {
        names.push(format!("pre{n}={}", chars[..n].iter().collect::<String>()));
        names.push(format!("suf{n}={}", chars[chars.len() - n..].iter().collect::<String>()));
    }
    if is_date_like(token) {
        names.push("date-like".to_string());
    }
    if let Some(lemmas) = lemmas {
        for off in -2isize..=2 {
            names.push(format!("l[{off}]={}", window_token(lemmas, ti + off)));
        }
    }
    if let Some(pos) = pos {
        for off in -2isize..=2 {
            names.push(format!("p[{off}]={}", window_token(pos, ti + off)));
        }
    }
    Ok(names)
}

/// Extract and intern the features of position `t`. When `embeddings` is
/// given, the token's standardized vector becomes the dense block.
pub fn extract_features(
    dict: &mut FeatureDict,
    tokens: &[String],
    lemmas: Option<&[String]>,
    pos: Option<&[String]>,
    embeddings: Option<(&EmbeddingModel, &DenseStats)>,
    t: usize,
) -> Result<FeatureVector> {
    let sparse = feature_names(tokens, lemmas, pos, t)?
        .iter()
        .filter_map(|n| dict.intern(n))
        .collect();
    let dense = embeddings.map(|(model, stats)| {
        let (mut v, _) = model.word_vector(&tokens[t]);
        stats.apply(&mut v);
        v
    });
    Ok(FeatureVector { sparse, dense })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn date_token_activates_date_feature() {
        let names = feature_names(&toks(&["créatinine", "du", "27/03/2015"]), None, None, 2)
            .unwrap();
        assert!(names.contains(&"date-like".to_string()));
        assert!(names.contains(&"shape=ddpddpdddd".to_string()));
    }

    #[test]
    fn is_date_like_accepts_plausible_widths() {
        assert!(is_date_like("27/03/2015"));
        assert!(is_date_like("1/2/15"));
        assert!(!is_date_like("et/ou/si"));
        assert!(!is_date_like("27/03"));
        assert!(!is_date_like("27/03/20155"));
    }

    #[test]
    fn first_token_window_uses_bos_padding() {
        let names = feature_names(&toks(&["quel", "taux"]), None, None, 0).unwrap();
        assert!(names.contains(&"w[-1]=<s>".to_string()));
        assert!(names.contains(&"w[-2]=<s>".to_string()));
        assert!(names.contains(&"w[1]=taux".to_string()));
        assert!(names.contains(&"w[2]=</s>".to_string()));
    }

    #[test]
    fn lemma_and_pos_columns_add_window_features() {
        let tokens = toks(&["les", "plaquettes"]);
        let lemmas = toks(&["le", "plaquette"]);
        let pos = toks(&["DET", "NOUN"]);
        let names = feature_names(&tokens, Some(&lemmas), Some(&pos), 1).unwrap();
        assert!(names.contains(&"l[0]=plaquette".to_string()));
        assert!(names.contains(&"p[-1]=DET".to_string()));
    }

    #[test]
    fn out_of_range_position_errors() {
        assert!(feature_names(&toks(&["a"]), None, None, 1).is_err());
    }

    #[test]
    fn frozen_dict_drops_unseen_features() {
        let mut dict = FeatureDict::new();
        assert_eq!(dict.intern("a"), Some(0));
        dict.freeze();
        assert_eq!(dict.intern("a"), Some(0));
        assert_eq!(dict.intern("b"), None);
        assert_eq!(dict.len(), 1);
    }

    #[test]
    fn dense_block_is_standardized_embedding() {
        let model = EmbeddingModel::from_vectors(
            vec!["taux".into(), "de".into()],
            vec![vec![1.0, 3.0], vec![3.0, 7.0]],
        )
        .unwrap();
        let stats = DenseStats::fit(&[vec![1.0, 3.0], vec![3.0, 7.0]]);
        let mut dict = FeatureDict::new();
        let fv = extract_features(
            &mut dict,
            &toks(&["taux", "de"]),
            None,
            None,
            Some((&model, &stats)),
            0,
        )
        .unwrap();
        let dense = fv.dense.unwrap();
        assert_eq!(dense.len(), 2);
        // (1 − 2)/1 = −1 and (3 − 5)/2 = −1
        assert!((dense[0] + 1.0).abs() < 1e-12);
        assert!((dense[1] + 1.0).abs() < 1e-12);
    }
}
