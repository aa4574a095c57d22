//! Vocabulary construction and the negative-sampling distribution.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Token inventory with counts and the unigram^0.75 sampling distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocab {
    tokens: Vec<String>,
    counts: Vec<u64>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    /// Cumulative count^0.75 mass, used for negative sampling.
    #[serde(skip)]
    cumulative: Vec<f64>,
    pub min_count: u64,
}

impl PartialEq for Vocab {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens && self.counts == other.counts
    }
}

impl Vocab {
    /// Count whitespace-separated tokens in `lines` and keep those with
    /// frequency at least `min_count`. Indices are dense, ordered by
    /// descending count then token text.
    pub fn build<S: AsRef<str>>(lines: &[S], min_count: u64) -> Result<Vocab> {
        let mut counts: HashMap<String, u64> = HashMap::new();
        for line in lines {
            for token in line.as_ref().split_whitespace() {
                *counts.entry(token.to_string()).or_default() += 1;
            }
        }
        let mut entries: Vec<(String, u64)> =
            counts.into_iter().filter(|(_, c)| *c >= min_count).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        if entries.is_empty() {
            return Err(Error::Data(format!(
                "no token reaches min_count {min_count}"
            )));
        }
        let (tokens, counts): (Vec<String>, Vec<u64>) = entries.into_iter().unzip();
        Ok(Vocab::from_parts(tokens, counts, min_count))
    }

    /// Assemble a vocabulary from parallel token/count lists.
    pub fn from_parts(tokens: Vec<String>, counts: Vec<u64>, min_count: u64) -> Vocab {
        assert_eq!(tokens.len(), counts.len());
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let mut cumulative = Vec::with_capacity(counts.len());
        let mut total = 0.0;
        for &c in &counts {
            total += (c as f64).powf(0.75);
            cumulative.push(total);
        }
        Vocab { tokens, counts, index, cumulative, min_count }
    }

    /// Rebuild the derived tables (after deserialization).
    pub fn rebuild(self) -> Vocab {
        Vocab::from_parts(self.tokens, self.counts, self.min_count)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, idx: usize) -> &str {
        &self.tokens[idx]
    }

    pub fn count(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Draw one word index with probability proportional to count^0.75.
    pub fn sample_negative(&self, rng: &mut impl Rng) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocab");
        let x = rng.gen_range(0.0..total);
        self.cumulative.partition_point(|&c| c <= x)
    }
}
