//! Character n-gram extraction and the hashing trick.

use serde::{Deserialize, Serialize};

/// Subword configuration: n-gram length range and hash bucket count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubwordConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub bucket_count: usize,
    pub enabled: bool,
}

impl Default for SubwordConfig {
    fn default() -> Self {
        SubwordConfig { n_min: 3, n_max: 6, bucket_count: 1 << 21, enabled: true }
    }
}

impl SubwordConfig {
    /// A disabled configuration (plain word vectors only).
    pub fn disabled() -> Self {
        SubwordConfig { enabled: false, ..SubwordConfig::default() }
    }
}

/// All character n-grams of the boundary-bracketed word `<word>`, with
/// lengths in `n_min..=n_max`, as positional substrings (duplicates kept).
/// The whole bracketed word is always part of the bag: when its length
/// falls outside the range it is appended once.
pub fn char_ngrams(word: &str, cfg: &SubwordConfig) -> Vec<String> {
    let bracketed: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let len = bracketed.len();
    let mut grams = Vec::new();
    for n in cfg.n_min..=cfg.n_max.min(len) {
        for start in 0..=(len - n) {
            grams.push(bracketed[start..start + n].iter().collect());
        }
    }
    if !(cfg.n_min..=cfg.n_max).contains(&len) {
        grams.push(bracketed.iter().collect());
    }
    grams
}

/// FNV-1a over UTF-8 bytes, 32-bit variant. Stable across runs and
/// platforms.
pub fn fnv1a32(bytes: &[u8]) -> u32 {
    let mut hash: u32 = 0x811c9dc5;
    for &b in bytes {
        hash ^= u32::from(b);
        hash = hash.wrapping_mul(0x0100_0193);
    }
    hash
}

/// 64-bit FNV-1a, used for file checksums.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Bucket index of an n-gram: FNV-1a 32-bit modulo `buckets`.
pub fn hash_ngram(ngram: &str, buckets: usize) -> usize {
    assert!(buckets > 0, "bucket count must be positive");
    (fnv1a32(ngram.as_bytes()) as usize) % buckets
}

/// Bucket indices for every n-gram of `word` (positional duplicates kept,
/// mirroring the bag semantics of [`char_ngrams`]).
pub fn word_bucket_indices(word: &str, cfg: &SubwordConfig) -> Vec<usize> {
    char_ngrams(word, cfg)
        .iter()
        .map(|g| hash_ngram(g, cfg.bucket_count))
        .collect()
}
