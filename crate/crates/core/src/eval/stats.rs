//! Corpus statistics: vocabulary overlap, mention length distributions and
//! bigram perplexity against a reference corpus.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::data::Corpus;

/// Length statistics of the gold mentions of one span kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MentionLengthStats {
    pub kind: String,
    pub count: usize,
    pub median: f64,
    pub min: usize,
    pub max: usize,
}

/// Summary statistics of a corpus, optionally relative to a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub utterances: usize,
    pub token_count: usize,
    pub vocab_size: usize,
    /// Tokens of this corpus absent from the reference vocabulary.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oov_count: Option<usize>,
    /// |vocab ∩ reference| / |vocab|.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap: Option<f64>,
    pub mention_stats: Vec<MentionLengthStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bigram_perplexity: Option<f64>,
}

/// Unique tokens of a corpus.
pub fn vocab_of(corpus: &Corpus) -> HashSet<String> {
    corpus
        .utterances
        .iter()
        .flat_map(|u| u.tokens.iter().cloned())
        .collect()
}

fn median_of(sorted: &[usize]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    }
}

/// Perplexity of `eval_sents` under an add-1 bigram model estimated on
/// `ref_sents`, with BOS/EOS markers and a single UNK class for tokens
/// outside the reference vocabulary.
pub fn bigram_perplexity(eval_sents: &[Vec<String>], ref_sents: &[Vec<String>]) -> f64 {
    const BOS: &str = "\u{1}BOS";
    const EOS: &str = "\u{1}EOS";
    const UNK: &str = "\u{1}UNK";

    let vocab: HashSet<&str> = ref_sents
        .iter()
        .flat_map(|s| s.iter().map(String::as_str))
        .collect();
    // next-token event space: vocabulary plus UNK and EOS
    let classes = vocab.len() + 2;

    let mut bigram: HashMap<(&str, &str), u64> = HashMap::new();
    let mut context: HashMap<&str, u64> = HashMap::new();
    for sent in ref_sents {
        let mut prev = BOS;
        for tok in sent {
            *bigram.entry((prev, tok.as_str())).or_default() += 1;
            *context.entry(prev).or_default() += 1;
            prev = tok.as_str();
        }
        *bigram.entry((prev, EOS)).or_default() += 1;
        *context.entry(prev).or_default() += 1;
    }

    let mut log_prob = 0.0f64;
    let mut events = 0usize;
    for sent in eval_sents {
        let mut prev = BOS;
        let mapped = sent
            .iter()
            .map(|t| if vocab.contains(t.as_str()) { t.as_str() } else { UNK });
        for tok in mapped.chain(std::iter::once(EOS)) {
            let num = bigram.get(&(prev, tok)).copied().unwrap_or(0) + 1;
            let den = context.get(prev).copied().unwrap_or(0) + classes as u64;
            log_prob += (num as f64 / den as f64).ln();
            events += 1;
            prev = tok;
        }
    }
    if events == 0 {
        return 1.0;
    }
    (-log_prob / events as f64).exp()
}

/// Compute corpus statistics. `reference_vocab` drives the OOV/overlap
/// numbers; `reference_corpus` trains the bigram model for perplexity.
pub fn corpus_stats(
    corpus: &Corpus,
    reference_vocab: Option<&HashSet<String>>,
    reference_corpus: Option<&Corpus>,
) -> CorpusStats {
    let vocab = vocab_of(corpus);
    let (oov_count, overlap) = match reference_vocab {
        Some(reference) => {
            let inter = vocab.iter().filter(|t| reference.contains(*t)).count();
            let overlap = if vocab.is_empty() {
                0.0
            } else {
                inter as f64 / vocab.len() as f64
            };
            (Some(vocab.len() - inter), Some(overlap))
        }
        None => (None, None),
    };

    let mut lengths: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for utt in &corpus.utterances {
        for span in utt.spans().expect("validated corpus has decodable tags") {
            lengths.entry(span.kind).or_default().push(span.end - span.start);
        }
    }
    let mention_stats = lengths
        .into_iter()
        .map(|(kind, mut lens)| {
            lens.sort_unstable();
            MentionLengthStats {
                kind,
                count: lens.len(),
                median: median_of(&lens),
                min: lens[0],
                max: *lens.last().unwrap(),
            }
        })
        .collect();

    let bigram = reference_corpus.map(|reference| {
        let eval_sents: Vec<Vec<String>> =
            corpus.utterances.iter().map(|u| u.tokens.clone()).collect();
        let ref_sents: Vec<Vec<String>> =
            reference.utterances.iter().map(|u| u.tokens.clone()).collect();
        bigram_perplexity(&eval_sents, &ref_sents)
    });

    CorpusStats {
        utterances: corpus.len(),
        token_count: corpus.utterances.iter().map(|u| u.tokens.len()).sum(),
        vocab_size: vocab.len(),
        oov_count,
        overlap,
        mention_stats,
        bigram_perplexity: bigram,
    }
}
