//! Evaluation harness: weighted token/span F1, intent scores, repeated
//! k-fold confidence intervals and corpus statistics.

mod evaluate;
mod folds;
mod metrics;
mod stats;

pub use evaluate::{evaluate, AxisReport, EvalReport, MetricBlock, Prediction};
pub use folds::{ci95, repeated_kfold, Ci95, FoldPlan};
pub use metrics::{intent_scores, multiclass_prf, span_f1, token_f1, LabeledScores, PrfScore};
pub use stats::{bigram_perplexity, corpus_stats, vocab_of, CorpusStats, MentionLengthStats};
