//! Precision/recall/F1 at the token, span and utterance level.
//!
//! Zero-denominator convention throughout: precision or recall with an
//! empty denominator is 0, and labels with gold support still count in the
//! support-weighted average.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::data::SlotSpan;

/// Scores for one label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrfScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

impl PrfScore {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> PrfScore {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        PrfScore { precision, recall, f1, support: tp + fn_ }
    }
}

/// Per-label scores plus the support-weighted F1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledScores {
    pub per_label: Vec<(String, PrfScore)>,
    pub weighted_f1: f64,
}

fn weighted(per_label: &[(String, PrfScore)], any_predictions: bool) -> f64 {
    let total: usize = per_label.iter().map(|(_, s)| s.support).sum();
    if total == 0 {
        // nothing to find: perfect only when nothing was predicted either
        return if any_predictions { 0.0 } else { 1.0 };
    }
    per_label
        .iter()
        .map(|(_, s)| s.support as f64 * s.f1)
        .sum::<f64>()
        / total as f64
}

/// Multi-class P/R/F1 over (gold, predicted) label pairs.
///
/// Labels absent from both sides are not reported; labels with zero gold
/// support are reported but excluded from the weighted average.
pub fn multiclass_prf<'a, I>(pairs: I) -> LabeledScores
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut counts: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    let mut any_predictions = false;
    for (gold, pred) in pairs {
        any_predictions = true;
        if gold == pred {
            counts.entry(gold.to_string()).or_default().0 += 1;
        } else {
            counts.entry(gold.to_string()).or_default().2 += 1;
            counts.entry(pred.to_string()).or_default().1 += 1;
        }
    }
    let per_label: Vec<(String, PrfScore)> = counts
        .into_iter()
        .map(|(label, (tp, fp, fn_))| (label, PrfScore::from_counts(tp, fp, fn_)))
        .collect();
    let weighted_f1 = weighted(&per_label, any_predictions);
    LabeledScores { per_label, weighted_f1 }
}

/// Token-level tagging scores. `include_o` keeps the "O" label in the
/// report and the weighted average; confusion counts for the other labels
/// are unaffected either way.
pub fn token_f1<S: AsRef<str>>(
    gold: &[Vec<S>],
    pred: &[Vec<S>],
    include_o: bool,
) -> LabeledScores {
    assert_eq!(gold.len(), pred.len(), "gold/pred sentence counts differ");
    let pairs = gold.iter().zip(pred).flat_map(|(g, p)| {
        assert_eq!(g.len(), p.len(), "gold/pred tag lengths differ");
        g.iter().zip(p).map(|(a, b)| (a.as_ref(), b.as_ref()))
    });
    let mut scores = multiclass_prf(pairs);
    if !include_o {
        scores.per_label.retain(|(label, _)| label != "O");
        let any_predictions = !scores.per_label.is_empty();
        scores.weighted_f1 = weighted(&scores.per_label, any_predictions);
    }
    scores
}

/// Span-level scores with exact matching: a predicted span counts only when
/// start, end and kind all agree with a gold span of the same utterance.
pub fn span_f1(gold: &[Vec<SlotSpan>], pred: &[Vec<SlotSpan>]) -> LabeledScores {
    assert_eq!(gold.len(), pred.len(), "gold/pred utterance counts differ");
    let mut counts: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    let mut any_predictions = false;
    for (g, p) in gold.iter().zip(pred) {
        any_predictions |= !p.is_empty();
        let gold_set: HashSet<&SlotSpan> = g.iter().collect();
        let pred_set: HashSet<&SlotSpan> = p.iter().collect();
        for span in g {
            let entry = counts.entry(span.kind.clone()).or_default();
            if pred_set.contains(span) {
                entry.0 += 1;
            } else {
                entry.2 += 1;
            }
        }
        for span in p {
            if !gold_set.contains(span) {
                counts.entry(span.kind.clone()).or_default().1 += 1;
            }
        }
    }
    let per_label: Vec<(String, PrfScore)> = counts
        .into_iter()
        .map(|(kind, (tp, fp, fn_))| (kind, PrfScore::from_counts(tp, fp, fn_)))
        .collect();
    let weighted_f1 = weighted(&per_label, any_predictions);
    LabeledScores { per_label, weighted_f1 }
}

/// Per-axis weighted F1 for intent classification, plus the macro mean.
pub fn intent_scores(
    gold: &[BTreeMap<String, String>],
    pred: &[BTreeMap<String, String>],
    axes: &[String],
) -> (Vec<(String, LabeledScores)>, f64) {
    assert_eq!(gold.len(), pred.len(), "gold/pred utterance counts differ");
    let mut out = Vec::with_capacity(axes.len());
    for axis in axes {
        let pairs = gold.iter().zip(pred).map(|(g, p)| {
            let g = g.get(axis).map(String::as_str).unwrap_or("");
            let p = p.get(axis).map(String::as_str).unwrap_or("");
            (g, p)
        });
        out.push((axis.clone(), multiclass_prf(pairs)));
    }
    let macro_f1 = if out.is_empty() {
        0.0
    } else {
        out.iter().map(|(_, s)| s.weighted_f1).sum::<f64>() / out.len() as f64
    };
    (out, macro_f1)
}
