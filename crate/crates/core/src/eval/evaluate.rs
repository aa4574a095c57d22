//! Fold-wise evaluation of a trained predictor on a test corpus.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{spans_from_bio, Corpus, SlotSpan, Utterance};
use crate::error::{Error, Result};
use crate::exec::{ordered_map, ExecMode};

use super::folds::{ci95, Ci95, FoldPlan};
use super::metrics::{intent_scores, span_f1, token_f1, PrfScore};

/// A model's output for one utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub tags: Vec<String>,
    /// Absent when only a slot model is being evaluated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intents: Option<BTreeMap<String, String>>,
}

/// One metric over the whole set, plus its fold-score interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricBlock {
    pub per_label: Vec<(String, PrfScore)>,
    pub weighted_f1: f64,
    pub ci: Ci95,
}

/// Whole-set and fold-interval scores for one intent axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisReport {
    pub axis: String,
    pub weighted_f1: f64,
    pub ci: Ci95,
}

/// Aggregated evaluation results. The model is trained once elsewhere;
/// each fold of the test set is scored independently and the intervals
/// summarize the k × repetitions fold scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub slot_span: MetricBlock,
    pub slot_token: MetricBlock,
    pub intents: Vec<AxisReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intent_macro: Option<f64>,
    pub fold_count: usize,
}

/// Score `predict` over `corpus` according to `plan`.
///
/// Predictions are computed once per utterance (in parallel under
/// `ExecMode::Parallel`, order preserved) and folds are scored over the
/// cached outputs, so the report is identical in both modes.
pub fn evaluate<F>(predict: F, corpus: &Corpus, plan: &FoldPlan, mode: ExecMode) -> Result<EvalReport>
where
    F: Fn(&Utterance) -> Prediction + Sync,
{
    if plan.n_items != corpus.len() {
        return Err(Error::Config(format!(
            "fold plan covers {} items but corpus has {}",
            plan.n_items,
            corpus.len()
        )));
    }
    if corpus.is_empty() {
        return Err(Error::Config("cannot evaluate an empty corpus".into()));
    }

    let predictions = ordered_map(mode, &corpus.utterances, &predict);
    for (utt, pred) in corpus.utterances.iter().zip(&predictions) {
        if pred.tags.len() != utt.tokens.len() {
            return Err(Error::Data(format!(
                "prediction for '{}' has {} tags for {} tokens",
                utt.id,
                pred.tags.len(),
                utt.tokens.len()
            )));
        }
    }

    let gold_tags: Vec<Vec<String>> =
        corpus.utterances.iter().map(|u| u.slot_tags.clone()).collect();
    let pred_tags: Vec<Vec<String>> = predictions.iter().map(|p| p.tags.clone()).collect();
    let gold_spans: Vec<Vec<SlotSpan>> =
        gold_tags.iter().map(|t| spans_from_bio(t)).collect::<Result<_>>()?;
    let pred_spans: Vec<Vec<SlotSpan>> =
        pred_tags.iter().map(|t| spans_from_bio(t)).collect::<Result<_>>()?;

    let have_intents = predictions.iter().all(|p| p.intents.is_some());
    let axes: Vec<String> = corpus.schema.intent_axes.iter().map(|a| a.name.clone()).collect();
    let gold_intents: Vec<BTreeMap<String, String>> =
        corpus.utterances.iter().map(|u| u.intents.clone()).collect();
    let pred_intents: Vec<BTreeMap<String, String>> = predictions
        .iter()
        .map(|p| p.intents.clone().unwrap_or_default())
        .collect();

    // per-fold weighted scores, flattened over (repetition, fold)
    let fold_indices: Vec<&Vec<usize>> = plan.assignments.iter().flatten().collect();
    let fold_scores = ordered_map(mode, &fold_indices, |indices| {
        let pick = |src: &Vec<Vec<String>>| -> Vec<Vec<String>> {
            indices.iter().map(|&i| src[i].clone()).collect()
        };
        let g_spans: Vec<Vec<SlotSpan>> = indices.iter().map(|&i| gold_spans[i].clone()).collect();
        let p_spans: Vec<Vec<SlotSpan>> = indices.iter().map(|&i| pred_spans[i].clone()).collect();
        let span = span_f1(&g_spans, &p_spans).weighted_f1;
        let token = token_f1(&pick(&gold_tags), &pick(&pred_tags), true).weighted_f1;
        let axis_scores: Vec<f64> = if have_intents {
            let g: Vec<BTreeMap<String, String>> =
                indices.iter().map(|&i| gold_intents[i].clone()).collect();
            let p: Vec<BTreeMap<String, String>> =
                indices.iter().map(|&i| pred_intents[i].clone()).collect();
            intent_scores(&g, &p, &axes).0.into_iter().map(|(_, s)| s.weighted_f1).collect()
        } else {
            Vec::new()
        };
        (span, token, axis_scores)
    });

    let span_fold: Vec<f64> = fold_scores.iter().map(|(s, _, _)| *s).collect();
    let token_fold: Vec<f64> = fold_scores.iter().map(|(_, t, _)| *t).collect();

    let whole_span = span_f1(&gold_spans, &pred_spans);
    let whole_token = token_f1(&gold_tags, &pred_tags, true);

    let mut intents = Vec::new();
    let mut intent_macro = None;
    if have_intents {
        let (whole_axes, macro_f1) = intent_scores(&gold_intents, &pred_intents, &axes);
        intent_macro = Some(macro_f1);
        for (i, (axis, scores)) in whole_axes.into_iter().enumerate() {
            let axis_fold: Vec<f64> =
                fold_scores.iter().map(|(_, _, a)| a[i]).collect();
            intents.push(AxisReport {
                axis,
                weighted_f1: scores.weighted_f1,
                ci: ci95(&axis_fold)?,
            });
        }
    }

    Ok(EvalReport {
        slot_span: MetricBlock {
            per_label: whole_span.per_label,
            weighted_f1: whole_span.weighted_f1,
            ci: ci95(&span_fold)?,
        },
        slot_token: MetricBlock {
            per_label: whole_token.per_label,
            weighted_f1: whole_token.weighted_f1,
            ci: ci95(&token_fold)?,
        },
        intents,
        intent_macro,
        fold_count: plan.fold_count(),
    })
}

impl EvalReport {
    /// Human-readable table for standard output.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let block = |out: &mut String, title: &str, block: &MetricBlock| {
            out.push_str(&format!("{title}\n"));
            out.push_str("  label              P      R     F1  support\n");
            for (label, s) in &block.per_label {
                out.push_str(&format!(
                    "  {:<14} {:>6.3} {:>6.3} {:>6.3} {:>8}\n",
                    label, s.precision, s.recall, s.f1, s.support
                ));
            }
            out.push_str(&format!(
                "  weighted F1 {:.4}  folds mean {:.4}  95% CI [{:.4}, {:.4}]\n",
                block.weighted_f1, block.ci.mean, block.ci.lo, block.ci.hi
            ));
        };
        block(&mut out, "slot spans (exact match)", &self.slot_span);
        block(&mut out, "slot tokens", &self.slot_token);
        if !self.intents.is_empty() {
            out.push_str("intent axes\n");
            for axis in &self.intents {
                out.push_str(&format!(
                    "  {:<16} weighted F1 {:.4}  mean {:.4}  95% CI [{:.4}, {:.4}]\n",
                    axis.axis, axis.weighted_f1, axis.ci.mean, axis.ci.lo, axis.ci.hi
                ));
            }
            if let Some(m) = self.intent_macro {
                out.push_str(&format!("  macro mean       {m:.4}\n"));
            }
        }
        out.push_str(&format!("folds scored: {}\n", self.fold_count));
        out
    }
}
