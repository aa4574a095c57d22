//! CRF training: batch negative log-likelihood, gradients and the Adam
//! loop with best-on-dev checkpointing.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{spans_from_bio, Corpus, SlotSpan};
use crate::embeddings::EmbeddingModel;
use crate::error::{Error, Result};
use crate::eval::span_f1;
use crate::exec::{ordered_map, ExecMode};
use crate::neural::{AdamOpts, AdamState};

use super::features::{extract_features, DenseStats, FeatureDict, FeatureVector};
use super::inference;
use super::CrfModel;

/// One featurized training sentence with gold label indices.
#[derive(Debug, Clone)]
pub struct SentenceExample {
    pub features: Vec<FeatureVector>,
    pub gold: Vec<usize>,
}

/// Gradient with the same layout as the model parameters.
#[derive(Debug, Clone)]
pub struct CrfGrad {
    pub emission: Vec<f64>,
    pub dense: Option<Vec<f64>>,
    pub transitions: Vec<f64>,
}

/// Contribution of one sentence, kept sparse on the emission block.
struct SentenceGrad {
    loss: f64,
    emission: Vec<(usize, f64)>,
    dense: Option<Vec<f64>>,
    transitions: Vec<f64>,
}

fn sentence_grad(model: &CrfModel, example: &SentenceExample, trans: &[Vec<f64>]) -> SentenceGrad {
    let n_labels = model.n_labels();
    let n_feats = model.dict.len();
    let emissions = model.emissions(&example.features);
    let (nll, d_emissions, d_transitions) =
        inference::nll_grad_scores(&emissions, trans, &example.gold);

    let mut emission = Vec::new();
    let mut dense = model.dense_weights().map(|_| vec![0.0; n_labels * model.dense_dim]);
    for (t, fv) in example.features.iter().enumerate() {
        for y in 0..n_labels {
            let coef = d_emissions[t][y];
            if coef == 0.0 {
                continue;
            }
            for &f in &fv.sparse {
                emission.push((y * n_feats + f as usize, coef));
            }
            if let (Some(dense), Some(x)) = (dense.as_mut(), fv.dense.as_ref()) {
                let row = &mut dense[y * model.dense_dim..(y + 1) * model.dense_dim];
                for (g, xv) in row.iter_mut().zip(x) {
                    *g += coef * xv;
                }
            }
        }
    }
    let transitions = d_transitions.into_iter().flatten().collect();
    SentenceGrad { loss: nll, emission, dense, transitions }
}

/// Batch negative log-likelihood and gradient.
///
/// The loss is the sum of per-sentence NLLs plus `(λ/2)·‖W‖²` over every
/// parameter block; the gradient is expected-minus-empirical feature
/// counts plus `λ·W`. Sentences are processed as an ordered data-parallel
/// map, so results are bit-identical in both execution modes.
pub fn nll_and_grad(
    model: &CrfModel,
    batch: &[SentenceExample],
    mode: ExecMode,
) -> (f64, CrfGrad) {
    let trans = model.transitions_nested();
    let partials = ordered_map(mode, batch, |ex| sentence_grad(model, ex, &trans));

    let n_labels = model.n_labels();
    let n_feats = model.dict.len();
    let mut grad = CrfGrad {
        emission: vec![0.0; n_labels * n_feats],
        dense: model.dense_weights().map(|w| vec![0.0; w.len()]),
        transitions: vec![0.0; n_labels * n_labels],
    };
    let mut loss = 0.0;
    for part in partials {
        loss += part.loss;
        for (idx, g) in part.emission {
            grad.emission[idx] += g;
        }
        if let (Some(acc), Some(d)) = (grad.dense.as_mut(), part.dense) {
            for (a, g) in acc.iter_mut().zip(d) {
                *a += g;
            }
        }
        for (a, g) in grad.transitions.iter_mut().zip(part.transitions) {
            *a += g;
        }
    }

    if model.l2 > 0.0 {
        let lambda = model.l2;
        let mut reg = 0.0;
        for (g, w) in grad.emission.iter_mut().zip(model.emission_weights()) {
            reg += w * w;
            *g += lambda * w;
        }
        if let (Some(acc), Some(w)) = (grad.dense.as_mut(), model.dense_weights()) {
            for (g, w) in acc.iter_mut().zip(w) {
                reg += w * w;
                *g += lambda * w;
            }
        }
        for (g, w) in grad.transitions.iter_mut().zip(model.transition_weights()) {
            reg += w * w;
            *g += lambda * w;
        }
        loss += 0.5 * lambda * reg;
    }
    (loss, grad)
}

/// Training options. `patience` of 0 disables early stopping.
#[derive(Debug, Clone)]
pub struct CrfTrainOpts {
    pub adam: AdamOpts,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
    pub patience: usize,
    pub threads: usize,
}

impl Default for CrfTrainOpts {
    fn default() -> Self {
        CrfTrainOpts {
            adam: AdamOpts::with_lr(0.05),
            epochs: 10,
            batch_size: 8,
            l2: 1e-6,
            seed: 1,
            patience: 0,
            threads: 1,
        }
    }
}

/// Per-epoch diagnostics of a CRF training run.
#[derive(Debug, Clone, Default)]
pub struct CrfTrainLog {
    pub dev_span_f1: Vec<f64>,
    pub best_epoch: Option<usize>,
    pub warnings: Vec<String>,
}

fn gold_indices(corpus: &Corpus, labels: &[String]) -> Result<Vec<Vec<usize>>> {
    corpus
        .utterances
        .iter()
        .map(|utt| {
            utt.slot_tags
                .iter()
                .map(|t| {
                    labels.iter().position(|l| l == t).ok_or_else(|| {
                        Error::Schema(format!("tag '{t}' missing from label set"))
                    })
                })
                .collect()
        })
        .collect()
}

/// Train a CRF on `train`, checkpointing on dev weighted span F1.
pub fn train_crf(
    train: &Corpus,
    dev: &Corpus,
    opts: &CrfTrainOpts,
    embeddings: Option<&EmbeddingModel>,
) -> Result<(CrfModel, CrfTrainLog)> {
    if train.is_empty() {
        return Err(Error::Data("training corpus is empty".into()));
    }
    if dev.is_empty() {
        return Err(Error::Data("dev corpus is empty".into()));
    }
    let labels = train.schema.slot_labels.clone();
    let mode = ExecMode::from_threads(opts.threads);

    // dense standardization statistics from the raw training-token vectors
    let dense_stats = embeddings.map(|model| {
        let vectors: Vec<Vec<f64>> = train
            .utterances
            .iter()
            .flat_map(|u| u.tokens.iter())
            .map(|t| model.word_vector(t).0)
            .collect();
        DenseStats::fit(&vectors)
    });

    let mut dict = FeatureDict::new();
    let featurize = |dict: &mut FeatureDict, corpus: &Corpus| -> Result<Vec<Vec<FeatureVector>>> {
        corpus
            .utterances
            .iter()
            .map(|utt| {
                (0..utt.tokens.len())
                    .map(|t| {
                        extract_features(
                            dict,
                            &utt.tokens,
                            utt.lemmas.as_deref(),
                            utt.pos.as_deref(),
                            embeddings.map(|m| (m, dense_stats.as_ref().expect("fitted"))),
                            t,
                        )
                    })
                    .collect()
            })
            .collect()
    };

    let train_features = featurize(&mut dict, train)?;
    dict.freeze();
    let dev_features = featurize(&mut dict, dev)?;

    let train_gold = gold_indices(train, &labels)?;
    let dense_dim = embeddings.map(|m| m.dim).unwrap_or(0);
    let mut model = CrfModel::new(labels.clone(), dict, dense_dim, opts.l2);
    model.dense_stats = dense_stats;

    let examples: Vec<SentenceExample> = train_features
        .into_iter()
        .zip(train_gold)
        .map(|(features, gold)| SentenceExample { features, gold })
        .collect();

    let dev_gold_spans: Vec<Vec<SlotSpan>> = dev
        .utterances
        .iter()
        .map(|u| u.spans())
        .collect::<Result<_>>()?;

    let mut log = CrfTrainLog::default();
    if opts.epochs == 0 {
        log.warnings.push("epochs=0: returning the zero-initialized model".into());
        return Ok((model, log));
    }

    let mut adam_emission = AdamState::new(model.emission_weights().len());
    let mut adam_dense = model.dense_weights().map(|w| AdamState::new(w.len()));
    let mut adam_trans = AdamState::new(model.transition_weights().len());

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut best: Option<(f64, CrfModel, usize)> = None;
    let mut since_best = 0usize;

    for epoch in 0..opts.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(opts.batch_size.max(1)) {
            let batch: Vec<SentenceExample> =
                chunk.iter().map(|&i| examples[i].clone()).collect();
            let (_, grad) = nll_and_grad(&model, &batch, mode);
            let scale = 1.0 / batch.len() as f64;
            let scaled: Vec<f64> = grad.emission.iter().map(|g| g * scale).collect();
            adam_emission.step(&opts.adam, model.emission_weights_mut(), &scaled);
            if let (Some(adam), Some(dense)) = (adam_dense.as_mut(), grad.dense) {
                let scaled: Vec<f64> = dense.iter().map(|g| g * scale).collect();
                adam.step(
                    &opts.adam,
                    model.dense_weights_mut().expect("dense block"),
                    &scaled,
                );
            }
            let scaled: Vec<f64> = grad.transitions.iter().map(|g| g * scale).collect();
            adam_trans.step(&opts.adam, model.transition_weights_mut(), &scaled);
        }

        // dev weighted span F1 with the current weights
        let trans = model.transitions_nested();
        let dev_pred: Vec<Vec<SlotSpan>> = ordered_map(mode, &dev_features, |features| {
            if features.is_empty() {
                return Vec::new();
            }
            let emissions = model.emissions(features);
            let path = inference::viterbi(&emissions, &trans);
            let tags: Vec<String> = path.iter().map(|&y| model.labels[y].clone()).collect();
            spans_from_bio(&tags).expect("labels are well-formed")
        });
        let f1 = span_f1(&dev_gold_spans, &dev_pred).weighted_f1;
        log.dev_span_f1.push(f1);

        let improved = best.as_ref().map(|(b, _, _)| f1 > *b).unwrap_or(true);
        if improved {
            best = Some((f1, model.clone(), epoch));
            since_best = 0;
        } else {
            since_best += 1;
            if opts.patience > 0 && since_best >= opts.patience {
                break;
            }
        }
    }

    let (_, best_model, best_epoch) = best.expect("at least one epoch ran");
    log.best_epoch = Some(best_epoch);
    Ok((best_model, log))
}
