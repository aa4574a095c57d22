//! Mini-batch Adam training loops with dropout and best-on-dev
//! checkpointing. Training is single-threaded per model; parallelism lives
//! in the random-search driver, which trains independent grid points.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Corpus, SlotSpan};
use crate::embeddings::EmbeddingModel;
use crate::error::{Error, Result};
use crate::eval::{intent_scores, span_f1};
use crate::exec::mix_seed;

use super::adam::{AdamOpts, AdamState};
use super::intent::{CnnIntentClassifier, IntentConfig};
use super::store::GradBuffer;
use super::tagger::{BiLstmTagger, TaggerConfig, UNK};

/// Optimization knobs shared by both neural trainers.
#[derive(Debug, Clone)]
pub struct NeuralTrainOpts {
    pub adam: AdamOpts,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Early-stop patience on the dev metric; 0 disables early stopping.
    pub patience: usize,
}

impl Default for NeuralTrainOpts {
    fn default() -> Self {
        NeuralTrainOpts {
            adam: AdamOpts::with_lr(2e-3),
            epochs: 10,
            batch_size: 8,
            seed: 1,
            patience: 0,
        }
    }
}

/// Per-epoch dev scores of a training run.
#[derive(Debug, Clone, Default)]
pub struct NeuralTrainLog {
    pub dev_metric: Vec<f64>,
    pub best_epoch: Option<usize>,
    pub warnings: Vec<String>,
}

/// Token inventory of a corpus: `<unk>` followed by the sorted unique
/// tokens.
pub fn corpus_vocab(corpus: &Corpus) -> Vec<String> {
    let mut tokens: Vec<String> = corpus
        .utterances
        .iter()
        .flat_map(|u| u.tokens.iter().cloned())
        .collect::<std::collections::BTreeSet<String>>()
        .into_iter()
        .collect();
    let mut vocab = Vec::with_capacity(tokens.len() + 1);
    vocab.push(UNK.to_string());
    vocab.append(&mut tokens);
    vocab
}

fn check_corpora(train: &Corpus, dev: &Corpus) -> Result<()> {
    if train.is_empty() {
        return Err(Error::Data("training corpus is empty".into()));
    }
    if dev.is_empty() {
        return Err(Error::Data("dev corpus is empty".into()));
    }
    Ok(())
}

/// Train a biLSTM tagger, checkpointing on dev weighted span F1.
pub fn train_tagger(
    train: &Corpus,
    dev: &Corpus,
    config: TaggerConfig,
    opts: &NeuralTrainOpts,
    pretrained: Option<&EmbeddingModel>,
) -> Result<(BiLstmTagger, NeuralTrainLog)> {
    check_corpora(train, dev)?;
    let vocab = corpus_vocab(train);
    let labels = train.schema.slot_labels.clone();
    let model = BiLstmTagger::new(config, labels, vocab, opts.seed, pretrained)?;

    let examples: Vec<(Vec<usize>, Vec<usize>)> = train
        .utterances
        .iter()
        .map(|utt| {
            let ids = model.token_ids(&utt.tokens);
            let gold = utt
                .slot_tags
                .iter()
                .map(|t| model.label_index(t))
                .collect::<Result<Vec<usize>>>()?;
            Ok((ids, gold))
        })
        .collect::<Result<_>>()?;
    let dev_gold: Vec<Vec<SlotSpan>> =
        dev.utterances.iter().map(|u| u.spans()).collect::<Result<_>>()?;

    let dev_score = |model: &BiLstmTagger| -> Result<f64> {
        let pred: Vec<Vec<SlotSpan>> = dev
            .utterances
            .iter()
            .map(|u| model.predict(&u.tokens).map(|(_, spans)| spans))
            .collect::<Result<_>>()?;
        Ok(span_f1(&dev_gold, &pred).weighted_f1)
    };

    let freeze = model.config.freeze_embeddings;
    let embed_seg = model.segs_embed();
    run_loop(
        model,
        examples.len(),
        opts,
        |model, idx, rng, grads| {
            let (ids, gold) = &examples[idx];
            model.train_step_loss(ids, gold, rng, grads);
            Ok(())
        },
        |model, grads| {
            if freeze {
                grads.seg_mut(&model.store.layout, embed_seg).fill(0.0);
            }
        },
        |model, adam_state, adam, grads| {
            adam_state.step(adam, &mut model.store.data, &grads.data);
        },
        dev_score,
        |m| m.store.len(),
    )
}

/// Train a CNN intent classifier, checkpointing on dev macro weighted F1
/// over the intent axes.
pub fn train_intents(
    train: &Corpus,
    dev: &Corpus,
    config: IntentConfig,
    opts: &NeuralTrainOpts,
    pretrained: Option<&EmbeddingModel>,
) -> Result<(CnnIntentClassifier, NeuralTrainLog)> {
    check_corpora(train, dev)?;
    let vocab = corpus_vocab(train);
    let axes = train.schema.intent_axes.clone();
    let axis_names: Vec<String> = axes.iter().map(|a| a.name.clone()).collect();
    let model = CnnIntentClassifier::new(config, axes, vocab, opts.seed, pretrained)?;

    // fail fast when the corpus does not carry some axis
    for utt in train.utterances.iter().chain(&dev.utterances) {
        for axis in &axis_names {
            if !utt.intents.contains_key(axis) {
                return Err(Error::Schema(format!(
                    "utterance '{}': missing intent axis '{axis}'",
                    utt.id
                )));
            }
        }
    }

    let train_utts = train.utterances.clone();
    let gold_intents: Vec<_> = dev.utterances.iter().map(|u| u.intents.clone()).collect();
    let dev_score = |model: &CnnIntentClassifier| -> Result<f64> {
        let pred: Vec<_> = dev
            .utterances
            .iter()
            .map(|u| model.predict(&u.tokens))
            .collect::<Result<_>>()?;
        let (_, macro_f1) = intent_scores(&gold_intents, &pred, &axis_names);
        Ok(macro_f1)
    };

    let freeze = model.config.freeze_embeddings;
    let embed_seg = model.segs_embed();
    run_loop(
        model,
        train_utts.len(),
        opts,
        |model, idx, _rng, grads| {
            let (_, g) = model.intent_loss(&train_utts[idx])?;
            grads.add_from(&g);
            Ok(())
        },
        |model, grads| {
            if freeze {
                grads.seg_mut(&model.store.layout, embed_seg).fill(0.0);
            }
        },
        |model, adam_state, adam, grads| {
            adam_state.step(adam, &mut model.store.data, &grads.data);
        },
        dev_score,
        |m| m.store.len(),
    )
}

/// The shared epoch/batch/checkpoint loop.
#[allow(clippy::too_many_arguments)]
fn run_loop<M, FStep, FPost, FApply, FScore, FLen>(
    mut model: M,
    n_examples: usize,
    opts: &NeuralTrainOpts,
    mut step: FStep,
    post_batch: FPost,
    mut apply: FApply,
    dev_score: FScore,
    param_len: FLen,
) -> Result<(M, NeuralTrainLog)>
where
    M: Clone,
    FStep: FnMut(&M, usize, &mut ChaCha8Rng, &mut GradBuffer) -> Result<()>,
    FPost: Fn(&M, &mut GradBuffer),
    FApply: FnMut(&mut M, &mut AdamState, &AdamOpts, &GradBuffer),
    FScore: Fn(&M) -> Result<f64>,
    FLen: Fn(&M) -> usize,
{
    let mut log = NeuralTrainLog::default();
    if opts.epochs == 0 {
        log.warnings.push("epochs=0: returning the untrained model".into());
        return Ok((model, log));
    }

    let mut adam_state = AdamState::new(param_len(&model));
    let mut grads = GradBuffer { data: vec![0.0; param_len(&model)] };
    let mut order: Vec<usize> = (0..n_examples).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(f64, M, usize)> = None;
    let mut since_best = 0usize;

    for epoch in 0..opts.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(opts.batch_size.max(1)) {
            grads.clear();
            for &idx in chunk {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(mix_seed(opts.seed, epoch as u64, idx as u64));
                step(&model, idx, &mut rng, &mut grads)?;
            }
            grads.scale(1.0 / chunk.len() as f64);
            post_batch(&model, &mut grads);
            apply(&mut model, &mut adam_state, &opts.adam, &grads);
        }
        let score = dev_score(&model)?;
        log.dev_metric.push(score);
        let improved = best.as_ref().map(|(b, _, _)| score > *b).unwrap_or(true);
        if improved {
            best = Some((score, model.clone(), epoch));
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabelSchema;
    use crate::generator::{generate, sample_pack};

    fn corpora(n_train: usize, n_dev: usize) -> (Corpus, Corpus) {
        let schema = LabelSchema::default();
        let pack = sample_pack();
        (
            generate(&schema, &pack, n_train, 100).unwrap(),
            generate(&schema, &pack, n_dev, 200).unwrap(),
        )
    }

    #[test]
    fn tagger_learns_in_distribution_slots() {
        let (train, dev) = corpora(300, 80);
        let config = TaggerConfig {
            hidden: 32,
            dropout_embed: 0.0,
            dropout_lstm: 0.0,
            ..TaggerConfig::default()
        };
        let opts = NeuralTrainOpts { epochs: 8, ..NeuralTrainOpts::default() };
        let (_, log) = train_tagger(&train, &dev, config, &opts, None).unwrap();
        let best = log.dev_metric.iter().cloned().fold(0.0, f64::max);
        assert!(best >= 0.90, "dev span F1 {best}, curve {:?}", log.dev_metric);
    }

    #[test]
    fn intent_classifier_learns_single_cue_axes() {
        // 50 examples where one surface word decides each axis
        let (train, dev) = corpora(150, 50);
        let config = IntentConfig { filters: 32, ..IntentConfig::default() };
        let opts = NeuralTrainOpts {
            adam: AdamOpts::with_lr(8e-3),
            epochs: 12,
            ..NeuralTrainOpts::default()
        };
        let (model, log) = train_intents(&train, &dev, config, &opts, None).unwrap();
        let best = log.dev_metric.iter().cloned().fold(0.0, f64::max);
        assert!(best >= 0.85, "dev macro F1 {best}, curve {:?}", log.dev_metric);
        // held-in sanity: training items classify correctly
        let mut hits = 0;
        for utt in train.utterances.iter().take(50) {
            if model.predict(&utt.tokens).unwrap() == utt.intents {
                hits += 1;
            }
        }
        assert!(hits >= 45, "held-in accuracy {hits}/50");
    }

    #[test]
    fn single_cue_token_is_learned_perfectly() {
        // 50 utterances in which one token alone decides the "time" axis;
        // after 30 epochs the training set classifies with accuracy 1.0
        use crate::data::{LabelSchema, Provenance, Utterance};
        use std::collections::BTreeMap;

        let schema = LabelSchema::default();
        let time_axis = schema.axis("time").unwrap().clone();
        let fillers = ["alpha", "beta", "gamma", "delta", "epsilon"];
        let make = |i: usize| {
            let category = &time_axis.categories[i % 3];
            let cue = format!("cue{}", i % 3);
            let mut intents = BTreeMap::new();
            intents.insert("result_type".into(), "value".into());
            intents.insert("interpretation".into(), "value".into());
            intents.insert("time".into(), category.clone());
            intents.insert("time_constraint".into(), "none".into());
            Utterance {
                id: format!("u{i}"),
                tokens: vec![
                    fillers[i % fillers.len()].into(),
                    cue,
                    fillers[(i * 3 + 1) % fillers.len()].into(),
                ],
                slot_tags: vec!["O".into(); 3],
                intents,
                provenance: Provenance { template_id: "t".into(), ..Default::default() },
                lemmas: None,
                pos: None,
            }
        };
        let utterances: Vec<Utterance> = (0..50).map(make).collect();
        let train = Corpus::new(schema.clone(), utterances).unwrap();
        let dev = Corpus::new(
            schema,
            (50..60).map(make).collect(),
        )
        .unwrap();

        let config = IntentConfig { embed_dim: 16, filters: 16, ..IntentConfig::default() };
        let opts = NeuralTrainOpts {
            adam: AdamOpts::with_lr(8e-3),
            epochs: 30,
            ..NeuralTrainOpts::default()
        };
        let (model, _) = train_intents(&train, &dev, config, &opts, None).unwrap();
        for utt in &train.utterances {
            let pred = model.predict(&utt.tokens).unwrap();
            assert_eq!(pred["time"], utt.intents["time"], "{:?}", utt.tokens);
        }
    }

    #[test]
    fn same_seed_reproduces_dev_curves() {
        let (train, dev) = corpora(60, 20);
        let config = TaggerConfig {
            hidden: 16,
            embed_dim: 16,
            ..TaggerConfig::default()
        };
        let opts = NeuralTrainOpts { epochs: 3, ..NeuralTrainOpts::default() };
        let (_, log_a) = train_tagger(&train, &dev, config.clone(), &opts, None).unwrap();
        let (_, log_b) = train_tagger(&train, &dev, config, &opts, None).unwrap();
        assert_eq!(log_a.dev_metric, log_b.dev_metric);
    }

    #[test]
    fn zero_epochs_warns() {
        let (train, dev) = corpora(10, 5);
        let opts = NeuralTrainOpts { epochs: 0, ..NeuralTrainOpts::default() };
        let (_, log) =
            train_intents(&train, &dev, IntentConfig::default(), &opts, None).unwrap();
        assert!(!log.warnings.is_empty());
    }
}
