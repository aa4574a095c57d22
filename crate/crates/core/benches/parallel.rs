//! Sequential vs data-parallel benchmarks for the hot loops: CRF batch
//! gradients, fold evaluation and skip-gram training.
//!
//! With the default `parallel` feature the `par/*` benchmarks run on the
//! rayon pool; built with `--no-default-features` they fall back to the
//! sequential path, so the two groups coincide.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use nlu_forge::crf::{nll_and_grad, train_crf, CrfTrainOpts, SentenceExample};
use nlu_forge::data::LabelSchema;
use nlu_forge::embeddings::{train_skipgram, SubwordConfig, TrainOpts};
use nlu_forge::eval::{evaluate, repeated_kfold, Prediction};
use nlu_forge::exec::ExecMode;
use nlu_forge::generator::{generate, sample_pack};

fn modes() -> [(&'static str, ExecMode); 2] {
    [("seq", ExecMode::Sequential), ("par", ExecMode::Parallel)]
}

fn bench_crf_batch_gradient(c: &mut Criterion) {
    let schema = LabelSchema::default();
    let train = generate(&schema, &sample_pack(), 128, 1).unwrap();
    let dev = generate(&schema, &sample_pack(), 32, 2).unwrap();
    // one epoch just to build a realistic feature dictionary and weights
    let opts = CrfTrainOpts { epochs: 1, ..CrfTrainOpts::default() };
    let (model, _) = train_crf(&train, &dev, &opts, None).unwrap();
    let examples: Vec<SentenceExample> = train
        .utterances
        .iter()
        .map(|utt| {
            let features = model.featurize(&utt.tokens, None, None, None).unwrap();
            let gold = utt
                .slot_tags
                .iter()
                .map(|t| model.labels.iter().position(|l| l == t).unwrap())
                .collect();
            SentenceExample { features, gold }
        })
        .collect();

    let mut group = c.benchmark_group("crf_batch_gradient");
    for (name, mode) in modes() {
        group.bench_with_input(BenchmarkId::new(name, examples.len()), &mode, |b, &mode| {
            b.iter(|| nll_and_grad(&model, &examples, mode))
        });
    }
    group.finish();
}

fn bench_fold_evaluation(c: &mut Criterion) {
    let schema = LabelSchema::default();
    let corpus = generate(&schema, &sample_pack(), 400, 3).unwrap();
    let plan = repeated_kfold(corpus.len(), 5, 10, 4).unwrap();
    let predict = |utt: &nlu_forge::data::Utterance| Prediction {
        tags: utt.slot_tags.clone(),
        intents: Some(utt.intents.clone()),
    };

    let mut group = c.benchmark_group("fold_evaluation");
    for (name, mode) in modes() {
        group.bench_with_input(BenchmarkId::new(name, plan.fold_count()), &mode, |b, &mode| {
            b.iter(|| evaluate(predict, &corpus, &plan, mode).unwrap())
        });
    }
    group.finish();
}

fn bench_skipgram_epoch(c: &mut Criterion) {
    let schema = LabelSchema::default();
    let corpus = generate(&schema, &sample_pack(), 400, 5).unwrap();
    let lines: Vec<String> = corpus.utterances.iter().map(|u| u.tokens.join(" ")).collect();

    let mut group = c.benchmark_group("skipgram_epoch");
    group.sample_size(10);
    for (name, threads) in [("seq", 1usize), ("par", 4)] {
        group.bench_with_input(BenchmarkId::new(name, lines.len()), &threads, |b, &threads| {
            let opts = TrainOpts {
                dim: 32,
                epochs: 1,
                subword: SubwordConfig { bucket_count: 1 << 12, ..SubwordConfig::default() },
                seed: 7,
                threads,
                ..TrainOpts::default()
            };
            b.iter(|| train_skipgram(&lines, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_crf_batch_gradient,
    bench_fold_evaluation,
    bench_skipgram_epoch
);
criterion_main!(benches);
