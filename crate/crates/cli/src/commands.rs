//! Pipeline commands. Every command validates its inputs up front, writes
//! outputs atomically (temp file + rename) and drops a manifest sidecar
//! (config hash, input checksums, seeds) next to each output, so identical
//! inputs and seeds reproduce byte-identical results.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::time::Duration;

use nlu_forge::crf::{train_crf, CrfModel, CrfTrainOpts, EmbeddingRef};
use nlu_forge::data::{
    canonical_json, corpus_to_jsonl, read_corpus, tokenize, Corpus, LabelSchema, Utterance,
};
use nlu_forge::embeddings::{
    fnv1a64, load_vectors, save_vectors, train_skipgram, EmbeddingModel, SubwordConfig,
    TrainOpts,
};
use nlu_forge::error::{Error, Result};
use nlu_forge::eval::{corpus_stats, evaluate, repeated_kfold, vocab_of, Prediction};
use nlu_forge::exec::ExecMode;
use nlu_forge::generator::{
    generate_with, parse_pack, split_pack, write_pack, GenOptions, TemplatePack,
};
use nlu_forge::neural::{
    load_intents, load_tagger, save_intents, save_tagger, train_intents, train_tagger, AdamOpts,
    BiLstmTagger, CnnIntentClassifier, IntentConfig, NeuralTrainOpts, OutputMode, TaggerConfig,
};
use nlu_forge::paraphrase::{paraphrase_pack, HttpBackend, MockBackend, PivotConfig};

use crate::config::LoadedConfig;

fn file_checksum(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(format!("{:016x}", fnv1a64(&bytes)))
}

/// Write `content` atomically: temp file in the target directory, then
/// rename over the destination.
fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    std::fs::write(tmp.path(), content).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Drop `<output>.manifest.json`: enough to reproduce the output. No
/// timestamps; secrets (API keys) never enter manifests.
fn write_manifest(
    output: &Path,
    command: &str,
    cfg: &LoadedConfig,
    inputs: &[(&str, &Path)],
    seeds: &BTreeMap<&str, u64>,
    threads: usize,
) -> Result<()> {
    let mut input_sums = BTreeMap::new();
    for (name, path) in inputs {
        input_sums.insert(name.to_string(), file_checksum(path)?);
    }
    let manifest = serde_json::json!({
        "command": command,
        "config_checksum": format!("{:016x}", fnv1a64(cfg.raw.as_bytes())),
        "inputs": input_sums,
        "seeds": seeds,
        "threads": threads,
    });
    let mut path = output.as_os_str().to_os_string();
    path.push(".manifest.json");
    write_atomic(Path::new(&path), &format!("{}\n", canonical_json(&manifest)))
}

fn load_schema(cfg: &LoadedConfig) -> Result<LabelSchema> {
    match &cfg.config.schema {
        Some(path) => LabelSchema::from_json_file(cfg.resolve(path)),
        None => Ok(LabelSchema::default()),
    }
}

fn mode_of(threads: usize) -> ExecMode {
    ExecMode::from_threads(threads)
}

// -------------------------------------------------------------------
// generate
// -------------------------------------------------------------------

pub fn cmd_generate(
    cfg: &LoadedConfig,
    seed_override: Option<u64>,
    threads: usize,
    train_pack_override: Option<PathBuf>,
    dev_pack_override: Option<PathBuf>,
) -> Result<()> {
    let schema = load_schema(cfg)?;
    let generation = cfg
        .config
        .generation
        .as_ref()
        .ok_or_else(|| Error::Config("config lacks a [generation] section".into()))?;
    let seed = seed_override.unwrap_or(generation.seed);

    let (train_pack, dev_pack, pack_inputs): (TemplatePack, TemplatePack, Vec<PathBuf>) =
        match (&train_pack_override, &dev_pack_override) {
            (Some(train), Some(dev)) => {
                let t = parse_pack(train, &schema)?;
                let d = parse_pack(dev, &schema)?;
                (t, d, vec![train.clone(), dev.clone()])
            }
            (None, None) => {
                let pack_path = cfg.need_input(&cfg.config.paths.pack, "pack")?;
                let pack = parse_pack(&pack_path, &schema)?;
                let (cores, modifiers, mentions) = pack.counts();
                println!("pack: {cores} cores, {modifiers} modifiers, {mentions} mentions");
                match &generation.split {
                    Some(split) => {
                        let (train, dev) = split_pack(
                            &pack,
                            split.template_ratio,
                            split.mention_ratio,
                            split.seed,
                        )?;
                        let train_path = cfg.need(&cfg.config.paths.train_pack, "train_pack")?;
                        let dev_path = cfg.need(&cfg.config.paths.dev_pack, "dev_pack")?;
                        write_pack(&train, &train_path)?;
                        write_pack(&dev, &dev_path)?;
                        println!(
                            "split: train {}/{} cores/mentions, dev {}/{}",
                            train.cores.len(),
                            train.lab_lexicon.len(),
                            dev.cores.len(),
                            dev.lab_lexicon.len()
                        );
                        (train, dev, vec![pack_path])
                    }
                    None => (pack.clone(), pack, vec![pack_path]),
                }
            }
            _ => {
                return Err(Error::Config(
                    "--train-pack and --dev-pack must be given together".into(),
                ))
            }
        };

    let opts = GenOptions { modifier_prob: generation.modifier_prob, ..GenOptions::default() };
    let train = generate_with(&schema, &train_pack, generation.train_count, seed, &opts)?;
    let dev_opts = GenOptions { id_prefix: "d".into(), ..opts };
    let dev = generate_with(
        &schema,
        &dev_pack,
        generation.dev_count,
        seed.wrapping_add(1),
        &dev_opts,
    )?;

    let train_path = cfg.need(&cfg.config.paths.train_corpus, "train_corpus")?;
    let dev_path = cfg.need(&cfg.config.paths.dev_corpus, "dev_corpus")?;
    write_atomic(&train_path, &corpus_to_jsonl(&train))?;
    write_atomic(&dev_path, &corpus_to_jsonl(&dev))?;

    let seeds: BTreeMap<&str, u64> = [("generation", seed)].into();
    let inputs: Vec<(&str, &Path)> =
        pack_inputs.iter().map(|p| ("pack", p.as_path())).collect();
    write_manifest(&train_path, "generate", cfg, &inputs, &seeds, threads)?;
    write_manifest(&dev_path, "generate", cfg, &inputs, &seeds, threads)?;
    println!(
        "generate: {} train utterances -> {}, {} dev -> {}",
        train.len(),
        train_path.display(),
        dev.len(),
        dev_path.display()
    );
    Ok(())
}

// -------------------------------------------------------------------
// paraphrase
// -------------------------------------------------------------------

fn para_output_path(input: &Path) -> PathBuf {
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("pack");
    let ext = input.extension().and_then(|s| s.to_str()).unwrap_or("json");
    input.with_file_name(format!("{stem}-para.{ext}"))
}

pub fn cmd_paraphrase(cfg: &LoadedConfig, seed_override: Option<u64>, threads: usize) -> Result<()> {
    let schema = load_schema(cfg)?;
    let section = cfg
        .config
        .pivot
        .as_ref()
        .ok_or_else(|| Error::Config("config lacks a [pivot] section".into()))?;
    let mut pivot = PivotConfig {
        n_languages: section.n_languages,
        seed: seed_override.unwrap_or(section.seed),
        source_lang: section.source_lang.clone(),
        max_in_flight: section.max_in_flight,
        ..PivotConfig::default()
    };
    if let Some(pool) = &section.language_pool {
        pivot.language_pool = pool.clone();
    }

    let mock = match &section.mock_table {
        Some(path) => {
            let path = cfg.resolve(path);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            Some(MockBackend::from_json(&text, pivot.source_lang.clone())?)
        }
        None => None,
    };
    let http = if mock.is_none() {
        Some(HttpBackend::from_env(Duration::from_secs(section.timeout_secs))?)
    } else {
        None
    };
    let backend: &dyn nlu_forge::paraphrase::TranslationBackend = match (&mock, &http) {
        (Some(m), _) => m,
        (_, Some(h)) => h,
        _ => unreachable!(),
    };

    // each split is paraphrased independently to preserve disjointness
    let mut pack_paths: Vec<(&str, PathBuf)> = Vec::new();
    if let Some(p) = &cfg.config.paths.train_pack {
        pack_paths.push(("train_pack", cfg.resolve(p)));
    }
    if let Some(p) = &cfg.config.paths.dev_pack {
        pack_paths.push(("dev_pack", cfg.resolve(p)));
    }
    if pack_paths.is_empty() {
        let p = cfg.need(&cfg.config.paths.pack, "pack")?;
        pack_paths.push(("pack", p));
    }

    for (name, path) in pack_paths {
        if !path.exists() {
            return Err(Error::Data(format!(
                "missing {name} file '{}' — run generate first",
                path.display()
            )));
        }
        let pack = parse_pack(&path, &schema)?;
        let (out, stats) = paraphrase_pack(&pack, &pivot, backend, mode_of(threads))?;
        for warning in &stats.warnings {
            eprintln!("warning: {warning}");
        }
        let out_path = para_output_path(&path);
        write_pack(&out, &out_path)?;
        let seeds: BTreeMap<&str, u64> = [("pivot", pivot.seed)].into();
        write_manifest(&out_path, "paraphrase", cfg, &[(name, &path)], &seeds, threads)?;
        println!(
            "paraphrase: {} -> {} (+{} cores, +{} modifiers, {} attempts, {} failures)",
            path.display(),
            out_path.display(),
            stats.added_cores,
            stats.added_modifiers,
            stats.attempted,
            stats.failures.len()
        );
    }
    Ok(())
}

// -------------------------------------------------------------------
// embed
// -------------------------------------------------------------------

pub fn cmd_embed(cfg: &LoadedConfig, seed_override: Option<u64>, threads: usize) -> Result<()> {
    let section = cfg
        .config
        .embedding
        .as_ref()
        .ok_or_else(|| Error::Config("config lacks an [embedding] section".into()))?;
    let unlabeled = cfg.need_input(&cfg.config.paths.unlabeled, "unlabeled")?;
    let vectors = cfg.need(&cfg.config.paths.vectors, "vectors")?;

    let text = std::fs::read_to_string(&unlabeled).map_err(|e| Error::io(&unlabeled, e))?;
    let lines: Vec<String> = text.lines().map(|l| l.to_string()).collect();

    let subword = match &section.subword {
        Some(s) => SubwordConfig {
            n_min: s.n_min,
            n_max: s.n_max,
            bucket_count: s.bucket_count,
            enabled: s.enabled,
        },
        None => SubwordConfig::disabled(),
    };
    let opts = TrainOpts {
        dim: section.dim,
        window: section.window,
        negatives: section.negatives,
        epochs: section.epochs,
        lr: section.lr,
        min_count: section.min_count,
        subword,
        seed: seed_override.unwrap_or(section.seed),
        threads,
    };
    if threads > 1 {
        eprintln!(
            "warning: threads={threads} trains with lock-free parallel updates; \
             the resulting vectors are not reproducible"
        );
    }
    let (model, log) = train_skipgram(&lines, &opts)?;
    if let Some(dir) = vectors.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    save_vectors(&model, &vectors)?;
    let seeds: BTreeMap<&str, u64> = [("embedding", opts.seed)].into();
    write_manifest(&vectors, "embed", cfg, &[("unlabeled", &unlabeled)], &seeds, threads)?;
    println!(
        "embed: {} tokens in vocabulary, {} pairs/epoch, final mean loss {:.4} -> {}",
        model.vocab.len(),
        log.pairs_per_epoch,
        log.epoch_mean_loss.last().unwrap_or(&f64::NAN),
        vectors.display()
    );
    Ok(())
}

// -------------------------------------------------------------------
// train-slots / train-intents
// -------------------------------------------------------------------

fn load_train_dev(cfg: &LoadedConfig, schema: &LabelSchema) -> Result<(Corpus, Corpus)> {
    let train_path = cfg.need_input(&cfg.config.paths.train_corpus, "train_corpus")?;
    let dev_path = cfg.need_input(&cfg.config.paths.dev_corpus, "dev_corpus")?;
    Ok((read_corpus(train_path, schema)?, read_corpus(dev_path, schema)?))
}

fn load_embeddings_if(cfg: &LoadedConfig, wanted: bool) -> Result<Option<(EmbeddingModel, PathBuf)>> {
    if !wanted {
        return Ok(None);
    }
    let vectors = cfg.need_input(&cfg.config.paths.vectors, "vectors")?;
    Ok(Some((load_vectors(&vectors)?, vectors)))
}

pub fn cmd_train_slots(cfg: &LoadedConfig, seed_override: Option<u64>, threads: usize) -> Result<()> {
    let schema = load_schema(cfg)?;
    let section = cfg
        .config
        .slot_model
        .as_ref()
        .ok_or_else(|| Error::Config("config lacks a [slot_model] section".into()))?;
    let (train, dev) = load_train_dev(cfg, &schema)?;
    let out_path = cfg.need(&cfg.config.paths.slot_model, "slot_model")?;
    let seed = seed_override.unwrap_or(section.seed);
    let embeddings = load_embeddings_if(cfg, section.use_embeddings)?;

    let dev_curve = match section.kind.as_str() {
        "crf" => {
            let opts = CrfTrainOpts {
                adam: AdamOpts::with_lr(section.lr),
                epochs: section.epochs,
                batch_size: section.batch_size,
                l2: section.l2,
                seed,
                patience: section.patience,
                threads,
            };
            let (mut model, log) =
                train_crf(&train, &dev, &opts, embeddings.as_ref().map(|(m, _)| m))?;
            for warning in &log.warnings {
                eprintln!("warning: {warning}");
            }
            if let Some((_, vectors_path)) = &embeddings {
                model.embedding_ref = Some(EmbeddingRef {
                    path: vectors_path.display().to_string(),
                    checksum: file_checksum(vectors_path)?,
                });
            }
            if let Some(dir) = out_path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            model.save(&out_path)?;
            log.dev_span_f1
        }
        "bilstm" => {
            let output = match section.output.as_str() {
                "softmax" => OutputMode::Softmax,
                "crf" => OutputMode::Crf,
                other => {
                    return Err(Error::Config(format!(
                        "slot_model.output must be 'softmax' or 'crf', got '{other}'"
                    )))
                }
            };
            let config = TaggerConfig {
                embed_dim: section.embed_dim,
                hidden: section.hidden,
                layers: section.layers,
                dropout_embed: section.dropout_embed,
                dropout_lstm: section.dropout_lstm,
                output,
                freeze_embeddings: section.freeze_embeddings,
            };
            let opts = NeuralTrainOpts {
                adam: AdamOpts::with_lr(section.lr),
                epochs: section.epochs,
                batch_size: section.batch_size,
                seed,
                patience: section.patience,
            };
            let (model, log) = train_tagger(
                &train,
                &dev,
                config,
                &opts,
                embeddings.as_ref().map(|(m, _)| m),
            )?;
            for warning in &log.warnings {
                eprintln!("warning: {warning}");
            }
            if let Some(dir) = out_path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            save_tagger(&model, &schema, &out_path)?;
            log.dev_metric
        }
        other => {
            return Err(Error::Config(format!(
                "slot_model.kind must be 'crf' or 'bilstm', got '{other}'"
            )))
        }
    };

    let train_path = cfg.need(&cfg.config.paths.train_corpus, "train_corpus")?;
    let dev_path = cfg.need(&cfg.config.paths.dev_corpus, "dev_corpus")?;
    let seeds: BTreeMap<&str, u64> = [("slot_model", seed)].into();
    write_manifest(
        &out_path,
        "train-slots",
        cfg,
        &[("train_corpus", &train_path), ("dev_corpus", &dev_path)],
        &seeds,
        threads,
    )?;
    println!(
        "train-slots ({}): dev span F1 per epoch {:?} -> {}",
        section.kind,
        dev_curve.iter().map(|x| (x * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
        out_path.display()
    );
    Ok(())
}

pub fn cmd_train_intents(
    cfg: &LoadedConfig,
    seed_override: Option<u64>,
    threads: usize,
) -> Result<()> {
    let schema = load_schema(cfg)?;
    let section = cfg
        .config
        .intent_model
        .as_ref()
        .ok_or_else(|| Error::Config("config lacks an [intent_model] section".into()))?;
    let (train, dev) = load_train_dev(cfg, &schema)?;
    let out_path = cfg.need(&cfg.config.paths.intent_model, "intent_model")?;
    let seed = seed_override.unwrap_or(section.seed);
    let embeddings = load_embeddings_if(cfg, section.use_embeddings)?;

    let config = IntentConfig {
        embed_dim: section.embed_dim,
        kernel: section.kernel,
        filters: section.filters,
        shared_encoder: section.shared_encoder,
        freeze_embeddings: section.freeze_embeddings,
    };
    let opts = NeuralTrainOpts {
        adam: AdamOpts::with_lr(section.lr),
        epochs: section.epochs,
        batch_size: section.batch_size,
        seed,
        patience: section.patience,
    };
    let (model, log) = train_intents(
        &train,
        &dev,
        config,
        &opts,
        embeddings.as_ref().map(|(m, _)| m),
    )?;
    for warning in &log.warnings {
        eprintln!("warning: {warning}");
    }
    if let Some(dir) = out_path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    save_intents(&model, &schema, &out_path)?;

    let train_path = cfg.need(&cfg.config.paths.train_corpus, "train_corpus")?;
    let dev_path = cfg.need(&cfg.config.paths.dev_corpus, "dev_corpus")?;
    let seeds: BTreeMap<&str, u64> = [("intent_model", seed)].into();
    write_manifest(
        &out_path,
        "train-intents",
        cfg,
        &[("train_corpus", &train_path), ("dev_corpus", &dev_path)],
        &seeds,
        threads,
    )?;
    println!(
        "train-intents: dev macro F1 per epoch {:?} -> {}",
        log.dev_metric.iter().map(|x| (x * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
        out_path.display()
    );
    Ok(())
}

// -------------------------------------------------------------------
// evaluate / predict
// -------------------------------------------------------------------

enum SlotPredictor {
    Crf(Box<CrfModel>, Option<Box<EmbeddingModel>>),
    Tagger(Box<BiLstmTagger>),
}

impl SlotPredictor {
    fn tags(&self, tokens: &[String]) -> Result<(Vec<String>, Vec<nlu_forge::data::SlotSpan>)> {
        match self {
            SlotPredictor::Crf(model, emb) => {
                model.predict(tokens, None, None, emb.as_deref())
            }
            SlotPredictor::Tagger(model) => model.predict(tokens),
        }
    }
}

/// Load the slot model, sniffing the file kind, plus the embeddings a
/// dense CRF requires (validated against the recorded checksum).
fn load_slot_predictor(cfg: &LoadedConfig, schema: &LabelSchema) -> Result<SlotPredictor> {
    let path = cfg.need_input(&cfg.config.paths.slot_model, "slot_model")?;
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    if value.get("kind").and_then(|k| k.as_str()) == Some("bilstm-tagger") {
        return Ok(SlotPredictor::Tagger(Box::new(load_tagger(&path, schema)?)));
    }
    let model = CrfModel::load(&path)?;
    let embeddings = match &model.embedding_ref {
        Some(reference) => {
            let vectors = cfg.resolve(Path::new(&reference.path));
            if !vectors.exists() {
                return Err(Error::Data(format!(
                    "model references missing embedding file '{}'",
                    vectors.display()
                )));
            }
            let checksum = file_checksum(&vectors)?;
            if checksum != reference.checksum {
                return Err(Error::Data(format!(
                    "embedding file '{}' checksum {checksum} does not match the model's {}",
                    vectors.display(),
                    reference.checksum
                )));
            }
            Some(Box::new(load_vectors(&vectors)?))
        }
        None => None,
    };
    Ok(SlotPredictor::Crf(Box::new(model), embeddings))
}

pub fn cmd_evaluate(cfg: &LoadedConfig, seed_override: Option<u64>, threads: usize) -> Result<()> {
    let schema = load_schema(cfg)?;
    let section = cfg
        .config
        .eval
        .as_ref()
        .ok_or_else(|| Error::Config("config lacks an [eval] section".into()))?;
    let test_path = cfg.need_input(&cfg.config.paths.test_corpus, "test_corpus")?;
    let test = read_corpus(&test_path, &schema)?;

    let slot = load_slot_predictor(cfg, &schema)?;
    let intents: Option<CnnIntentClassifier> = match &cfg.config.paths.intent_model {
        Some(p) => {
            let path = cfg.resolve(p);
            if path.exists() {
                Some(load_intents(&path, &schema)?)
            } else {
                return Err(Error::Data(format!(
                    "missing intent model '{}' — run train-intents first \
                     (or drop paths.intent_model to evaluate slots only)",
                    path.display()
                )));
            }
        }
        None => None,
    };

    let seed = seed_override.unwrap_or(section.seed);
    let plan = repeated_kfold(test.len(), section.k, section.repetitions, seed)?;
    let predict = |utt: &Utterance| -> Prediction {
        let (tags, _) = slot.tags(&utt.tokens).expect("prediction succeeds");
        let intents = intents.as_ref().map(|m| {
            m.predict(&utt.tokens).expect("intent prediction succeeds")
        });
        Prediction { tags, intents }
    };
    let report = evaluate(predict, &test, &plan, mode_of(threads))?;

    let report_path = cfg.need(&cfg.config.paths.report, "report")?;
    write_atomic(&report_path, &format!("{}\n", canonical_json(&report)))?;
    let seeds: BTreeMap<&str, u64> = [("eval", seed)].into();
    write_manifest(
        &report_path,
        "evaluate",
        cfg,
        &[("test_corpus", &test_path)],
        &seeds,
        threads,
    )?;
    print!("{}", report.render_table());
    println!("evaluate: report -> {}", report_path.display());
    Ok(())
}

pub fn cmd_stats(cfg: &LoadedConfig, corpus_override: Option<PathBuf>, json: bool) -> Result<()> {
    let schema = load_schema(cfg)?;
    let corpus_path = match corpus_override {
        Some(p) => p,
        None => cfg.need_input(&cfg.config.paths.test_corpus, "test_corpus")?,
    };
    let corpus = read_corpus(&corpus_path, &schema)?;
    let reference = match &cfg.config.paths.train_corpus {
        Some(p) => {
            let path = cfg.resolve(p);
            if path.exists() {
                Some(read_corpus(&path, &schema)?)
            } else {
                None
            }
        }
        None => None,
    };
    let reference_vocab = reference.as_ref().map(vocab_of);
    let stats = corpus_stats(&corpus, reference_vocab.as_ref(), reference.as_ref());

    if json {
        println!("{}", canonical_json(&stats));
        return Ok(());
    }
    println!("corpus: {}", corpus_path.display());
    println!("  utterances: {}", stats.utterances);
    println!("  tokens: {} ({} unique)", stats.token_count, stats.vocab_size);
    if let (Some(oov), Some(overlap)) = (stats.oov_count, stats.overlap) {
        println!("  OOV vs reference: {oov} ({:.1}% overlap)", overlap * 100.0);
    }
    for m in &stats.mention_stats {
        println!(
            "  {}: {} mentions, median length {} [{} - {}]",
            m.kind, m.count, m.median, m.min, m.max
        );
    }
    if let Some(ppl) = stats.bigram_perplexity {
        println!("  bigram perplexity vs reference: {ppl:.1}");
    }
    Ok(())
}

pub fn cmd_predict(cfg: &LoadedConfig, input: Option<PathBuf>) -> Result<()> {
    let schema = load_schema(cfg)?;
    let slot = load_slot_predictor(cfg, &schema)?;
    let intents: Option<CnnIntentClassifier> = match &cfg.config.paths.intent_model {
        Some(p) => {
            let path = cfg.resolve(p);
            path.exists().then(|| load_intents(&path, &schema)).transpose()?
        }
        None => None,
    };

    let lines: Vec<String> = match input {
        Some(path) => std::fs::read_to_string(&path)
            .map_err(|e| Error::io(&path, e))?
            .lines()
            .map(|l| l.to_string())
            .collect(),
        None => {
            let stdin = std::io::stdin();
            stdin.lock().lines().collect::<std::io::Result<_>>().map_err(|e| Error::Io {
                path: "<stdin>".into(),
                source: e,
            })?
        }
    };

    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let tokens = tokenize(line);
        let (tags, spans) = slot.tags(&tokens)?;
        let mut record = serde_json::json!({
            "id": format!("q{:05}", i + 1),
            "tokens": tokens,
            "slot_tags": tags,
            "spans": spans,
        });
        if let Some(model) = &intents {
            record["intents"] = serde_json::to_value(model.predict(&tokens)?)
                .expect("intents serialize");
        }
        println!("{}", canonical_json(&record));
    }
    Ok(())
}
