//! Full-pipeline test of the `nlu-forge` binary: generate → paraphrase →
//! embed → train → evaluate → stats → predict, plus exit-code contracts
//! and byte-identical re-runs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nlu_forge::data::{read_corpus, LabelSchema};
use nlu_forge::generator::{sample_pack, write_pack};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_nlu-forge")
}

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_config(dir: &Path) -> PathBuf {
    let config = serde_json::json!({
        "paths": {
            "pack": "pack.json",
            "train_corpus": "train.jsonl",
            "dev_corpus": "dev.jsonl",
            "test_corpus": "dev.jsonl",
            "unlabeled": "unlabeled.txt",
            "vectors": "vectors.txt",
            "slot_model": "slot_model.json",
            "intent_model": "intent_model.json",
            "report": "report.json"
        },
        "generation": {
            "train_count": 200,
            "dev_count": 60,
            "seed": 11,
            "modifier_prob": 0.5
        },
        "pivot": {
            "n_languages": 4,
            "seed": 5,
            "mock_table": "mock_table.json"
        },
        "embedding": {
            "dim": 16,
            "seed": 3,
            "epochs": 2,
            "subword": { "bucket_count": 4096 }
        },
        "slot_model": {
            "kind": "crf",
            "seed": 1,
            "epochs": 6,
            "use_embeddings": true
        },
        "intent_model": {
            "seed": 2,
            "epochs": 10,
            "filters": 24,
            "embed_dim": 16
        },
        "eval": { "k": 5, "repetitions": 2, "seed": 7 }
    });
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    std::fs::write(
        dir.join("mock_table.json"),
        r#"{"quel est": "quel est donc", "la valeur": "le niveau"}"#,
    )
    .unwrap();
    write_pack(&sample_pack(), dir.join("pack.json")).unwrap();
    path
}

#[test]
fn full_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    write_config(dir);

    // evaluate before training must fail with exit code 2 and name the
    // missing model
    let out = run(&["evaluate", "--config", "config.json"], dir);
    assert_eq!(out.status.code(), Some(2), "premature evaluate should be a data error");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error[data]"), "{stderr}");
    assert!(stderr.contains("missing"), "{stderr}");

    assert_ok(&run(&["generate", "--config", "config.json"], dir), "generate");
    let train_bytes = std::fs::read(dir.join("train.jsonl")).unwrap();

    // idempotence: byte-identical outputs on re-run
    assert_ok(&run(&["generate", "--config", "config.json"], dir), "generate rerun");
    assert_eq!(train_bytes, std::fs::read(dir.join("train.jsonl")).unwrap());
    assert!(dir.join("train.jsonl.manifest.json").exists());

    // paraphrase the pack through the mock backend, then regenerate from
    // the paraphrased packs
    assert_ok(&run(&["paraphrase", "--config", "config.json"], dir), "paraphrase");
    assert!(dir.join("pack-para.json").exists());
    assert_ok(
        &run(
            &[
                "generate",
                "--config",
                "config.json",
                "--train-pack",
                "pack-para.json",
                "--dev-pack",
                "pack-para.json",
            ],
            dir,
        ),
        "generate from paraphrased pack",
    );

    // unlabeled text for the embedding stage, one sentence per line
    let schema = LabelSchema::default();
    let corpus = read_corpus(dir.join("train.jsonl"), &schema).unwrap();
    let lines: Vec<String> = corpus.utterances.iter().map(|u| u.tokens.join(" ")).collect();
    std::fs::write(dir.join("unlabeled.txt"), lines.join("\n")).unwrap();

    assert_ok(&run(&["embed", "--config", "config.json"], dir), "embed");
    assert!(dir.join("vectors.txt").exists());
    assert!(dir.join("vectors.txt.subword").exists());

    assert_ok(&run(&["train-slots", "--config", "config.json"], dir), "train-slots");
    assert_ok(&run(&["train-intents", "--config", "config.json"], dir), "train-intents");

    let out = run(&["evaluate", "--config", "config.json"], dir);
    assert_ok(&out, "evaluate");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("slot spans"), "{stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    let span_f1 = report["slot_span"]["weighted_f1"].as_f64().unwrap();
    assert!(span_f1 > 0.8, "in-distribution span F1 {span_f1}");
    assert_eq!(report["fold_count"].as_u64(), Some(10));

    let out = run(&["stats", "--config", "config.json", "--json"], dir);
    assert_ok(&out, "stats");
    let stats: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stdout).trim()).unwrap();
    assert!(stats["overlap"].as_f64().unwrap() > 0.0);
    assert!(stats["bigram_perplexity"].as_f64().unwrap() >= 1.0);

    // predict from a file of raw utterances
    std::fs::write(
        dir.join("questions.txt"),
        "quel est le résultat du dernier dosage de créatinine\n\
         la glycémie du 27/03/2015 était-elle normale\n",
    )
    .unwrap();
    let out = run(
        &["predict", "--config", "config.json", "--input", "questions.txt"],
        dir,
    );
    assert_ok(&out, "predict");
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    for line in lines {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(record["tokens"].as_array().unwrap().len() > 3);
        assert_eq!(
            record["slot_tags"].as_array().unwrap().len(),
            record["tokens"].as_array().unwrap().len()
        );
        assert!(record["intents"].is_object());
    }
}

#[test]
fn bilstm_slot_model_with_split_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let config = serde_json::json!({
        "paths": {
            "pack": "pack.json",
            "train_pack": "train_pack.json",
            "dev_pack": "dev_pack.json",
            "train_corpus": "train.jsonl",
            "dev_corpus": "dev.jsonl",
            "test_corpus": "dev.jsonl",
            "slot_model": "tagger.json",
            "report": "report.json"
        },
        "generation": {
            "train_count": 120,
            "dev_count": 40,
            "seed": 11,
            "split": { "template_ratio": 0.75, "mention_ratio": 0.75, "seed": 4 }
        },
        "slot_model": {
            "kind": "bilstm",
            "seed": 1,
            "epochs": 3,
            "lr": 0.002,
            "hidden": 16,
            "embed_dim": 16,
            "dropout_embed": 0.0,
            "dropout_lstm": 0.0,
            "output": "crf"
        },
        "eval": { "k": 4, "repetitions": 2, "seed": 9 }
    });
    std::fs::write(dir.join("config.json"), serde_json::to_string(&config).unwrap()).unwrap();
    write_pack(&sample_pack(), dir.join("pack.json")).unwrap();

    assert_ok(&run(&["generate", "--config", "config.json"], dir), "generate with split");
    // the split packs land on disk and are disjoint
    let schema = LabelSchema::default();
    let train_pack =
        nlu_forge::generator::parse_pack(dir.join("train_pack.json"), &schema).unwrap();
    let dev_pack = nlu_forge::generator::parse_pack(dir.join("dev_pack.json"), &schema).unwrap();
    assert!(train_pack
        .lab_lexicon
        .iter()
        .all(|m| !dev_pack.lab_lexicon.contains(m)));

    // --seed overrides the section seed: different corpus bytes
    let base = std::fs::read(dir.join("train.jsonl")).unwrap();
    assert_ok(
        &run(&["generate", "--config", "config.json", "--seed", "99"], dir),
        "generate with seed override",
    );
    assert_ne!(base, std::fs::read(dir.join("train.jsonl")).unwrap());
    assert_ok(&run(&["generate", "--config", "config.json"], dir), "restore");

    assert_ok(&run(&["train-slots", "--config", "config.json"], dir), "train bilstm");
    assert!(dir.join("tagger.json.params").exists());
    // evaluate sniffs the model kind from the manifest; slots only
    let out = run(&["evaluate", "--config", "config.json", "--threads", "2"], dir);
    assert_ok(&out, "evaluate tagger");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("slot spans"), "{stdout}");
    assert!(!stdout.contains("intent axes"), "{stdout}");
}

#[test]
fn usage_errors_exit_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["generate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error[config]"), "{stderr}");

    // config without the needed section
    std::fs::write(dir.path().join("c.json"), "{}").unwrap();
    let out = run(&["generate", "--config", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_corpus_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    write_config(dir);
    std::fs::write(dir.join("train.jsonl"), "{not json}\n").unwrap();
    std::fs::write(dir.join("dev.jsonl"), "").unwrap();
    let out = run(&["train-slots", "--config", "config.json"], dir);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error[data]"), "{stderr}");
    assert!(stderr.contains("train.jsonl:1"), "{stderr}");
}
