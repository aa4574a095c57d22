//! Project configuration file.
//!
//! One JSON file drives the whole pipeline; commands read the sections
//! they need and fail with a configuration error when a section or path
//! is missing. Every stochastic stage carries a mandatory explicit seed —
//! there are no wall-clock defaults anywhere.

use std::path::{Path, PathBuf};

use nlu_forge::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub pack: Option<PathBuf>,
    pub train_pack: Option<PathBuf>,
    pub dev_pack: Option<PathBuf>,
    pub train_corpus: Option<PathBuf>,
    pub dev_corpus: Option<PathBuf>,
    pub test_corpus: Option<PathBuf>,
    pub unlabeled: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    pub slot_model: Option<PathBuf>,
    pub intent_model: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    pub train_count: usize,
    pub dev_count: usize,
    pub seed: u64,
    #[serde(default)]
    pub split: Option<SplitConfig>,
    #[serde(default = "default_modifier_prob")]
    pub modifier_prob: f64,
}

fn default_modifier_prob() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub template_ratio: f64,
    pub mention_ratio: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PivotSection {
    pub n_languages: usize,
    pub seed: u64,
    #[serde(default = "default_source_lang")]
    pub source_lang: String,
    #[serde(default)]
    pub language_pool: Option<Vec<String>>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    /// Path to a JSON synonym table; present = offline mock backend.
    #[serde(default)]
    pub mock_table: Option<PathBuf>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_source_lang() -> String {
    "fr".into()
}

fn default_in_flight() -> usize {
    4
}

fn default_timeout() -> u64 {
    20
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSection {
    pub dim: usize,
    pub seed: u64,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_negatives")]
    pub negatives: usize,
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_min_count")]
    pub min_count: u64,
    #[serde(default)]
    pub subword: Option<SubwordSection>,
}

fn default_window() -> usize {
    5
}

fn default_negatives() -> usize {
    5
}

fn default_lr() -> f64 {
    0.025
}

fn default_min_count() -> u64 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubwordSection {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "default_n_min")]
    pub n_min: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_buckets")]
    pub bucket_count: usize,
}

fn default_true() -> bool {
    true
}

fn default_n_min() -> usize {
    3
}

fn default_n_max() -> usize {
    6
}

fn default_buckets() -> usize {
    1 << 21
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotModelSection {
    /// "crf" or "bilstm".
    pub kind: String,
    pub seed: u64,
    pub epochs: usize,
    #[serde(default = "default_slot_lr")]
    pub lr: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_l2")]
    pub l2: f64,
    #[serde(default)]
    pub patience: usize,
    // biLSTM-specific knobs
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default = "default_embed_dim")]
    pub embed_dim: usize,
    #[serde(default = "default_dropout")]
    pub dropout_embed: f64,
    #[serde(default = "default_dropout")]
    pub dropout_lstm: f64,
    /// biLSTM output layer: "softmax" or "crf".
    #[serde(default = "default_output")]
    pub output: String,
    #[serde(default)]
    pub use_embeddings: bool,
    #[serde(default)]
    pub freeze_embeddings: bool,
}

fn default_slot_lr() -> f64 {
    0.05
}

fn default_batch() -> usize {
    8
}

fn default_l2() -> f64 {
    1e-6
}

fn default_hidden() -> usize {
    64
}

fn default_layers() -> usize {
    1
}

fn default_embed_dim() -> usize {
    50
}

fn default_dropout() -> f64 {
    0.1
}

fn default_output() -> String {
    "softmax".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntentModelSection {
    pub seed: u64,
    pub epochs: usize,
    #[serde(default = "default_intent_lr")]
    pub lr: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub patience: usize,
    #[serde(default = "default_embed_dim")]
    pub embed_dim: usize,
    #[serde(default = "default_kernel")]
    pub kernel: usize,
    #[serde(default = "default_filters")]
    pub filters: usize,
    #[serde(default = "default_true")]
    pub shared_encoder: bool,
    #[serde(default)]
    pub use_embeddings: bool,
    #[serde(default)]
    pub freeze_embeddings: bool,
}

fn default_intent_lr() -> f64 {
    8e-3
}

fn default_kernel() -> usize {
    3
}

fn default_filters() -> usize {
    64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub k: usize,
    pub repetitions: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    /// Optional schema file; the built-in default schema otherwise.
    #[serde(default)]
    pub schema: Option<PathBuf>,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub generation: Option<GenerationConfig>,
    #[serde(default)]
    pub pivot: Option<PivotSection>,
    #[serde(default)]
    pub embedding: Option<EmbeddingSection>,
    #[serde(default)]
    pub slot_model: Option<SlotModelSection>,
    #[serde(default)]
    pub intent_model: Option<IntentModelSection>,
    #[serde(default)]
    pub eval: Option<EvalSection>,
}

/// A loaded configuration plus the directory paths resolve against.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ProjectConfig,
    pub base_dir: PathBuf,
    /// Raw file bytes, hashed into run manifests.
    pub raw: String,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: ProjectConfig = serde_json::from_str(&raw).map_err(|e| {
            Error::Config(format!("{}: {e}", path.display()))
        })?;
        let base_dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or_else(|| Path::new("."))
            .to_path_buf();
        Ok(LoadedConfig { config, base_dir, raw })
    }

    /// Resolve a configured path against the config file's directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Fetch and resolve a required path.
    pub fn need(&self, path: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
        let p = path
            .as_ref()
            .ok_or_else(|| Error::Config(format!("paths.{name} is not configured")))?;
        Ok(self.resolve(p))
    }

    /// A required input file: configured and existing.
    pub fn need_input(&self, path: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
        let p = self.need(path, name)?;
        if !p.exists() {
            return Err(Error::Data(format!(
                "missing {name} file '{}' — run the producing stage first",
                p.display()
            )));
        }
        Ok(p)
    }
}
