//! Neural model serialization: a JSON manifest (architecture, vocab,
//! schema checksum, declared parameter ordering) plus a flat little-endian
//! 64-bit float array in a `.params` sidecar.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{canonical_json, IntentAxis, LabelSchema};
use crate::embeddings::fnv1a64;
use crate::error::{Error, Result};

use super::intent::{CnnIntentClassifier, IntentConfig};
use super::store::ParamLayout;
use super::tagger::{BiLstmTagger, TaggerConfig};

#[derive(Debug, Serialize, Deserialize)]
struct TaggerManifest {
    kind: String,
    config: TaggerConfig,
    labels: Vec<String>,
    vocab: Vec<String>,
    schema_checksum: String,
    layout: ParamLayout,
}

#[derive(Debug, Serialize, Deserialize)]
struct IntentManifest {
    kind: String,
    config: IntentConfig,
    axes: Vec<IntentAxis>,
    vocab: Vec<String>,
    schema_checksum: String,
    layout: ParamLayout,
}

/// Checksum that ties a model file to the schema it was trained under.
pub fn schema_checksum(schema: &LabelSchema) -> String {
    format!("{:016x}", fnv1a64(canonical_json(schema).as_bytes()))
}

fn params_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".params");
    PathBuf::from(s)
}

fn write_params(path: &Path, data: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(data.len() * 8);
    for x in data {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_params(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected * 8 {
        return Err(Error::Data(format!(
            "{}: {} bytes, expected {} parameters",
            path.display(),
            bytes.len(),
            expected
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

/// Save a tagger: manifest at `path`, parameters at `<path>.params`.
pub fn save_tagger(model: &BiLstmTagger, schema: &LabelSchema, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let manifest = TaggerManifest {
        kind: "bilstm-tagger".into(),
        config: model.config.clone(),
        labels: model.labels.clone(),
        vocab: model.vocab.clone(),
        schema_checksum: schema_checksum(schema),
        layout: model.store.layout.clone(),
    };
    let mut text = serde_json::to_string(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    write_params(&params_path(path), &model.store.data)
}

/// Load a tagger, verifying the schema checksum and the declared layout.
pub fn load_tagger(path: impl AsRef<Path>, schema: &LabelSchema) -> Result<BiLstmTagger> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: TaggerManifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    if manifest.kind != "bilstm-tagger" {
        return Err(Error::Data(format!("'{}' is a {} model", path.display(), manifest.kind)));
    }
    if manifest.schema_checksum != schema_checksum(schema) {
        return Err(Error::Schema(format!(
            "model '{}' was trained under a different label schema",
            path.display()
        )));
    }
    let mut model =
        BiLstmTagger::new(manifest.config, manifest.labels, manifest.vocab, 0, None)?;
    if model.store.layout != manifest.layout {
        return Err(Error::Data(format!(
            "parameter layout of '{}' does not match this build",
            path.display()
        )));
    }
    model.store.data = read_params(&params_path(path), model.store.layout.total)?;
    Ok(model)
}

/// Save an intent classifier: manifest plus `.params` sidecar.
pub fn save_intents(
    model: &CnnIntentClassifier,
    schema: &LabelSchema,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let manifest = IntentManifest {
        kind: "cnn-intent".into(),
        config: model.config.clone(),
        axes: model.axes.clone(),
        vocab: model.vocab.clone(),
        schema_checksum: schema_checksum(schema),
        layout: model.store.layout.clone(),
    };
    let mut text = serde_json::to_string(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    write_params(&params_path(path), &model.store.data)
}

/// Load an intent classifier.
pub fn load_intents(path: impl AsRef<Path>, schema: &LabelSchema) -> Result<CnnIntentClassifier> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: IntentManifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    if manifest.kind != "cnn-intent" {
        return Err(Error::Data(format!("'{}' is a {} model", path.display(), manifest.kind)));
    }
    if manifest.schema_checksum != schema_checksum(schema) {
        return Err(Error::Schema(format!(
            "model '{}' was trained under a different label schema",
            path.display()
        )));
    }
    let mut model =
        CnnIntentClassifier::new(manifest.config, manifest.axes, manifest.vocab, 0, None)?;
    if model.store.layout != manifest.layout {
        return Err(Error::Data(format!(
            "parameter layout of '{}' does not match this build",
            path.display()
        )));
    }
    model.store.data = read_params(&params_path(path), model.store.layout.total)?;
    Ok(model)
}
