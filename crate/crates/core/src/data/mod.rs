//! Corpus data model: label schema, utterances, spans and file formats.
//!
//! All types are immutable after construction and safe to share across
//! threads. The primary on-disk format is JSON-lines with one utterance per
//! line (intent labels and provenance are per-utterance, not per-token);
//! CoNLL export is provided for interoperability with taggers.

mod bio;
mod io;
mod tokenize;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bio::{spans_from_bio, tags_from_spans};
pub use io::{
    corpus_from_jsonl, corpus_to_jsonl, parse_conll, read_corpus, to_conll, write_corpus,
    ConllSentence,
};
pub use tokenize::tokenize;

/// Axis names of the four-way intent classification, in report order.
pub const INTENT_AXES: [&str; 4] = ["result_type", "interpretation", "time", "time_constraint"];

/// Fixed category counts per axis. Schema files may rename categories but
/// never change these counts unless `allow_custom_axes` is set.
pub const AXIS_CARDINALITIES: [(&str, usize); 4] = [
    ("result_type", 5),
    ("interpretation", 5),
    ("time", 3),
    ("time_constraint", 4),
];

/// One intent axis: a name plus its ordered category inventory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentAxis {
    pub name: String,
    pub categories: Vec<String>,
}

/// Label schema shared by every module: BIO slot labels plus the four
/// intent axes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSchema {
    pub slot_labels: Vec<String>,
    pub intent_axes: Vec<IntentAxis>,
    /// Permits non-standard axis names/counts when loading a schema file.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_custom_axes: bool,
}

impl Default for LabelSchema {
    fn default() -> Self {
        LabelSchema {
            slot_labels: ["O", "B-LAB", "I-LAB", "B-DATE", "I-DATE"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            intent_axes: vec![
                // "count" and "reference" round out the five result types;
                // schema files may rename them.
                IntentAxis {
                    name: "result_type".into(),
                    categories: str_vec(&["value", "evolution", "date", "count", "reference"]),
                },
                IntentAxis {
                    name: "interpretation".into(),
                    categories: str_vec(&["normality", "value", "low", "high", "presence"]),
                },
                IntentAxis {
                    name: "time".into(),
                    categories: str_vec(&["first", "last", "all"]),
                },
                IntentAxis {
                    name: "time_constraint".into(),
                    categories: str_vec(&["none", "range", "date", "number"]),
                },
            ],
            allow_custom_axes: false,
        }
    }
}

fn str_vec(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl LabelSchema {
    /// Load a schema from a JSON file and validate it.
    pub fn from_json_file(path: impl AsRef<std::path::Path>) -> Result<LabelSchema> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let schema: LabelSchema = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        schema.validate()?;
        Ok(schema)
    }

    /// Check the structural invariants: exactly one "O", matched B-/I- pairs,
    /// and the fixed axis inventory unless custom axes were allowed.
    pub fn validate(&self) -> Result<()> {
        let mut b_kinds = HashSet::new();
        let mut i_kinds = HashSet::new();
        let mut o_count = 0usize;
        for label in &self.slot_labels {
            if label == "O" {
                o_count += 1;
            } else if let Some(kind) = label.strip_prefix("B-") {
                b_kinds.insert(kind.to_string());
            } else if let Some(kind) = label.strip_prefix("I-") {
                i_kinds.insert(kind.to_string());
            } else {
                return Err(Error::Schema(format!("unrecognized slot label '{label}'")));
            }
        }
        if o_count != 1 {
            return Err(Error::Schema(format!(
                "slot_labels must contain exactly one 'O' (found {o_count})"
            )));
        }
        if b_kinds != i_kinds {
            return Err(Error::Schema(
                "slot_labels must pair every B-X with an I-X".into(),
            ));
        }
        let mut seen = HashSet::new();
        for label in &self.slot_labels {
            if !seen.insert(label.clone()) {
                return Err(Error::Schema(format!("duplicate slot label '{label}'")));
            }
        }
        for axis in &self.intent_axes {
            let mut cats = HashSet::new();
            for c in &axis.categories {
                if !cats.insert(c) {
                    return Err(Error::Schema(format!(
                        "axis '{}' has duplicate category '{c}'",
                        axis.name
                    )));
                }
            }
        }
        if !self.allow_custom_axes {
            if self.intent_axes.len() != AXIS_CARDINALITIES.len() {
                return Err(Error::Schema(format!(
                    "expected {} intent axes, found {}",
                    AXIS_CARDINALITIES.len(),
                    self.intent_axes.len()
                )));
            }
            for (axis, (name, count)) in self.intent_axes.iter().zip(AXIS_CARDINALITIES) {
                if axis.name != name {
                    return Err(Error::Schema(format!(
                        "expected axis '{name}', found '{}'",
                        axis.name
                    )));
                }
                if axis.categories.len() != count {
                    return Err(Error::Schema(format!(
                        "axis '{name}' must have {count} categories, found {}",
                        axis.categories.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn axis(&self, name: &str) -> Option<&IntentAxis> {
        self.intent_axes.iter().find(|a| a.name == name)
    }

    /// Index of a slot label, if it belongs to the schema.
    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.slot_labels.iter().position(|l| l == label)
    }

    /// Span kinds derived from the B- labels, in schema order.
    pub fn span_kinds(&self) -> Vec<String> {
        self.slot_labels
            .iter()
            .filter_map(|l| l.strip_prefix("B-").map(|k| k.to_string()))
            .collect()
    }
}

/// Where an utterance came from: the template, modifier and mention that
/// produced it, plus the pivot language when the template is a paraphrase.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub template_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modifier_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mention_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paraphrase_lang: Option<String>,
}

/// The atomic corpus record: tokens, BIO slot tags, one intent per axis and
/// provenance metadata. Lemma and POS columns are optional external inputs;
/// nothing in this crate computes them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: String,
    pub tokens: Vec<String>,
    pub slot_tags: Vec<String>,
    pub intents: BTreeMap<String, String>,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemmas: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Vec<String>>,
}

impl Utterance {
    /// Validate length, tag inventory, BIO well-formedness and intent
    /// coverage against `schema`.
    pub fn validate(&self, schema: &LabelSchema) -> Result<()> {
        if self.tokens.is_empty() {
            return Err(Error::Schema(format!(
                "utterance '{}' has no tokens",
                self.id
            )));
        }
        if self.slot_tags.len() != self.tokens.len() {
            return Err(Error::Schema(format!(
                "utterance '{}': {} tags for {} tokens",
                self.id,
                self.slot_tags.len(),
                self.tokens.len()
            )));
        }
        for col in [&self.lemmas, &self.pos].into_iter().flatten() {
            if col.len() != self.tokens.len() {
                return Err(Error::Schema(format!(
                    "utterance '{}': optional column length {} != {} tokens",
                    self.id,
                    col.len(),
                    self.tokens.len()
                )));
            }
        }
        let mut prev_kind: Option<&str> = None;
        for tag in &self.slot_tags {
            if schema.label_index(tag).is_none() {
                return Err(Error::Schema(format!(
                    "utterance '{}': tag '{tag}' not in schema",
                    self.id
                )));
            }
            let kind = if let Some(k) = tag.strip_prefix("I-") {
                match prev_kind {
                    Some(p) if p == k => {}
                    _ => {
                        return Err(Error::Schema(format!(
                            "utterance '{}': dangling '{tag}'",
                            self.id
                        )))
                    }
                }
                Some(k)
            } else {
                tag.strip_prefix("B-")
            };
            prev_kind = kind;
        }
        for axis in &schema.intent_axes {
            match self.intents.get(&axis.name) {
                Some(value) if axis.categories.contains(value) => {}
                Some(value) => {
                    return Err(Error::Schema(format!(
                        "utterance '{}': '{value}' not a category of axis '{}'",
                        self.id, axis.name
                    )))
                }
                None => {
                    return Err(Error::Schema(format!(
                        "utterance '{}': missing intent axis '{}'",
                        self.id, axis.name
                    )))
                }
            }
        }
        if self.intents.len() != schema.intent_axes.len() {
            let extra: Vec<_> = self
                .intents
                .keys()
                .filter(|k| schema.axis(k).is_none())
                .collect();
            return Err(Error::Schema(format!(
                "utterance '{}': unknown intent axes {extra:?}",
                self.id
            )));
        }
        Ok(())
    }

    /// Gold spans decoded from the BIO tags.
    pub fn spans(&self) -> Result<Vec<SlotSpan>> {
        spans_from_bio(&self.slot_tags)
    }
}

/// Token-index span of one slot (`end` exclusive).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotSpan {
    pub start: usize,
    pub end: usize,
    pub kind: String,
}

impl SlotSpan {
    pub fn new(start: usize, end: usize, kind: impl Into<String>) -> Self {
        SlotSpan { start, end, kind: kind.into() }
    }
}

/// A schema plus the utterances that conform to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub schema: LabelSchema,
    pub utterances: Vec<Utterance>,
}

impl Corpus {
    /// Build a corpus, validating ids and every utterance against `schema`.
    pub fn new(schema: LabelSchema, utterances: Vec<Utterance>) -> Result<Corpus> {
        let mut ids = HashSet::new();
        for utt in &utterances {
            utt.validate(&schema)?;
            if !ids.insert(utt.id.clone()) {
                return Err(Error::Data(format!("duplicate utterance id '{}'", utt.id)));
            }
        }
        Ok(Corpus { schema, utterances })
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }
}

/// Serialize any value to canonical JSON: sorted object keys, no trailing
/// whitespace. Two serializations of equal values are byte-identical.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    // serde_json's Value keeps object keys in a BTreeMap, so converting
    // through Value sorts them.
    let v = serde_json::to_value(value).expect("serializable value");
    serde_json::to_string(&v).expect("JSON value serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy_utterance(id: &str) -> Utterance {
        let mut intents = BTreeMap::new();
        intents.insert("result_type".into(), "value".into());
        intents.insert("interpretation".into(), "value".into());
        intents.insert("time".into(), "last".into());
        intents.insert("time_constraint".into(), "none".into());
        Utterance {
            id: id.into(),
            tokens: vec!["quel".into(), "taux".into(), "de".into(), "créatinine".into()],
            slot_tags: vec!["O".into(), "O".into(), "O".into(), "B-LAB".into()],
            intents,
            provenance: Provenance { template_id: "t0".into(), ..Default::default() },
            lemmas: None,
            pos: None,
        }
    }

    #[test]
    fn default_schema_is_valid() {
        let schema = LabelSchema::default();
        schema.validate().unwrap();
        assert_eq!(schema.span_kinds(), vec!["LAB", "DATE"]);
        assert_eq!(schema.axis("time").unwrap().categories.len(), 3);
    }

    #[test]
    fn schema_rejects_axis_count_change() {
        let mut schema = LabelSchema::default();
        schema.intent_axes[2].categories.push("never".into());
        assert!(schema.validate().is_err());
        schema.allow_custom_axes = true;
        schema.validate().unwrap();
    }

    #[test]
    fn schema_rejects_unpaired_bio() {
        let mut schema = LabelSchema::default();
        schema.slot_labels.retain(|l| l != "I-DATE");
        assert!(schema.validate().is_err());
    }

    #[test]
    fn utterance_validation_catches_dangling_inside() {
        let schema = LabelSchema::default();
        let mut utt = toy_utterance("u1");
        utt.validate(&schema).unwrap();
        utt.slot_tags[3] = "I-LAB".into();
        assert!(utt.validate(&schema).is_err());
    }

    #[test]
    fn utterance_validation_requires_all_axes() {
        let schema = LabelSchema::default();
        let mut utt = toy_utterance("u1");
        utt.intents.remove("time");
        assert!(utt.validate(&schema).is_err());
    }

    #[test]
    fn empty_utterances_are_rejected() {
        let schema = LabelSchema::default();
        let mut utt = toy_utterance("u1");
        utt.tokens.clear();
        utt.slot_tags.clear();
        assert!(utt.validate(&schema).is_err());
    }

    #[test]
    fn corpus_rejects_duplicate_ids() {
        let schema = LabelSchema::default();
        let utts = vec![toy_utterance("u1"), toy_utterance("u1")];
        assert!(Corpus::new(schema, utts).is_err());
    }

    #[test]
    fn schema_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("schema.json");
        let schema = LabelSchema::default();
        std::fs::write(&path, canonical_json(&schema)).unwrap();
        let loaded = LabelSchema::from_json_file(&path).unwrap();
        assert_eq!(schema, loaded);

        // count overrides are rejected unless explicitly configured
        let mut custom = schema.clone();
        custom.intent_axes[3].categories.push("window".into());
        std::fs::write(&path, canonical_json(&custom)).unwrap();
        assert!(LabelSchema::from_json_file(&path).is_err());
        custom.allow_custom_axes = true;
        std::fs::write(&path, canonical_json(&custom)).unwrap();
        assert!(LabelSchema::from_json_file(&path).is_ok());
    }

    #[test]
    fn canonical_json_sorts_keys() {
        let utt = toy_utterance("u1");
        let line = canonical_json(&utt);
        let id_pos = line.find("\"id\"").unwrap();
        let tokens_pos = line.find("\"tokens\"").unwrap();
        let intents_pos = line.find("\"intents\"").unwrap();
        assert!(id_pos < intents_pos && intents_pos < tokens_pos);
    }
}
