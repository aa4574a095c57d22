//! Template-based corpus generation.
//!
//! A [`TemplatePack`] is the generative grammar: core question templates
//! with a `<lab>` slot, temporal modifier templates with one
//! `<date|duration|range|event>` slot, and a lexicon of lab-test mentions.
//! Generation randomly combines a core, an optional modifier and a mention
//! into a fully annotated utterance.

mod dates;
mod gen;
mod pack;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use dates::{synth_date, DateExpr, DateKind};
pub use gen::{generate, generate_with, instantiate, GenOptions};
pub use pack::{parse_pack, parse_pack_str, sample_pack, split_pack, write_pack};

use crate::error::{Error, Result};

/// Name of the single placeholder allowed in core templates.
pub const LAB_PLACEHOLDER: &str = "lab";

/// A core question template. `text` contains exactly one `<lab>`
/// placeholder; `intents` covers every axis except `time_constraint`,
/// which is supplied by the modifier (or defaults to "none").
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreTemplate {
    pub id: String,
    pub text: String,
    pub intents: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<TemplateOrigin>,
}

/// A temporal modifier template. `text` contains exactly one temporal
/// placeholder listing the date kinds it accepts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModifierTemplate {
    pub id: String,
    pub text: String,
    pub time_constraint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<TemplateOrigin>,
}

/// Provenance of a paraphrased template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateOrigin {
    pub source_id: String,
    pub pivot_lang: String,
}

/// The generative grammar: cores, modifiers and the mention lexicon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplatePack {
    pub cores: Vec<CoreTemplate>,
    pub modifiers: Vec<ModifierTemplate>,
    pub lab_lexicon: Vec<String>,
}

impl TemplatePack {
    /// (cores, modifiers, mentions) counts.
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.cores.len(), self.modifiers.len(), self.lab_lexicon.len())
    }
}

/// A `<...>` placeholder found in template text: byte range and inner name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placeholder {
    pub range: std::ops::Range<usize>,
    pub name: String,
}

/// Extract `<...>` placeholders. Rejects nested or unterminated brackets.
pub fn placeholders(text: &str) -> Result<Vec<Placeholder>> {
    let mut found = Vec::new();
    let mut open: Option<usize> = None;
    for (i, c) in text.char_indices() {
        match c {
            '<' => {
                if open.is_some() {
                    return Err(Error::Data(format!("nested '<' in template text '{text}'")));
                }
                open = Some(i);
            }
            '>' => {
                let start = open.take().ok_or_else(|| {
                    Error::Data(format!("unmatched '>' in template text '{text}'"))
                })?;
                found.push(Placeholder {
                    range: start..i + 1,
                    name: text[start + 1..i].to_string(),
                });
            }
            _ => {}
        }
    }
    if open.is_some() {
        return Err(Error::Data(format!("unterminated '<' in template text '{text}'")));
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placeholders_are_extracted_in_order() {
        let found = placeholders("a <lab> b <date|event>").unwrap();
        assert_eq!(found.len(), 2);
        assert_eq!(found[0].name, "lab");
        assert_eq!(found[1].name, "date|event");
        assert_eq!(&"a <lab> b <date|event>"[found[0].range.clone()], "<lab>");
    }

    #[test]
    fn nested_brackets_rejected() {
        assert!(placeholders("a <x<y>>").is_err());
        assert!(placeholders("a <lab").is_err());
        assert!(placeholders("a lab>").is_err());
    }
}
