//! Template pack parsing, validation and train/dev splitting.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{canonical_json, tokenize, LabelSchema};
use crate::error::{Error, Result};

use super::gen::modifier_kinds;
use super::{placeholders, TemplatePack, LAB_PLACEHOLDER};

/// Parse and validate a template pack file (JSON).
pub fn parse_pack(path: impl AsRef<Path>, schema: &LabelSchema) -> Result<TemplatePack> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pack_str(&text, schema, &path.display().to_string())
}

/// Parse a pack from JSON text; `source` names the origin in errors.
pub fn parse_pack_str(text: &str, schema: &LabelSchema, source: &str) -> Result<TemplatePack> {
    let pack: TemplatePack = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: source.to_string(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    validate_pack(&pack, schema)?;
    Ok(pack)
}

/// Write a pack as canonical JSON (sorted keys).
pub fn write_pack(pack: &TemplatePack, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = canonical_json(pack);
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// The bundled demonstration pack: 24 French cores, 8 modifiers and 64
/// lab-test mentions.
pub fn sample_pack() -> TemplatePack {
    static PACK_JSON: &str = include_str!("../../data/sample_pack.json");
    parse_pack_str(PACK_JSON, &LabelSchema::default(), "sample_pack.json")
        .expect("bundled pack is valid")
}

fn validate_pack(pack: &TemplatePack, schema: &LabelSchema) -> Result<()> {
    let mut ids = std::collections::HashSet::new();
    let core_axes: Vec<&str> = schema
        .intent_axes
        .iter()
        .map(|a| a.name.as_str())
        .filter(|n| *n != "time_constraint")
        .collect();

    for core in &pack.cores {
        if !ids.insert(format!("core:{}", core.id)) {
            return Err(Error::Template { id: core.id.clone(), msg: "duplicate id".into() });
        }
        let slots = placeholders(&core.text)
            .map_err(|e| Error::Template { id: core.id.clone(), msg: e.to_string() })?;
        if slots.len() != 1 || slots[0].name != LAB_PLACEHOLDER {
            return Err(Error::Template {
                id: core.id.clone(),
                msg: format!("core text must contain exactly one <{LAB_PLACEHOLDER}> placeholder"),
            });
        }
        for axis in &core_axes {
            let value = core.intents.get(*axis).ok_or_else(|| Error::Template {
                id: core.id.clone(),
                msg: format!("missing intent for axis '{axis}'"),
            })?;
            let known = schema.axis(axis).expect("axis exists");
            if !known.categories.contains(value) {
                return Err(Error::Template {
                    id: core.id.clone(),
                    msg: format!("unknown intent category '{value}' for axis '{axis}'"),
                });
            }
        }
        if core.intents.contains_key("time_constraint") {
            return Err(Error::Template {
                id: core.id.clone(),
                msg: "time_constraint is supplied by modifiers, not cores".into(),
            });
        }
        if let Some(extra) = core.intents.keys().find(|k| !core_axes.contains(&k.as_str())) {
            return Err(Error::Template {
                id: core.id.clone(),
                msg: format!("unknown intent axis '{extra}'"),
            });
        }
    }

    let tc_axis = schema
        .axis("time_constraint")
        .ok_or_else(|| Error::Schema("schema lacks a time_constraint axis".into()))?;
    for modifier in &pack.modifiers {
        if !ids.insert(format!("mod:{}", modifier.id)) {
            return Err(Error::Template { id: modifier.id.clone(), msg: "duplicate id".into() });
        }
        let slots = placeholders(&modifier.text)
            .map_err(|e| Error::Template { id: modifier.id.clone(), msg: e.to_string() })?;
        if slots.len() != 1 {
            return Err(Error::Template {
                id: modifier.id.clone(),
                msg: "modifier text must contain exactly one temporal placeholder".into(),
            });
        }
        modifier_kinds(&slots[0].name)
            .map_err(|e| Error::Template { id: modifier.id.clone(), msg: e.to_string() })?;
        if !tc_axis.categories.contains(&modifier.time_constraint) {
            return Err(Error::Template {
                id: modifier.id.clone(),
                msg: format!("unknown time_constraint '{}'", modifier.time_constraint),
            });
        }
    }

    let mut mentions = std::collections::HashSet::new();
    for mention in &pack.lab_lexicon {
        if tokenize(mention).is_empty() {
            return Err(Error::Data(format!("mention '{mention}' tokenizes to zero tokens")));
        }
        if !mentions.insert(mention.as_str()) {
            return Err(Error::Data(format!("duplicate mention '{mention}'")));
        }
    }
    Ok(())
}

/// Partition cores and mentions disjointly into (train, dev) halves.
/// Modifiers are shared by both halves. Deterministic given `seed`.
pub fn split_pack(
    pack: &TemplatePack,
    template_ratio: f64,
    mention_ratio: f64,
    seed: u64,
) -> Result<(TemplatePack, TemplatePack)> {
    for (name, ratio) in [("template_ratio", template_ratio), ("mention_ratio", mention_ratio)] {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::Config(format!("{name} {ratio} outside (0, 1)")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    fn split_indices(n: usize, ratio: f64, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
        if n < 2 {
            return Err(Error::Config(format!(
                "cannot split {n} item(s) into two non-empty halves"
            )));
        }
        let take = ((n as f64 * ratio).round() as usize).clamp(1, n - 1);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        idx.truncate(take);
        Ok(idx)
    }

    let core_idx = split_indices(pack.cores.len(), template_ratio, &mut rng)?;
    let mention_idx = split_indices(pack.lab_lexicon.len(), mention_ratio, &mut rng)?;
    let core_set: std::collections::HashSet<usize> = core_idx.into_iter().collect();
    let mention_set: std::collections::HashSet<usize> = mention_idx.into_iter().collect();

    let half = |keep: &dyn Fn(usize, bool) -> bool| TemplatePack {
        cores: pack
            .cores
            .iter()
            .enumerate()
            .filter(|(i, _)| keep(*i, true))
            .map(|(_, c)| c.clone())
            .collect(),
        modifiers: pack.modifiers.clone(),
        lab_lexicon: pack
            .lab_lexicon
            .iter()
            .enumerate()
            .filter(|(i, _)| keep(*i, false))
            .map(|(_, m)| m.clone())
            .collect(),
    };
    let train = half(&|i, is_core| {
        if is_core {
            core_set.contains(&i)
        } else {
            mention_set.contains(&i)
        }
    });
    let dev = half(&|i, is_core| {
        if is_core {
            !core_set.contains(&i)
        } else {
            !mention_set.contains(&i)
        }
    });
    Ok((train, dev))
}
