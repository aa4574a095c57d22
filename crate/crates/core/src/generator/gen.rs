//! Template instantiation and deduplicated corpus generation.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{tokenize, Corpus, LabelSchema, Provenance, Utterance};
use crate::error::{Error, Result};

use super::dates::{synth_date, DateKind};
use super::{placeholders, CoreTemplate, ModifierTemplate, TemplatePack};

/// Knobs for [`generate_with`].
#[derive(Debug, Clone)]
pub struct GenOptions {
    /// Probability of attaching a temporal modifier to each utterance.
    pub modifier_prob: f64,
    /// Prefix for generated utterance ids.
    pub id_prefix: String,
    /// Retry budget per requested utterance when deduplication collides.
    pub retries_per_item: usize,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions { modifier_prob: 0.5, id_prefix: "u".into(), retries_per_item: 60 }
    }
}

fn kinds_for_alt(alt: &str) -> Option<DateKind> {
    match alt {
        "date" => Some(DateKind::Absolute),
        "duration" => Some(DateKind::Relative),
        "range" => Some(DateKind::Range),
        "event" => Some(DateKind::Event),
        _ => None,
    }
}

/// Date kinds a modifier placeholder accepts, e.g. `date|duration|event`.
pub(super) fn modifier_kinds(placeholder_name: &str) -> Result<Vec<DateKind>> {
    let kinds: Option<Vec<DateKind>> = placeholder_name.split('|').map(kinds_for_alt).collect();
    kinds
        .filter(|k| !k.is_empty())
        .ok_or_else(|| Error::Data(format!("unknown temporal placeholder '<{placeholder_name}>'")))
}

fn tag_run(tags: &mut Vec<String>, len: usize, kind: &str) {
    for i in 0..len {
        tags.push(if i == 0 { format!("B-{kind}") } else { format!("I-{kind}") });
    }
}

/// Instantiate one utterance from a core template, an optional temporal
/// modifier and a lexicon mention.
///
/// Tokens are built part by part (core prefix, mention, core suffix,
/// modifier phrase), so the slot tags align with the inserted material by
/// construction: the mention tokens form the LAB span and every modifier
/// token, head words included, forms the DATE span.
pub fn instantiate(
    schema: &LabelSchema,
    core: &CoreTemplate,
    modifier: Option<&ModifierTemplate>,
    mention: &str,
    rng: &mut impl Rng,
    id: impl Into<String>,
) -> Result<Utterance> {
    let slots = placeholders(&core.text)?;
    let lab = slots
        .iter()
        .find(|p| p.name == super::LAB_PLACEHOLDER)
        .ok_or_else(|| Error::Template {
            id: core.id.clone(),
            msg: "missing <lab> placeholder".into(),
        })?;

    let mention_tokens = tokenize(mention);
    if mention_tokens.is_empty() {
        return Err(Error::Data(format!(
            "mention '{mention}' tokenizes to zero tokens"
        )));
    }

    let prefix = tokenize(&core.text[..lab.range.start]);
    let suffix = tokenize(&core.text[lab.range.end..]);

    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    tokens.extend(prefix.iter().cloned());
    tags.extend(std::iter::repeat_n("O".to_string(), prefix.len()));
    tokens.extend(mention_tokens.iter().cloned());
    tag_run(&mut tags, mention_tokens.len(), "LAB");
    tokens.extend(suffix.iter().cloned());
    tags.extend(std::iter::repeat_n("O".to_string(), suffix.len()));

    let mut modifier_id = None;
    if let Some(modifier) = modifier {
        let slots = placeholders(&modifier.text)?;
        let slot = slots.first().ok_or_else(|| Error::Template {
            id: modifier.id.clone(),
            msg: "missing temporal placeholder".into(),
        })?;
        let kinds = modifier_kinds(&slot.name)?;
        let kind = kinds[rng.gen_range(0..kinds.len())];
        let date = synth_date(kind, rng);
        let filled = format!(
            "{}{}{}",
            &modifier.text[..slot.range.start],
            date.tokens.join(" "),
            &modifier.text[slot.range.end..]
        );
        let modifier_tokens = tokenize(&filled);
        tokens.extend(modifier_tokens.iter().cloned());
        tag_run(&mut tags, modifier_tokens.len(), "DATE");
        modifier_id = Some(modifier.id.clone());
    }

    let mut intents = core.intents.clone();
    intents.insert(
        "time_constraint".to_string(),
        modifier
            .map(|m| m.time_constraint.clone())
            .unwrap_or_else(|| "none".to_string()),
    );

    let utt = Utterance {
        id: id.into(),
        tokens,
        slot_tags: tags,
        intents,
        provenance: Provenance {
            template_id: core.id.clone(),
            modifier_id,
            mention_id: Some(mention.to_string()),
            paraphrase_lang: core.origin.as_ref().map(|o| o.pivot_lang.clone()),
        },
        lemmas: None,
        pos: None,
    };
    utt.validate(schema)?;
    Ok(utt)
}

/// Generate a deduplicated corpus of exactly `count` utterances with the
/// default options. Pure function of `(pack, count, seed)`.
pub fn generate(
    schema: &LabelSchema,
    pack: &TemplatePack,
    count: usize,
    seed: u64,
) -> Result<Corpus> {
    generate_with(schema, pack, count, seed, &GenOptions::default())
}

/// Generate with explicit options. Utterances are deduplicated on their
/// token sequence; collisions are resampled within a bounded retry budget.
pub fn generate_with(
    schema: &LabelSchema,
    pack: &TemplatePack,
    count: usize,
    seed: u64,
    opts: &GenOptions,
) -> Result<Corpus> {
    if count == 0 {
        return Err(Error::Config("count must be at least 1".into()));
    }
    if pack.cores.is_empty() || pack.lab_lexicon.is_empty() {
        return Err(Error::Config("template pack has no cores or no mentions".into()));
    }
    if !(0.0..=1.0).contains(&opts.modifier_prob) {
        return Err(Error::Config(format!(
            "modifier_prob {} outside [0, 1]",
            opts.modifier_prob
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashSet<Vec<String>> = HashSet::with_capacity(count * 2);
    let mut utterances = Vec::with_capacity(count);
    let max_attempts = count.saturating_mul(opts.retries_per_item).saturating_add(1000);
    let mut attempts = 0usize;

    while utterances.len() < count {
        if attempts >= max_attempts {
            return Err(Error::Exhausted {
                attempts,
                achieved: utterances.len(),
                requested: count,
            });
        }
        attempts += 1;

        let core = &pack.cores[rng.gen_range(0..pack.cores.len())];
        let modifier = if !pack.modifiers.is_empty() && rng.gen_bool(opts.modifier_prob) {
            Some(&pack.modifiers[rng.gen_range(0..pack.modifiers.len())])
        } else {
            None
        };
        let mention = &pack.lab_lexicon[rng.gen_range(0..pack.lab_lexicon.len())];
        let id = format!("{}{:06}", opts.id_prefix, utterances.len() + 1);
        let utt = instantiate(schema, core, modifier, mention, &mut rng, id)?;
        if seen.insert(utt.tokens.clone()) {
            utterances.push(utt);
        }
    }

    Corpus::new(schema.clone(), utterances)
}
