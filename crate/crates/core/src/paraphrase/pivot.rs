//! Pivot translation and pack-level paraphrasing.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::{ordered_map, ExecMode};
use crate::generator::{placeholders, TemplateOrigin, TemplatePack};

use super::sentinel::{protect_slots, sentinels_intact, unprotect};
use super::{PivotConfig, TranslationBackend};

/// Translate out to `pivot` and back to `source_lang`.
pub fn pivot_translate(
    text: &str,
    pivot: &str,
    source_lang: &str,
    backend: &dyn TranslationBackend,
) -> Result<String> {
    let wrap = |e: Error| match e {
        Error::Backend { msg, .. } => Error::Backend { lang: pivot.into(), msg },
        other => Error::Backend { lang: pivot.into(), msg: other.to_string() },
    };
    let out = backend.translate(text, source_lang, pivot).map_err(wrap)?;
    backend.translate(&out, pivot, source_lang).map_err(wrap)
}

/// Outcome counters of a paraphrasing run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParaphraseStats {
    pub attempted: usize,
    pub added_cores: usize,
    pub added_modifiers: usize,
    /// One entry per failed (template, pivot) pair.
    pub failures: Vec<String>,
    /// One entry per template for which every pivot failed.
    pub warnings: Vec<String>,
}

/// Normalized surface used for uniqueness: lowercase, single spaces.
fn normalize(text: &str) -> String {
    text.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

struct Task {
    template_idx: usize,
    lang: String,
    masked: String,
}

/// Paraphrase every core and modifier template through sampled pivot
/// languages, appending unique slot-preserving paraphrases to the pack.
/// Deterministic given (pack, config, deterministic backend); originals
/// are always retained.
pub fn paraphrase_pack(
    pack: &TemplatePack,
    config: &PivotConfig,
    backend: &dyn TranslationBackend,
    mode: ExecMode,
) -> Result<(TemplatePack, ParaphraseStats)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut stats = ParaphraseStats::default();
    let mut out = pack.clone();

    // sample pivots per template first, so translation can parallelize
    // without touching the RNG stream
    let sample = |rng: &mut ChaCha8Rng| -> Vec<String> {
        let mut pool: Vec<String> = config.language_pool.clone();
        pool.shuffle(rng);
        pool.truncate(config.n_languages);
        pool
    };

    enum Kind {
        Core,
        Modifier,
    }

    let run = |kind: Kind,
                   texts: Vec<(usize, String)>,
                   rng: &mut ChaCha8Rng,
                   stats: &mut ParaphraseStats,
                   out: &mut TemplatePack|
     -> Result<()> {
        let mut tasks = Vec::new();
        let mut maps = Vec::new();
        for (idx, text) in &texts {
            let (masked, map) = protect_slots(text)?;
            let langs = sample(rng);
            maps.push(map);
            for lang in langs {
                tasks.push(Task { template_idx: *idx, lang, masked: masked.clone() });
            }
        }

        // bounded concurrency: at most max_in_flight calls at a time
        let mut results = Vec::with_capacity(tasks.len());
        for chunk in tasks.chunks(config.max_in_flight) {
            results.extend(ordered_map(mode, chunk, |task| {
                pivot_translate(&task.masked, &task.lang, &config.source_lang, backend)
            }));
        }

        let mut seen: std::collections::HashSet<String> = match kind {
            Kind::Core => out.cores.iter().map(|c| normalize(&c.text)).collect(),
            Kind::Modifier => out.modifiers.iter().map(|m| normalize(&m.text)).collect(),
        };
        let mut failed_per_template: std::collections::HashMap<usize, usize> =
            std::collections::HashMap::new();
        let mut attempts_per_template: std::collections::HashMap<usize, usize> =
            std::collections::HashMap::new();

        for (task, result) in tasks.iter().zip(results) {
            stats.attempted += 1;
            *attempts_per_template.entry(task.template_idx).or_default() += 1;
            let map = &maps[task.template_idx];
            let source_id = match kind {
                Kind::Core => out.cores[task.template_idx].id.clone(),
                Kind::Modifier => out.modifiers[task.template_idx].id.clone(),
            };
            let candidate = match result {
                Ok(text) => text,
                Err(e) => {
                    stats.failures.push(format!("{source_id} via {}: {e}", task.lang));
                    *failed_per_template.entry(task.template_idx).or_default() += 1;
                    continue;
                }
            };
            if !sentinels_intact(&candidate, map) {
                stats.failures.push(format!(
                    "{source_id} via {}: paraphrase lost a slot sentinel",
                    task.lang
                ));
                *failed_per_template.entry(task.template_idx).or_default() += 1;
                continue;
            }
            let restored = unprotect(&candidate, map);
            // the paraphrase must carry exactly the source's placeholders
            let names_match = placeholders(&restored)
                .map(|ps| {
                    let got: Vec<&str> = ps.iter().map(|p| p.name.as_str()).collect();
                    let want: Vec<&str> = map
                        .iter()
                        .map(|(_, orig)| orig.trim_matches(['<', '>']))
                        .collect();
                    got == want
                })
                .unwrap_or(false);
            if !names_match {
                stats.failures.push(format!(
                    "{source_id} via {}: paraphrase corrupted a placeholder",
                    task.lang
                ));
                *failed_per_template.entry(task.template_idx).or_default() += 1;
                continue;
            }
            if !seen.insert(normalize(&restored)) {
                continue; // duplicate surface, silently dropped
            }
            let origin = Some(TemplateOrigin {
                source_id: source_id.clone(),
                pivot_lang: task.lang.clone(),
            });
            match kind {
                Kind::Core => {
                    let source = &out.cores[task.template_idx];
                    let mut t = source.clone();
                    t.id = format!("{source_id}-para-{}", task.lang);
                    t.text = restored;
                    t.origin = origin;
                    out.cores.push(t);
                    stats.added_cores += 1;
                }
                Kind::Modifier => {
                    let source = &out.modifiers[task.template_idx];
                    let mut t = source.clone();
                    t.id = format!("{source_id}-para-{}", task.lang);
                    t.text = restored;
                    t.origin = origin;
                    out.modifiers.push(t);
                    stats.added_modifiers += 1;
                }
            }
        }

        for (idx, failed) in failed_per_template {
            if Some(&failed) == attempts_per_template.get(&idx) {
                let id = match kind {
                    Kind::Core => &out.cores[idx].id,
                    Kind::Modifier => &out.modifiers[idx].id,
                };
                stats
                    .warnings
                    .push(format!("template '{id}': all pivots failed; kept unchanged"));
            }
        }
        Ok(())
    };

    let core_texts: Vec<(usize, String)> =
        pack.cores.iter().enumerate().map(|(i, c)| (i, c.text.clone())).collect();
    run(Kind::Core, core_texts, &mut rng, &mut stats, &mut out)?;
    let modifier_texts: Vec<(usize, String)> =
        pack.modifiers.iter().enumerate().map(|(i, m)| (i, m.text.clone())).collect();
    run(Kind::Modifier, modifier_texts, &mut rng, &mut stats, &mut out)?;

    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::super::backend::MockBackend;
    use super::*;
    use crate::generator::sample_pack;

    #[test]
    fn identity_backend_adds_nothing() {
        let pack = sample_pack();
        let config = PivotConfig { n_languages: 3, ..PivotConfig::default() };
        let (out, stats) =
            paraphrase_pack(&pack, &config, &MockBackend::identity(), ExecMode::Sequential)
                .unwrap();
        assert_eq!(out, pack);
        assert_eq!(stats.added_cores + stats.added_modifiers, 0);
        assert_eq!(stats.attempted, 3 * (pack.cores.len() + pack.modifiers.len()));
    }

    #[test]
    fn synonym_backend_adds_one_variant_per_matching_core() {
        // two cores, one rewrite that touches both
        let mut pack = sample_pack();
        pack.cores.truncate(2);
        pack.modifiers.clear();
        let mock = MockBackend::from_json(r#"{"quel": "lequel"}"#, "fr").unwrap();
        let config = PivotConfig { n_languages: 5, ..PivotConfig::default() };
        let (out, stats) = paraphrase_pack(&pack, &config, &mock, ExecMode::Sequential).unwrap();
        // every pivot yields the same rewrite, deduplicated to one variant
        // per core: 2 + 2 = 4 cores total
        assert_eq!(out.cores.len(), 4);
        assert_eq!(stats.added_cores, 2);
        assert!(out.cores[2].origin.is_some());
        assert_eq!(out.cores[2].intents, out.cores[0].intents);
    }

    #[test]
    fn sentinel_loss_discards_the_paraphrase() {
        let mut pack = sample_pack();
        pack.cores.truncate(1);
        pack.modifiers.clear();
        // the mock eats the sentinel on the way back
        let mock = MockBackend::from_json(r#"{"XSLOT0": ""}"#, "fr").unwrap();
        let config = PivotConfig { n_languages: 2, ..PivotConfig::default() };
        let (out, stats) = paraphrase_pack(&pack, &config, &mock, ExecMode::Sequential).unwrap();
        assert_eq!(out.cores.len(), 1);
        assert_eq!(stats.added_cores, 0);
        assert_eq!(stats.failures.len(), 2);
        assert!(!stats.warnings.is_empty());
    }

    #[test]
    fn paraphrasing_is_deterministic() {
        let pack = sample_pack();
        let mock = MockBackend::from_json(
            r#"{"quel est": "quel est donc", "la valeur": "le niveau"}"#,
            "fr",
        )
        .unwrap();
        let config = PivotConfig { n_languages: 4, seed: 9, ..PivotConfig::default() };
        let (a, _) = paraphrase_pack(&pack, &config, &mock, ExecMode::Sequential).unwrap();
        let (b, _) = paraphrase_pack(&pack, &config, &mock, ExecMode::Sequential).unwrap();
        assert_eq!(a, b);
        let (c, _) = paraphrase_pack(&pack, &config, &mock, ExecMode::Parallel).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn paraphrases_keep_placeholders_and_intents() {
        let pack = sample_pack();
        let mock = MockBackend::from_json(r#"{"résultat": "bilan"}"#, "fr").unwrap();
        let config = PivotConfig { n_languages: 3, ..PivotConfig::default() };
        let (out, _) = paraphrase_pack(&pack, &config, &mock, ExecMode::Sequential).unwrap();
        for core in &out.cores {
            let slots = placeholders(&core.text).unwrap();
            assert_eq!(slots.len(), 1);
            assert_eq!(slots[0].name, "lab");
            if let Some(origin) = &core.origin {
                let source = out.cores.iter().find(|c| c.id == origin.source_id).unwrap();
                assert_eq!(core.intents, source.intents);
            }
        }
        // no duplicate normalized surfaces anywhere
        let mut seen = std::collections::HashSet::new();
        for core in &out.cores {
            assert!(seen.insert(normalize(&core.text)));
        }
    }
}
