//! Template paraphrasing through pivot translation.
//!
//! Each template is translated to a pivot language and back; paraphrases
//! that keep every slot placeholder (protected as sentinel tokens during
//! the round trip) and are new surface strings join the pack. The backend
//! is pluggable: a JSON-table mock for offline runs and tests, or any
//! HTTP service speaking the minimal translate contract.

mod backend;
mod pivot;
mod sentinel;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use backend::{HttpBackend, MockBackend, ENDPOINT_ENV, API_KEY_ENV};
pub use pivot::{paraphrase_pack, pivot_translate, ParaphraseStats};
pub use sentinel::{protect_slots, sentinels_intact, unprotect};

/// A translation service. Implementations must be shareable across
/// threads; remote calls may be issued concurrently.
pub trait TranslationBackend: Sync {
    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String>;
}

/// Sixty pivot language codes shipped as the default pool.
pub const DEFAULT_LANGUAGE_POOL: [&str; 60] = [
    "af", "am", "ar", "az", "be", "bg", "bn", "bs", "ca", "cs", "cy", "da", "de", "el", "en",
    "eo", "es", "et", "eu", "fa", "fi", "ga", "gl", "gu", "ha", "hi", "hr", "ht", "hu", "hy",
    "id", "is", "it", "ja", "ka", "kk", "km", "kn", "ko", "ku", "ky", "la", "lt", "lv", "mk",
    "ml", "mn", "mr", "ms", "mt", "ne", "nl", "no", "pa", "pl", "pt", "ro", "ru", "sk", "sl",
];

/// Pivot sampling configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PivotConfig {
    /// Pivot languages sampled per template.
    pub n_languages: usize,
    pub language_pool: Vec<String>,
    pub seed: u64,
    pub source_lang: String,
    /// Upper bound on concurrently issued backend calls.
    pub max_in_flight: usize,
}

impl Default for PivotConfig {
    fn default() -> Self {
        PivotConfig {
            n_languages: 10,
            language_pool: DEFAULT_LANGUAGE_POOL.iter().map(|s| s.to_string()).collect(),
            seed: 1,
            source_lang: "fr".into(),
            max_in_flight: 4,
        }
    }
}

impl PivotConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_languages == 0 || self.n_languages > self.language_pool.len() {
            return Err(Error::Config(format!(
                "n_languages {} outside 1..={}",
                self.n_languages,
                self.language_pool.len()
            )));
        }
        if self.max_in_flight == 0 {
            return Err(Error::Config("max_in_flight must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_pool_has_sixty_unique_codes() {
        let config = PivotConfig::default();
        config.validate().unwrap();
        assert_eq!(config.language_pool.len(), 60);
        let unique: std::collections::HashSet<_> = config.language_pool.iter().collect();
        assert_eq!(unique.len(), 60);
    }

    #[test]
    fn oversized_sampling_is_rejected() {
        let config = PivotConfig { n_languages: 61, ..PivotConfig::default() };
        assert!(config.validate().is_err());
    }
}
