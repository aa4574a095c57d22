//! Translation backends: an offline mock driven by a synonym table and a
//! blocking HTTP client for any service speaking the minimal contract
//! `POST {"q", "source", "target"} → {"translatedText"}`.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::Deserialize;

use crate::error::{Error, Result};

use super::TranslationBackend;

/// Environment variable naming the HTTP endpoint URL.
pub const ENDPOINT_ENV: &str = "NLU_FORGE_MT_ENDPOINT";
/// Environment variable carrying the API key (never written to manifests).
pub const API_KEY_ENV: &str = "NLU_FORGE_MT_API_KEY";

/// Offline mock: the outbound leg is the identity; the return leg (target
/// equals the configured source language) applies the synonym table
/// replacements left-to-right, in sorted key order.
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    table: Vec<(String, String)>,
    source_lang: String,
}

impl MockBackend {
    /// A mock that returns every input unchanged.
    pub fn identity() -> MockBackend {
        MockBackend { table: Vec::new(), source_lang: "fr".into() }
    }

    pub fn new(table: BTreeMap<String, String>, source_lang: impl Into<String>) -> MockBackend {
        MockBackend {
            table: table.into_iter().collect(),
            source_lang: source_lang.into(),
        }
    }

    /// Parse a JSON synonym table `{"phrase": "replacement", …}`.
    pub fn from_json(text: &str, source_lang: impl Into<String>) -> Result<MockBackend> {
        let table: BTreeMap<String, String> =
            serde_json::from_str(text).map_err(|e| Error::Config(format!(
                "mock table is not a JSON string map: {e}"
            )))?;
        Ok(MockBackend::new(table, source_lang))
    }
}

impl TranslationBackend for MockBackend {
    fn translate(&self, text: &str, _source: &str, target: &str) -> Result<String> {
        if target == self.source_lang {
            let mut out = text.to_string();
            for (phrase, replacement) in &self.table {
                out = out.replace(phrase.as_str(), replacement);
            }
            Ok(out)
        } else {
            Ok(text.to_string())
        }
    }
}

#[derive(Deserialize)]
struct TranslateResponse {
    #[serde(rename = "translatedText")]
    translated_text: String,
}

/// Blocking HTTP backend with a per-call timeout.
pub struct HttpBackend {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Result<HttpBackend> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(HttpBackend { endpoint: endpoint.into(), api_key, client })
    }

    /// Endpoint and key from the environment.
    pub fn from_env(timeout: Duration) -> Result<HttpBackend> {
        let endpoint = std::env::var(ENDPOINT_ENV).map_err(|_| {
            Error::Config(format!("{ENDPOINT_ENV} is not set; no translation endpoint"))
        })?;
        let api_key = std::env::var(API_KEY_ENV).ok();
        HttpBackend::new(endpoint, api_key, timeout)
    }
}

impl TranslationBackend for HttpBackend {
    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String> {
        let mut body = serde_json::json!({
            "q": text,
            "source": source,
            "target": target,
        });
        if let Some(key) = &self.api_key {
            body["api_key"] = serde_json::Value::String(key.clone());
        }
        let response = self
            .client
            .post(&self.endpoint)
            .json(&body)
            .send()
            .map_err(|e| Error::Backend { lang: target.into(), msg: e.to_string() })?;
        let status = response.status();
        if !status.is_success() {
            return Err(Error::Backend {
                lang: target.into(),
                msg: format!("HTTP {status}"),
            });
        }
        let parsed: TranslateResponse = response
            .json()
            .map_err(|e| Error::Backend { lang: target.into(), msg: e.to_string() })?;
        Ok(parsed.translated_text)
    }
}
