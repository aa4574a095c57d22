//! Slot-placeholder protection across the translation round trip.
//!
//! `<...>` placeholders become uppercase alphanumeric sentinels ("XSLOT0",
//! "XSLOT1", …), which translation services overwhelmingly leave
//! untouched. Any paraphrase that loses or duplicates a sentinel is
//! rejected by the caller.

use crate::error::Result;
use crate::generator::placeholders;

/// Replace each placeholder with a sentinel token. Returns the masked text
/// and the (sentinel, original) pairs in order of appearance.
pub fn protect_slots(text: &str) -> Result<(String, Vec<(String, String)>)> {
    let found = placeholders(text)?;
    let mut masked = String::with_capacity(text.len());
    let mut map = Vec::with_capacity(found.len());
    let mut cursor = 0;
    for (k, slot) in found.iter().enumerate() {
        let sentinel = format!("XSLOT{k}");
        masked.push_str(&text[cursor..slot.range.start]);
        masked.push_str(&sentinel);
        map.push((sentinel, text[slot.range.clone()].to_string()));
        cursor = slot.range.end;
    }
    masked.push_str(&text[cursor..]);
    Ok((masked, map))
}

/// Invert [`protect_slots`].
pub fn unprotect(masked: &str, map: &[(String, String)]) -> String {
    let mut text = masked.to_string();
    for (sentinel, original) in map {
        text = text.replacen(sentinel.as_str(), original, 1);
    }
    text
}

/// True when every sentinel occurs exactly once in `text`.
pub fn sentinels_intact(text: &str, map: &[(String, String)]) -> bool {
    map.iter().all(|(sentinel, _)| text.matches(sentinel.as_str()).count() == 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masking_matches_the_contract() {
        let (masked, map) = protect_slots("résultat du dernier <lab>").unwrap();
        assert_eq!(masked, "résultat du dernier XSLOT0");
        assert_eq!(map, vec![("XSLOT0".to_string(), "<lab>".to_string())]);
    }

    #[test]
    fn no_placeholder_is_identity_with_empty_map() {
        let (masked, map) = protect_slots("pas de variable ici").unwrap();
        assert_eq!(masked, "pas de variable ici");
        assert!(map.is_empty());
    }

    #[test]
    fn unprotect_inverts_protect() {
        for text in [
            "résultat du dernier <lab>",
            "<range>",
            "a <lab> b <date|duration|event> c",
            "rien",
        ] {
            let (masked, map) = protect_slots(text).unwrap();
            assert_eq!(unprotect(&masked, &map), text);
        }
    }

    #[test]
    fn nested_brackets_are_rejected() {
        assert!(protect_slots("a <x<y>>").is_err());
    }

    #[test]
    fn intact_check_counts_occurrences() {
        let (_, map) = protect_slots("a <lab>").unwrap();
        assert!(sentinels_intact("bla XSLOT0 bla", &map));
        assert!(!sentinels_intact("bla bla", &map));
        assert!(!sentinels_intact("XSLOT0 XSLOT0", &map));
    }
}
