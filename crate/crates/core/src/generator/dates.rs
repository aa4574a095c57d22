//! Synthesis of date expressions: absolute dates, relative durations,
//! ranges and event references.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// The four kinds of temporal expression a modifier slot can take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DateKind {
    Absolute,
    Relative,
    Range,
    Event,
}

/// A synthesized date expression. `tokens` is what gets substituted into
/// the modifier placeholder; event references contribute no tokens (the
/// event wording lives in the modifier text itself).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DateExpr {
    pub tokens: Vec<String>,
    pub kind: DateKind,
}

const DURATION_UNITS: [&str; 4] = ["jours", "semaines", "mois", "ans"];

fn days_in_month(month: u32, year: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 => {
            if (year.is_multiple_of(4) && !year.is_multiple_of(100)) || year.is_multiple_of(400) {
                29
            } else {
                28
            }
        }
        _ => unreachable!("month out of range"),
    }
}

fn random_date(rng: &mut impl Rng) -> (u32, u32, u32) {
    let year = rng.gen_range(1995..=2025);
    let month = rng.gen_range(1..=12);
    let day = rng.gen_range(1..=days_in_month(month, year));
    (day, month, year)
}

fn format_date((day, month, year): (u32, u32, u32)) -> String {
    format!("{day:02}/{month:02}/{year:04}")
}

/// Synthesize a date expression of the requested kind.
///
/// - `Absolute`: a single `dd/mm/yyyy` token with a valid calendar date.
/// - `Relative`: a duration like `["3", "jours"]`; the preposition comes
///   from the modifier text so the combined phrase reads "depuis 3 jours".
/// - `Range`: `["entre", d1, "et", d2]` with d1 ≤ d2 chronologically.
/// - `Event`: no tokens.
pub fn synth_date(kind: DateKind, rng: &mut impl Rng) -> DateExpr {
    let tokens = match kind {
        DateKind::Absolute => vec![format_date(random_date(rng))],
        DateKind::Relative => {
            // start at 2 so plural units never disagree with the number
            let n = rng.gen_range(2..=30u32);
            let unit = DURATION_UNITS[rng.gen_range(0..DURATION_UNITS.len())];
            vec![n.to_string(), unit.to_string()]
        }
        DateKind::Range => {
            let mut a = random_date(rng);
            let mut b = random_date(rng);
            // chronological order: compare (year, month, day)
            let key = |(d, m, y): (u32, u32, u32)| (y, m, d);
            if key(a) > key(b) {
                std::mem::swap(&mut a, &mut b);
            }
            vec![
                "entre".to_string(),
                format_date(a),
                "et".to_string(),
                format_date(b),
            ]
        }
        DateKind::Event => Vec::new(),
    };
    DateExpr { tokens, kind }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn is_date_token(tok: &str) -> bool {
        let parts: Vec<&str> = tok.split('/').collect();
        parts.len() == 3
            && parts[0].len() == 2
            && parts[1].len() == 2
            && parts[2].len() == 4
            && parts.iter().all(|p| p.chars().all(|c| c.is_ascii_digit()))
    }

    fn parse_date(tok: &str) -> (u32, u32, u32) {
        let parts: Vec<u32> = tok.split('/').map(|p| p.parse().unwrap()).collect();
        (parts[2], parts[1], parts[0]) // (year, month, day) for ordering
    }

    #[test]
    fn absolute_is_one_valid_token() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let expr = synth_date(DateKind::Absolute, &mut rng);
        assert_eq!(expr.tokens.len(), 1);
        assert!(is_date_token(&expr.tokens[0]), "{:?}", expr.tokens);
    }

    #[test]
    fn event_has_no_tokens() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let expr = synth_date(DateKind::Event, &mut rng);
            assert!(expr.tokens.is_empty());
            assert_eq!(expr.kind, DateKind::Event);
        }
    }

    #[test]
    fn range_is_four_tokens_in_chronological_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let expr = synth_date(DateKind::Range, &mut rng);
        assert_eq!(expr.tokens.len(), 4);
        assert_eq!(expr.tokens[0], "entre");
        assert_eq!(expr.tokens[2], "et");
        // independent parse-and-compare check
        assert!(parse_date(&expr.tokens[1]) <= parse_date(&expr.tokens[3]));
    }

    #[test]
    fn ranges_stay_ordered_across_seeds() {
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let expr = synth_date(DateKind::Range, &mut rng);
            assert!(parse_date(&expr.tokens[1]) <= parse_date(&expr.tokens[3]));
        }
    }

    #[test]
    fn all_kinds_respect_length_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in [
            DateKind::Absolute,
            DateKind::Relative,
            DateKind::Range,
            DateKind::Event,
        ] {
            for _ in 0..50 {
                let expr = synth_date(kind, &mut rng);
                assert!(expr.tokens.len() <= 6);
            }
        }
    }

    #[test]
    fn february_days_respect_leap_years() {
        assert_eq!(days_in_month(2, 2000), 29);
        assert_eq!(days_in_month(2, 1900), 28);
        assert_eq!(days_in_month(2, 2024), 29);
        assert_eq!(days_in_month(2, 2023), 28);
    }
}
