//! Whitespace/punctuation tokenizer tuned for French questions.

/// Tokenize `text` into lowercased tokens.
///
/// Rules, in order of precedence:
/// - whitespace separates tokens and is dropped;
/// - an apostrophe closes the current token and stays attached to it, so
///   French elisions split after the apostrophe ("l'hémoglobine" →
///   `["l'", "hémoglobine"]`);
/// - a slash between digits extends the current token, keeping dates like
///   "27/03/2015" atomic;
/// - any other non-alphanumeric character becomes its own token.
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let chars: Vec<char> = lower.chars().collect();
    let mut tokens = Vec::new();
    let mut cur = String::new();

    let flush = |cur: &mut String, tokens: &mut Vec<String>| {
        if !cur.is_empty() {
            tokens.push(std::mem::take(cur));
        }
    };

    for (i, &c) in chars.iter().enumerate() {
        if c.is_whitespace() {
            flush(&mut cur, &mut tokens);
        } else if c.is_alphanumeric() {
            cur.push(c);
        } else if c == '\'' || c == '\u{2019}' {
            cur.push(c);
            flush(&mut cur, &mut tokens);
        } else if c == '/'
            && cur.chars().last().is_some_and(|p| p.is_ascii_digit())
            && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit())
        {
            cur.push(c);
        } else {
            flush(&mut cur, &mut tokens);
            tokens.push(c.to_string());
        }
    }
    flush(&mut cur, &mut tokens);
    tokens
}

#[cfg(test)]
mod tests {
    use super::tokenize;
    use proptest::prelude::*;

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn whitespace_only_split() {
        assert_eq!(
            tokenize("quel est le résultat"),
            vec!["quel", "est", "le", "résultat"]
        );
    }

    #[test]
    fn dates_stay_atomic_and_punctuation_detaches() {
        assert_eq!(
            tokenize("créatinine du 27/03/2015 ?"),
            vec!["créatinine", "du", "27/03/2015", "?"]
        );
    }

    #[test]
    fn elision_splits_after_apostrophe() {
        assert_eq!(tokenize("l'hémoglobine"), vec!["l'", "hémoglobine"]);
        assert_eq!(tokenize("l\u{2019}INR"), vec!["l\u{2019}", "inr"]);
    }

    #[test]
    fn lowercases() {
        assert_eq!(tokenize("Protéine C Réactive"), vec!["protéine", "c", "réactive"]);
    }

    #[test]
    fn slash_between_words_is_punctuation() {
        assert_eq!(tokenize("et/ou"), vec!["et", "/", "ou"]);
    }

    proptest! {
        // tokenize is idempotent on its own output joined by single spaces
        #[test]
        fn idempotent_on_rejoined_output(s in "\\PC{0,60}") {
            let once = tokenize(&s);
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(once, twice);
        }
    }
}
