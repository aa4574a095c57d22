//! Corpus file formats: JSON-lines (primary) and CoNLL export.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::{canonical_json, Corpus, LabelSchema, Utterance};

/// Write a corpus as canonical JSON-lines: one utterance per line, sorted
/// object keys, `\n` endings. Two writes of the same corpus are
/// byte-identical.
pub fn write_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, corpus_to_jsonl(corpus)).map_err(|e| Error::io(path, e))
}

/// Render a corpus to its canonical JSON-lines string.
pub fn corpus_to_jsonl(corpus: &Corpus) -> String {
    let mut out = String::new();
    for utt in &corpus.utterances {
        out.push_str(&canonical_json(utt));
        out.push('\n');
    }
    out
}

/// Read a JSON-lines corpus and validate it against `schema`.
///
/// Malformed lines are reported with their 1-based line number; schema
/// violations with the offending utterance id.
pub fn read_corpus(path: impl AsRef<Path>, schema: &LabelSchema) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    corpus_from_jsonl(&text, schema, &path.display().to_string())
}

/// Parse JSON-lines corpus text; `source` names the origin in errors.
pub fn corpus_from_jsonl(text: &str, schema: &LabelSchema, source: &str) -> Result<Corpus> {
    let mut utterances = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let utt: Utterance = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: source.to_string(),
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        utt.validate(schema).map_err(|e| Error::Parse {
            path: source.to_string(),
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        utterances.push(utt);
    }
    Corpus::new(schema.clone(), utterances)
}

/// One sentence of a CoNLL file: token, optional lemma/POS columns, tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConllSentence {
    pub tokens: Vec<String>,
    pub lemmas: Option<Vec<String>>,
    pub pos: Option<Vec<String>>,
    pub tags: Vec<String>,
}

/// Export a corpus in CoNLL form: `TOKEN<TAB>TAG` per line (with LEMMA and
/// POS columns inserted when the utterance carries them), one blank line
/// after each utterance.
pub fn to_conll(corpus: &Corpus) -> String {
    let mut out = String::new();
    for utt in &corpus.utterances {
        for (i, (token, tag)) in utt.tokens.iter().zip(&utt.slot_tags).enumerate() {
            out.push_str(token);
            if let Some(lemmas) = &utt.lemmas {
                out.push('\t');
                out.push_str(&lemmas[i]);
            }
            if let Some(pos) = &utt.pos {
                out.push('\t');
                out.push_str(&pos[i]);
            }
            out.push('\t');
            out.push_str(tag);
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// Parse CoNLL text produced by [`to_conll`] (or by compatible tools).
///
/// Lines have 2 columns (token, tag), 3 (token, lemma, tag) or 4
/// (token, lemma, POS, tag); the column count must be consistent within a
/// sentence.
pub fn parse_conll(text: &str) -> Result<Vec<ConllSentence>> {
    let mut sentences = Vec::new();
    let mut rows: Vec<Vec<String>> = Vec::new();
    let flush = |rows: &mut Vec<Vec<String>>, sentences: &mut Vec<ConllSentence>| -> Result<()> {
        if rows.is_empty() {
            return Ok(());
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Data("inconsistent CoNLL column count".into()));
        }
        let col = |i: usize| rows.iter().map(|r| r[i].clone()).collect::<Vec<_>>();
        let sentence = match width {
            2 => ConllSentence { tokens: col(0), lemmas: None, pos: None, tags: col(1) },
            3 => ConllSentence { tokens: col(0), lemmas: Some(col(1)), pos: None, tags: col(2) },
            4 => ConllSentence {
                tokens: col(0),
                lemmas: Some(col(1)),
                pos: Some(col(2)),
                tags: col(3),
            },
            n => return Err(Error::Data(format!("unsupported CoNLL column count {n}"))),
        };
        rows.clear();
        sentences.push(sentence);
        Ok(())
    };
    for line in text.lines() {
        if line.trim().is_empty() {
            flush(&mut rows, &mut sentences)?;
        } else {
            rows.push(line.split('\t').map(|s| s.to_string()).collect());
        }
    }
    flush(&mut rows, &mut sentences)?;
    Ok(sentences)
}
