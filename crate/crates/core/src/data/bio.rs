//! BIO tag sequences and their span decoding.

use crate::error::{Error, Result};

use super::SlotSpan;

/// Decode BIO tags into maximal spans.
///
/// Tolerates BIO-invalid input (model output): an `I-X` that does not
/// continue a `B-X`/`I-X` run is repaired to `B-X`. Tags that are neither
/// `O` nor `B-`/`I-` prefixed are rejected.
pub fn spans_from_bio<S: AsRef<str>>(tags: &[S]) -> Result<Vec<SlotSpan>> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, String)> = None;
    for (i, tag) in tags.iter().enumerate() {
        let tag = tag.as_ref();
        if tag == "O" {
            if let Some((start, kind)) = open.take() {
                spans.push(SlotSpan::new(start, i, kind));
            }
        } else if let Some(kind) = tag.strip_prefix("B-") {
            if let Some((start, k)) = open.take() {
                spans.push(SlotSpan::new(start, i, k));
            }
            open = Some((i, kind.to_string()));
        } else if let Some(kind) = tag.strip_prefix("I-") {
            match &open {
                Some((_, k)) if k == kind => {}
                _ => {
                    // repair: treat as the start of a new span
                    if let Some((start, k)) = open.take() {
                        spans.push(SlotSpan::new(start, i, k));
                    }
                    open = Some((i, kind.to_string()));
                }
            }
        } else {
            return Err(Error::Data(format!("unknown tag string '{tag}'")));
        }
    }
    if let Some((start, kind)) = open {
        spans.push(SlotSpan::new(start, tags.len(), kind));
    }
    Ok(spans)
}

/// Encode non-overlapping spans as a BIO tag sequence of length `len`.
pub fn tags_from_spans(len: usize, spans: &[SlotSpan]) -> Result<Vec<String>> {
    let mut tags = vec!["O".to_string(); len];
    for span in spans {
        if span.start >= span.end || span.end > len {
            return Err(Error::Data(format!(
                "span {}..{} out of range for {len} tokens",
                span.start, span.end
            )));
        }
        for (i, tag) in tags[span.start..span.end].iter_mut().enumerate() {
            if *tag != "O" {
                return Err(Error::Data(format!(
                    "overlapping span at token {}",
                    span.start + i
                )));
            }
            *tag = if i == 0 {
                format!("B-{}", span.kind)
            } else {
                format!("I-{}", span.kind)
            };
        }
    }
    Ok(tags)
}
