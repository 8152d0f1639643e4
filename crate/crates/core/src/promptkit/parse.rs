//! Extraction of schema-typed labels from free-form model replies.

use serde::{Deserialize, Serialize};

use crate::synthgen::Label;

use super::Schema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    ParseFailure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedLabel {
    pub value: Option<Label>,
    pub raw_text: String,
    pub status: ParseStatus,
}

impl ParsedLabel {
    fn ok(raw: &str, v: Label) -> Self {
        Self {
            value: Some(v),
            raw_text: raw.to_string(),
            status: ParseStatus::Ok,
        }
    }

    fn failure(raw: &str) -> Self {
        Self {
            value: None,
            raw_text: raw.to_string(),
            status: ParseStatus::ParseFailure,
        }
    }
}

/// Lowercases and folds `_`/`-` to spaces so `near_fall`, `near-fall`
/// and `Near Fall` compare equal.
pub(crate) fn normalize(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            '_' | '-' => ' ',
            c => c.to_ascii_lowercase(),
        })
        .collect()
}

fn is_word(c: u8) -> bool {
    c.is_ascii_alphanumeric()
}

/// Whole-word occurrences of `needle` in `hay` as byte spans.
fn word_spans(hay: &str, needle: &str) -> Vec<(usize, usize)> {
    let (h, n) = (hay.as_bytes(), needle.as_bytes());
    let mut out = Vec::new();
    if n.is_empty() {
        return out;
    }
    let mut from = 0;
    while let Some(pos) = hay[from..].find(needle) {
        let s = from + pos;
        let e = s + n.len();
        let left_ok = s == 0 || !is_word(h[s - 1]);
        let right_ok = e == h.len() || !is_word(h[e]);
        if left_ok && right_ok {
            out.push((s, e));
        }
        from = s + 1;
        while from < hay.len() && !hay.is_char_boundary(from) {
            from += 1;
        }
    }
    out
}

/// Option indices mentioned in `text`, with overlapped shorter matches
/// dropped (so "near fall" does not also count as "fall").
fn option_hits(text: &str, options: &[String]) -> Vec<usize> {
    let mut spans: Vec<(usize, usize, usize)> = Vec::new();
    for (i, o) in options.iter().enumerate() {
        let o = normalize(o.trim());
        for (s, e) in word_spans(text, &o) {
            spans.push((s, e, i));
        }
    }
    let kept: Vec<usize> = spans
        .iter()
        .filter(|&&(s, e, _)| {
            !spans
                .iter()
                .any(|&(s2, e2, _)| s2 <= s && e <= e2 && (e2 - s2) > (e - s))
        })
        .map(|&(_, _, i)| i)
        .collect();
    let mut distinct = kept;
    distinct.sort_unstable();
    distinct.dedup();
    distinct
}

/// Standalone integer tokens: an optional minus sign and digits, not
/// touching letters, digits or a decimal point followed by a digit.
pub(crate) fn integer_tokens(text: &str) -> Vec<i64> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        if b[i].is_ascii_digit() && (i == 0 || !(is_word(b[i - 1]) || b[i - 1] == b'.')) {
            let mut j = i;
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
            let fractional = j + 1 < b.len() && b[j] == b'.' && b[j + 1].is_ascii_digit();
            let glued = j < b.len() && b[j].is_ascii_alphabetic();
            if !fractional && !glued {
                let neg = i > 0 && b[i - 1] == b'-' && (i == 1 || !is_word(b[i - 2]));
                if let Ok(v) = text[i..j].parse::<i64>() {
                    out.push(if neg { -v } else { v });
                }
            }
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

/// Reads one admissible label from `raw`, or reports a parse failure when
/// none or more than one distinct admissible value is present.
pub fn parse_response(raw: &str, schema: &Schema) -> ParsedLabel {
    let lowered = raw.to_ascii_lowercase();
    match schema {
        Schema::Classes(classes) => {
            let hits = option_hits(&normalize(raw), classes);
            match hits.as_slice() {
                [i] => ParsedLabel::ok(raw, Label::Class(classes[*i].clone())),
                _ => ParsedLabel::failure(raw),
            }
        }
        Schema::IntegerRange { lo, hi } => {
            let mut vals: Vec<i64> = integer_tokens(&lowered)
                .into_iter()
                .filter(|v| (*lo..=*hi).contains(v))
                .collect();
            vals.sort_unstable();
            vals.dedup();
            match vals.as_slice() {
                [v] => ParsedLabel::ok(raw, Label::Count(*v)),
                _ => ParsedLabel::failure(raw),
            }
        }
        Schema::Choice { options } => {
            let mut vals = option_hits(&normalize(raw), options);
            vals.extend(
                integer_tokens(&lowered)
                    .into_iter()
                    .filter(|v| *v >= 0 && (*v as usize) < options.len())
                    .map(|v| v as usize),
            );
            vals.sort_unstable();
            vals.dedup();
            match vals.as_slice() {
                [v] => ParsedLabel::ok(raw, Label::Choice(*v)),
                _ => ParsedLabel::failure(raw),
            }
        }
    }
}
