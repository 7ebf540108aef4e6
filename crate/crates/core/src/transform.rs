//! Conversions and renderings of quoted answers.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::dataset::Passage;
use crate::markup::{strip_marks_with_ranges, QuotedAnswer, Segment};
use crate::textnorm::sentence_spans;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("quote {quote} cites source {source_index} but only {passages} passages exist")]
    IndexOutOfRange {
        quote: usize,
        source_index: usize,
        passages: usize,
    },
}

/// Replaces span-level quotes with sentence-level citations.
///
/// Marks are stripped, then every sentence containing (part of) a quote gets
/// ` [k]` for each cited source in order of first appearance, placed before
/// the sentence's terminal punctuation. Text between sentences is kept as is.
pub fn to_sentence_citations(answer: &QuotedAnswer) -> String {
    let (text, quotes) = strip_marks_with_ranges(answer);
    let mut out = String::with_capacity(text.len() + 16);
    let mut cursor = 0;
    for span in sentence_spans(&text) {
        out.push_str(&text[cursor..span.start]);
        cursor = span.end;
        let sentence = &text[span.clone()];

        let mut sources: Vec<usize> = Vec::new();
        for q in quotes
            .iter()
            .filter(|q| q.start < span.end && q.end > span.start)
        {
            if !sources.contains(&q.source) {
                sources.push(q.source);
            }
        }
        if sources.is_empty() {
            out.push_str(sentence);
            continue;
        }

        let (body, terminator) = match sentence.chars().last() {
            Some(c @ ('.' | '!' | '?')) => (sentence[..sentence.len() - 1].trim_end(), Some(c)),
            _ => (sentence, None),
        };
        out.push_str(body);
        for source in sources {
            let _ = write!(out, " [{source}]");
        }
        if let Some(c) = terminator {
            out.push(c);
        }
    }
    out.push_str(&text[cursor..]);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderTarget {
    Ansi,
    Html,
}

struct Swatch {
    html: &'static str,
    ansi: &'static str,
}

/// Highlight colours by source index, cycling after eight.
const PALETTE: [Swatch; 8] = [
    Swatch { html: "#ffe08a", ansi: "30;43" },
    Swatch { html: "#9be7f0", ansi: "30;46" },
    Swatch { html: "#b5eaa3", ansi: "30;42" },
    Swatch { html: "#f3b7ec", ansi: "30;45" },
    Swatch { html: "#a9c6ff", ansi: "30;44" },
    Swatch { html: "#ffb3a7", ansi: "30;41" },
    Swatch { html: "#fff3a3", ansi: "30;103" },
    Swatch { html: "#c9f7f2", ansi: "30;106" },
];

fn swatch(source: usize) -> &'static Swatch {
    &PALETTE[(source.max(1) - 1) % PALETTE.len()]
}

pub fn html_escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

/// CSS rules for the source indices used in `answers`.
pub fn html_stylesheet<'a>(answers: impl IntoIterator<Item = &'a QuotedAnswer>) -> String {
    let mut sources: Vec<usize> = answers.into_iter().flat_map(|a| a.sources_used()).collect();
    sources.sort_unstable();
    sources.dedup();
    let mut css = String::from(".semqa-src{border-radius:3px;padding:0 2px}");
    for s in sources {
        let _ = write!(css, ".semqa-src-{s}{{background:{}}}", swatch(s).html);
    }
    css
}

fn html_body(answer: &QuotedAnswer) -> String {
    let mut out = String::from("<p class=\"semqa-answer\">");
    for segment in answer.segments() {
        match segment {
            Segment::FreeText(text) => out.push_str(&html_escape(text)),
            Segment::Quote { source, text } => {
                let _ = write!(
                    out,
                    "<span class=\"semqa-src semqa-src-{source}\" title=\"source {source}\">{}</span>",
                    html_escape(text)
                );
            }
        }
    }
    out.push_str("</p>");
    out
}

/// Renders quotes highlighted by source: ANSI background colours, or an HTML
/// fragment with its own stylesheet.
pub fn render(answer: &QuotedAnswer, target: RenderTarget) -> String {
    match target {
        RenderTarget::Ansi => {
            let mut out = String::new();
            for segment in answer.segments() {
                match segment {
                    Segment::FreeText(text) => out.push_str(text),
                    Segment::Quote { source, text } => {
                        let _ = write!(out, "\x1b[{}m{text}\x1b[0m", swatch(*source).ansi);
                    }
                }
            }
            out
        }
        RenderTarget::Html => {
            format!("<style>{}</style>{}", html_stylesheet([answer]), html_body(answer))
        }
    }
}

/// A self-contained HTML page listing labelled answers.
pub fn html_document(title: &str, items: &[(String, QuotedAnswer)]) -> String {
    let mut out = String::from("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">");
    let _ = write!(out, "<title>{}</title>", html_escape(title));
    let _ = write!(
        out,
        "<style>body{{font-family:sans-serif;max-width:48em;margin:2em auto;line-height:1.5}}h2{{font-size:1em;color:#555}}{}</style>",
        html_stylesheet(items.iter().map(|(_, a)| a))
    );
    out.push_str("</head><body>\n");
    for (label, answer) in items {
        let _ = writeln!(out, "<h2>{}</h2>{}", html_escape(label), html_body(answer));
    }
    out.push_str("</body></html>\n");
    out
}

/// Where the closest partial match of an unfaithful quote was found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchHint {
    /// Character offset in the whitespace-collapsed `title: text` string.
    pub offset: usize,
    /// Length in characters of the longest common substring.
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FaithfulnessViolation {
    /// Ordinal of the quote among the answer's quotes.
    pub quote: usize,
    pub source: usize,
    pub text: String,
    pub hint: Option<MatchHint>,
    /// Other sources that do contain the span verbatim.
    pub found_in: Vec<usize>,
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Longest common substring of `needle` and `haystack` as (offset in
/// haystack, length) in characters, earliest offset on ties.
fn longest_common_substring(needle: &[char], haystack: &[char]) -> Option<MatchHint> {
    let mut prev = vec![0usize; needle.len() + 1];
    let mut curr = vec![0usize; needle.len() + 1];
    let mut best: Option<MatchHint> = None;
    for (j, h) in haystack.iter().enumerate() {
        for (i, n) in needle.iter().enumerate() {
            curr[i + 1] = if n == h { prev[i] + 1 } else { 0 };
            let len = curr[i + 1];
            if len > best.as_ref().map_or(0, |b| b.length) {
                best = Some(MatchHint {
                    offset: j + 1 - len,
                    length: len,
                });
            }
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    best
}

/// Reports quotes that are not verbatim (whitespace-collapsed, case-sensitive)
/// substrings of the passage they cite. A passage is matched as displayed to
/// writers, `title: text`, so quoting the title is allowed.
pub fn check_faithfulness(
    answer: &QuotedAnswer,
    passages: &[Passage],
) -> Result<Vec<FaithfulnessViolation>, TransformError> {
    let collapsed: Vec<String> = passages
        .iter()
        .map(|p| collapse_whitespace(&format!("{}: {}", p.title, p.text)))
        .collect();
    let mut violations = Vec::new();
    for (quote, (source, text)) in answer.quotes().enumerate() {
        if source == 0 || source > passages.len() {
            return Err(TransformError::IndexOutOfRange {
                quote,
                source_index: source,
                passages: passages.len(),
            });
        }
        let span = collapse_whitespace(text);
        let passage = &collapsed[source - 1];
        if passage.contains(&span) {
            continue;
        }
        let needle: Vec<char> = span.chars().collect();
        let haystack: Vec<char> = passage.chars().collect();
        violations.push(FaithfulnessViolation {
            quote,
            source,
            text: text.to_owned(),
            hint: longest_common_substring(&needle, &haystack),
            found_in: collapsed
                .iter()
                .enumerate()
                .filter(|(i, p)| *i != source - 1 && p.contains(&span))
                .map(|(i, _)| i + 1)
                .collect(),
        });
    }
    Ok(violations)
}
