//! The bracketed quoted-answer markup.
//!
//! An answer interleaves free text with quoted spans of the form
//! `[ k span ]`, where `k` is the 1-based index of the source passage the
//! span was copied from:
//!
//! ```text
//! The song "[ 1 I'll Be Home for Christmas ]" was originally released by [ 1 Bing Crosby ]
//! ```
//!
//! Grammar: `ANSWER := (TEXT | QUOTE)*`, `QUOTE := "[" WS+ INT WS+ SPAN WS* "]"`.
//! Quotes do not nest.
//!
//! Reference data is parsed in [`ParseMode::Strict`]; model output is usually
//! parsed with [`parse_lenient`], which never fails and demotes malformed
//! constructs to free text while counting them as warnings.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One piece of a quoted answer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Segment {
    FreeText(String),
    /// A span copied from source `source` (1-based).
    Quote { source: usize, text: String },
}

impl Segment {
    pub fn quote(source: usize, text: impl Into<String>) -> Self {
        Segment::Quote {
            source,
            text: text.into(),
        }
    }

    pub fn free(text: impl Into<String>) -> Self {
        Segment::FreeText(text.into())
    }

    pub fn text(&self) -> &str {
        match self {
            Segment::FreeText(t) => t,
            Segment::Quote { text, .. } => text,
        }
    }

    pub fn is_quote(&self) -> bool {
        matches!(self, Segment::Quote { .. })
    }
}

/// An ordered sequence of free-text and quoted segments.
///
/// Constructors keep the canonical form: adjacent free-text segments are
/// coalesced and empty free text is dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotedAnswer {
    segments: Vec<Segment>,
    source_count_hint: Option<usize>,
}

impl QuotedAnswer {
    pub fn new(segments: impl IntoIterator<Item = Segment>) -> Self {
        let mut answer = QuotedAnswer::default();
        for segment in segments {
            answer.push(segment);
        }
        answer
    }

    pub fn with_source_count(mut self, source_count: usize) -> Self {
        self.source_count_hint = Some(source_count);
        self
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn source_count_hint(&self) -> Option<usize> {
        self.source_count_hint
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Appends a segment, merging it into a trailing free-text segment when
    /// both are free text.
    pub fn push(&mut self, segment: Segment) {
        match segment {
            Segment::FreeText(text) if text.is_empty() => {}
            Segment::FreeText(text) => match self.segments.last_mut() {
                Some(Segment::FreeText(prev)) => prev.push_str(&text),
                _ => self.segments.push(Segment::FreeText(text)),
            },
            quote => self.segments.push(quote),
        }
    }

    pub fn quotes(&self) -> impl Iterator<Item = (usize, &str)> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Quote { source, text } => Some((*source, text.as_str())),
            Segment::FreeText(_) => None,
        })
    }

    /// Distinct source indices in order of first appearance.
    pub fn sources_used(&self) -> Vec<usize> {
        let mut seen = Vec::new();
        for (source, _) in self.quotes() {
            if !seen.contains(&source) {
                seen.push(source);
            }
        }
        seen
    }

    /// The form produced by `parse(serialize(self))`: quote text trimmed,
    /// free text coalesced.
    pub fn canonical(&self) -> QuotedAnswer {
        let segments = self.segments.iter().map(|s| match s {
            Segment::Quote { source, text } => Segment::quote(*source, text.trim()),
            free => free.clone(),
        });
        QuotedAnswer {
            source_count_hint: self.source_count_hint,
            ..QuotedAnswer::new(segments)
        }
    }
}

impl fmt::Display for QuotedAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for segment in &self.segments {
            match segment {
                Segment::FreeText(text) => f.write_str(text)?,
                Segment::Quote { source, text } => write!(f, "[ {source} {text} ]")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseMode {
    Strict,
    #[default]
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum MarkupErrorKind {
    UnmatchedOpenBracket,
    UnmatchedCloseBracket,
    MissingIndex,
    IndexOutOfRange {
        index: usize,
        source_count: Option<usize>,
    },
    EmptySpan,
    NestedQuote,
}

impl fmt::Display for MarkupErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkupErrorKind::UnmatchedOpenBracket => f.write_str("unmatched `[`"),
            MarkupErrorKind::UnmatchedCloseBracket => f.write_str("unmatched `]`"),
            MarkupErrorKind::MissingIndex => f.write_str("quote is missing a source index"),
            MarkupErrorKind::IndexOutOfRange {
                index,
                source_count: Some(k),
            } => write!(f, "source index {index} out of range 1..={k}"),
            MarkupErrorKind::IndexOutOfRange { index, .. } => {
                write!(f, "source index {index} out of range")
            }
            MarkupErrorKind::EmptySpan => f.write_str("quote has an empty span"),
            MarkupErrorKind::NestedQuote => f.write_str("nested quote"),
        }
    }
}

/// A markup problem at a byte offset of the input.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{kind} at byte {position}")]
pub struct MarkupError {
    pub kind: MarkupErrorKind,
    pub position: usize,
}

/// Result of a lenient parse: always an answer, plus what was demoted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LenientParse {
    pub answer: QuotedAnswer,
    pub warnings: Vec<MarkupError>,
}

/// Parses markup. Strict mode fails on the first problem; lenient mode never
/// fails (see [`parse_lenient`]).
pub fn parse(
    text: &str,
    mode: ParseMode,
    source_count: Option<usize>,
) -> Result<QuotedAnswer, MarkupError> {
    match mode {
        ParseMode::Strict => Parser::new(text, source_count, true).run().map(|p| p.answer),
        ParseMode::Lenient => Ok(parse_lenient(text, source_count).answer),
    }
}

/// Parses markup, demoting malformed brackets to literal text and
/// out-of-range quotes to their bare span text.
pub fn parse_lenient(text: &str, source_count: Option<usize>) -> LenientParse {
    Parser::new(text, source_count, false)
        .run()
        .expect("lenient parsing is total")
}

/// Canonical emission: `[ k span ]` with single spaces, free text verbatim.
pub fn serialize(answer: &QuotedAnswer) -> String {
    answer.to_string()
}

/// Text of all quotes attributed to source `k`, in order, joined by one space.
pub fn psi_k(answer: &QuotedAnswer, k: usize) -> String {
    let spans: Vec<&str> = answer
        .quotes()
        .filter(|(source, _)| *source == k)
        .map(|(_, text)| text)
        .collect();
    spans.join(" ")
}

/// Byte range of a quote inside [`strip_marks`] output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuoteRange {
    pub source: usize,
    pub start: usize,
    pub end: usize,
}

/// The answer as plain text with all attribution marks removed.
pub fn strip_marks(answer: &QuotedAnswer) -> String {
    strip_marks_with_ranges(answer).0
}

/// Like [`strip_marks`], also reporting where each quote landed.
///
/// Two directly adjacent quotes are separated by a single space; quote text
/// is otherwise glued to neighbouring free text exactly as written, so
/// `"[ 1 x ]"` renders as `"x"`. Whitespace runs created at segment
/// boundaries are collapsed.
pub fn strip_marks_with_ranges(answer: &QuotedAnswer) -> (String, Vec<QuoteRange>) {
    let mut out = String::new();
    let mut ranges = Vec::new();
    let mut prev_was_quote = false;
    for segment in answer.segments() {
        let mut text = segment.text();
        if segment.is_quote() && prev_was_quote && !out.ends_with(char::is_whitespace) {
            out.push(' ');
        }
        if out.ends_with(char::is_whitespace) {
            text = text.trim_start();
        }
        match segment {
            Segment::Quote { source, .. } => {
                let start = out.len();
                out.push_str(text);
                ranges.push(QuoteRange {
                    source: *source,
                    start,
                    end: out.len(),
                });
                prev_was_quote = true;
            }
            Segment::FreeText(_) => {
                out.push_str(text);
                prev_was_quote = false;
            }
        }
    }
    (out, ranges)
}

struct Parser<'a> {
    text: &'a str,
    source_count: Option<usize>,
    strict: bool,
    answer: QuotedAnswer,
    warnings: Vec<MarkupError>,
    pending: String,
}

enum Attempt<'a> {
    Quote { source: usize, span: &'a str, end: usize },
    /// Well-formed but the index is not a valid source; `span` is kept.
    OutOfRange { error: MarkupError, span: &'a str, end: usize },
    Malformed(MarkupError),
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, source_count: Option<usize>, strict: bool) -> Self {
        Parser {
            text,
            source_count,
            strict,
            answer: QuotedAnswer::default(),
            warnings: Vec::new(),
            pending: String::new(),
        }
    }

    fn run(mut self) -> Result<LenientParse, MarkupError> {
        let bytes = self.text.as_bytes();
        let mut pos = 0;
        while pos < bytes.len() {
            match bytes[pos] {
                b'[' => match self.attempt_quote(pos) {
                    Attempt::Quote { source, span, end } => {
                        self.flush();
                        self.answer.push(Segment::quote(source, span));
                        pos = end;
                    }
                    Attempt::OutOfRange { error, span, end } => {
                        self.problem(error)?;
                        self.pending.push_str(span);
                        pos = end;
                    }
                    Attempt::Malformed(error) => {
                        self.problem(error)?;
                        self.pending.push('[');
                        pos += 1;
                    }
                },
                b']' => {
                    self.problem(MarkupError {
                        kind: MarkupErrorKind::UnmatchedCloseBracket,
                        position: pos,
                    })?;
                    self.pending.push(']');
                    pos += 1;
                }
                _ => {
                    let next = self.text[pos..]
                        .find(['[', ']'])
                        .map_or(bytes.len(), |off| pos + off);
                    self.pending.push_str(&self.text[pos..next]);
                    pos = next;
                }
            }
        }
        self.flush();
        let mut answer = self.answer;
        answer.source_count_hint = self.source_count;
        Ok(LenientParse {
            answer,
            warnings: self.warnings,
        })
    }

    fn flush(&mut self) {
        if !self.pending.is_empty() {
            let text = std::mem::take(&mut self.pending);
            self.answer.push(Segment::FreeText(text));
        }
    }

    fn problem(&mut self, error: MarkupError) -> Result<(), MarkupError> {
        if self.strict {
            Err(error)
        } else {
            self.warnings.push(error);
            Ok(())
        }
    }

    fn attempt_quote(&self, open: usize) -> Attempt<'a> {
        let err = |kind| {
            Attempt::Malformed(MarkupError {
                kind,
                position: open,
            })
        };
        let rest = &self.text[open + 1..];
        let close = match rest.find(['[', ']']) {
            Some(off) if rest.as_bytes()[off] == b']' => off,
            Some(_) if rest.contains(']') => return err(MarkupErrorKind::NestedQuote),
            _ => return err(MarkupErrorKind::UnmatchedOpenBracket),
        };
        let inner = &rest[..close];
        let end = open + 1 + close + 1;

        if !inner.starts_with(char::is_whitespace) {
            return err(MarkupErrorKind::MissingIndex);
        }
        let after_ws = inner.trim_start();
        let digits_len = after_ws
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(after_ws.len());
        if digits_len == 0 {
            return err(MarkupErrorKind::MissingIndex);
        }
        let after_digits = &after_ws[digits_len..];
        if !after_digits.is_empty() && !after_digits.starts_with(char::is_whitespace) {
            return err(MarkupErrorKind::MissingIndex);
        }
        let span = after_digits.trim();
        if span.is_empty() {
            return err(MarkupErrorKind::EmptySpan);
        }

        let index = after_ws[..digits_len].parse::<usize>().unwrap_or(usize::MAX);
        let in_range = index >= 1 && self.source_count.is_none_or(|k| index <= k);
        if in_range {
            Attempt::Quote {
                source: index,
                span,
                end,
            }
        } else {
            Attempt::OutOfRange {
                error: MarkupError {
                    kind: MarkupErrorKind::IndexOutOfRange {
                        index,
                        source_count: self.source_count,
                    },
                    position: open,
                },
                span,
                end,
            }
        }
    }
}
