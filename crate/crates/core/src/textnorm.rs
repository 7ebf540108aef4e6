//! Normalization, tokenization and sentence segmentation shared by the
//! metrics, baselines and converters.

use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;

static PUNCTUATION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\p{P}").unwrap());

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Abbreviations whose trailing period never ends a sentence.
///
/// Matching is case-sensitive on the token preceding the period, after
/// stripping leading opening punctuation. Changing this list changes
/// baseline outputs.
pub const ABBREVIATIONS: &[&str] = &[
    "Mr", "Mrs", "Ms", "Dr", "Prof", "St", "Jr", "Sr", "Mt", "Ft", "vs", "etc", "No", "no",
    "Inc", "Ltd", "Co", "Corp", "Gen", "Gov", "Sen", "Rep", "Rev", "Hon", "Lt", "Col", "Capt",
    "Sgt", "Cpl", "Jan", "Feb", "Mar", "Apr", "Aug", "Sept", "Sep", "Oct", "Nov", "Dec", "approx",
    "e.g", "i.e", "U.S", "U.K", "U.N", "a.m", "p.m",
];

/// Lowercases, removes every Unicode punctuation character, drops English
/// articles and splits on whitespace.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    let stripped = PUNCTUATION.replace_all(&lowered, "");
    stripped
        .split_whitespace()
        .filter(|t| !ARTICLES.contains(t))
        .map(str::to_owned)
        .collect()
}

/// Splits text into sentences. Terminators stay with the sentence on their
/// left; surrounding whitespace is trimmed and empty sentences dropped.
pub fn split_sentences(text: &str) -> Vec<String> {
    sentence_spans(text)
        .into_iter()
        .map(|r| text[r].to_owned())
        .collect()
}

/// Byte ranges of the sentences returned by [`split_sentences`].
pub fn sentence_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let at_break = chars.peek().is_none_or(|&(_, next)| next.is_whitespace());
        if !at_break || (c == '.' && period_is_guarded(&text[start..i])) {
            continue;
        }
        let end = i + c.len_utf8();
        push_trimmed(text, start..end, &mut spans);
        start = end;
    }
    push_trimmed(text, start..text.len(), &mut spans);
    spans
}

fn push_trimmed(text: &str, range: Range<usize>, spans: &mut Vec<Range<usize>>) {
    let slice = &text[range.clone()];
    let lead = slice.len() - slice.trim_start().len();
    let trail = slice.len() - slice.trim_end().len();
    if lead + trail < slice.len() {
        spans.push(range.start + lead..range.end - trail);
    }
}

/// Whether the period closing `before` belongs to an abbreviation or an
/// initial rather than ending the sentence.
fn period_is_guarded(before: &str) -> bool {
    let token = before
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(|c: char| !c.is_alphanumeric());
    let mut chars = token.chars();
    if let (Some(first), None) = (chars.next(), chars.next()) {
        if first.is_uppercase() {
            return true;
        }
    }
    ABBREVIATIONS.contains(&token)
}
