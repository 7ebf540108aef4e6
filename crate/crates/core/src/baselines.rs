//! Lead-k / Tail-k extractive baselines: quote the first or last `k`
//! sentences of every source and concatenate them.

use serde::{Deserialize, Serialize};

use crate::dataset::Example;
use crate::markup::{QuotedAnswer, Segment};
use crate::textnorm::split_sentences;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMode {
    Lead,
    Tail,
}

/// One quote per source holding its first (or last) `k` sentences, sources
/// in passage order, separated by a single space.
///
/// Square brackets inside passage text become parentheses so the result
/// stays valid markup.
pub fn lead_tail_baseline(example: &Example, mode: BaselineMode, k: usize) -> QuotedAnswer {
    let mut answer = QuotedAnswer::default().with_source_count(example.source_count());
    for (i, passage) in example.passages.iter().enumerate() {
        let sentences = split_sentences(&passage.text);
        let take = k.min(sentences.len());
        let chosen = match mode {
            BaselineMode::Lead => &sentences[..take],
            BaselineMode::Tail => &sentences[sentences.len() - take..],
        };
        let text = chosen.join(" ").replace('[', "(").replace(']', ")");
        if text.is_empty() {
            continue;
        }
        if !answer.is_empty() {
            answer.push(Segment::free(" "));
        }
        answer.push(Segment::quote(i + 1, text));
    }
    answer
}
