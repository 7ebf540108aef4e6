//! Few-shot prompt assembly with nearest-neighbor exemplars.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Example, Passage};
use crate::mining::{cosine, TfIdfModel};
use crate::transform::to_sentence_citations;

pub const QSUM_HEADER: &str = "Answer the question by summarizing the given sources while explicitly \
copying spans from the sources. When copying a span, use brackets and the respective source number to \
indicate that this span was copied. Use explicit copying as much as possible and for all factual \
statements, while preserving fluency. Make sure to use all relevant sources and properly quote them. \
Here are some examples:";

pub const QSUM_S_HEADER: &str = "Instruction: Write a high-quality answer for the given question using \
only the provided search results and cite them properly using [1][2][3].";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("requested {requested} exemplars but the pool has {available}")]
    NTooLarge { requested: usize, available: usize },
    #[error("precomputed retrieval needs a score for every training example (missing {id})")]
    MissingScores { id: String },
    #[error("exemplar {id} has no reference answers")]
    NoReferences { id: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum PromptFormat {
    /// Span-level quotes.
    #[default]
    #[serde(rename = "qsum")]
    QSum,
    /// Sentence-level citations.
    #[serde(rename = "qsum-s")]
    QSumS,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetrievalMethod {
    Tfidf,
    /// Scores keyed by training example id, e.g. from an embedding model.
    Precomputed,
}

/// The part of an example a prompt may show for the query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptQuery {
    pub question: String,
    pub passages: Vec<Passage>,
}

impl From<&Example> for PromptQuery {
    fn from(example: &Example) -> Self {
        PromptQuery {
            question: example.question.clone(),
            passages: example.passages.clone(),
        }
    }
}

/// Picks the `n` training examples most similar to `query`.
///
/// Candidates are ranked by descending similarity with ties broken by
/// question text, and the top `n` are returned least similar first so the
/// closest exemplar sits next to the query.
pub fn retrieve_exemplars<'a>(
    query: &str,
    train: &'a [Example],
    n: usize,
    method: RetrievalMethod,
    scores: Option<&HashMap<String, f64>>,
) -> Result<Vec<&'a Example>, PromptError> {
    if n > train.len() {
        return Err(PromptError::NTooLarge {
            requested: n,
            available: train.len(),
        });
    }
    let similarity: Vec<f64> = match method {
        RetrievalMethod::Tfidf => {
            let mut docs: Vec<&str> = train.iter().map(|e| e.question.as_str()).collect();
            docs.push(query);
            let model = TfIdfModel::fit(&docs);
            let q = model.transform(query);
            train.iter().map(|e| cosine(&q, &model.transform(&e.question))).collect()
        }
        RetrievalMethod::Precomputed => train
            .iter()
            .map(|e| {
                scores.and_then(|s| s.get(&e.id).copied()).ok_or_else(|| PromptError::MissingScores {
                    id: e.id.clone(),
                })
            })
            .collect::<Result<_, _>>()?,
    };
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.sort_by(|&a, &b| {
        similarity[b]
            .total_cmp(&similarity[a])
            .then_with(|| train[a].question.cmp(&train[b].question))
    });
    order.truncate(n);
    order.reverse();
    Ok(order.into_iter().map(|i| &train[i]).collect())
}

/// Uniform scores for the random-exemplar condition.
pub fn random_scores(train: &[Example], seed: u64) -> HashMap<String, f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    train.iter().map(|e| (e.id.clone(), rng.random::<f64>())).collect()
}

fn push_sources(out: &mut String, question: &str, passages: &[Passage]) {
    let _ = writeln!(out, "Question: {question}");
    for (i, p) in passages.iter().enumerate() {
        let _ = writeln!(out, " [{}] {}: {}", i + 1, p.title, p.text);
    }
}

/// Renders the header, one block per exemplar and the open query block.
///
/// Each exemplar shows one of its references, chosen with the seeded RNG.
pub fn build_prompt(
    exemplars: &[&Example],
    query: &PromptQuery,
    format: PromptFormat,
    seed: u64,
) -> Result<String, PromptError> {
    let (header, label) = match format {
        PromptFormat::QSum => (QSUM_HEADER, "Quoted summary:"),
        PromptFormat::QSumS => (QSUM_S_HEADER, "Answer:"),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for example in exemplars {
        if example.answers.is_empty() {
            return Err(PromptError::NoReferences { id: example.id.clone() });
        }
        let reference = &example.answers[rng.random_range(0..example.answers.len())];
        let answer = match format {
            PromptFormat::QSum => reference.to_string(),
            PromptFormat::QSumS => to_sentence_citations(reference),
        };
        push_sources(&mut out, &example.question, &example.passages);
        let _ = writeln!(out, "{label} {answer}");
        out.push('\n');
    }
    push_sources(&mut out, &query.question, &query.passages);
    out.push_str(label);
    out.push('\n');
    Ok(out)
}
