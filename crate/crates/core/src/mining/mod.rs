//! Filters for assembling multi-answer questions from (question, passage,
//! short answer) triplets.
//!
//! Model outputs (QA likelihoods, semantic answer-similarity scores) are not
//! computed here; they arrive precomputed on the records or in a side file.

mod pipeline;
mod sampling;
mod similarity;
mod tfidf;

use std::collections::HashMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Passage;

pub use pipeline::{mine_nq, mine_paq, MinedQuestion, MinedRecord, MiningConfig};
pub use sampling::balanced_sample;
pub use similarity::{levenshtein, passage_overlap, phi, word_iou, PhiThresholds, SimilarityVerdict, Trigger};
pub use tfidf::{cosine, merge_questions, SparseVector, TfIdfModel};

#[derive(Debug, Error)]
pub enum MiningError {
    #[error("candidate {index} has no qa_score")]
    MissingScore { index: usize },
    #[error("candidate {index} has qa_score {score} outside [0, 1]")]
    InvalidScore { index: usize, score: f64 },
    #[error("quota {quota} exceeds the {available} available items")]
    QuotaTooLarge { quota: usize, available: usize },
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One candidate answer for a question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletRecord {
    pub question: String,
    pub passage: Passage,
    pub short_answer: String,
    pub page_id: String,
    /// Externally computed P(answer | question, passage).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qa_score: Option<f64>,
}

/// Externally computed semantic similarity for answer pairs, looked up
/// irrespective of order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairScores {
    scores: HashMap<(String, String), f64>,
}

#[derive(Deserialize)]
struct PairScoreRecord {
    x: String,
    y: String,
    score: f64,
}

impl PairScores {
    fn key(x: &str, y: &str) -> (String, String) {
        if x <= y {
            (x.to_owned(), y.to_owned())
        } else {
            (y.to_owned(), x.to_owned())
        }
    }

    pub fn insert(&mut self, x: &str, y: &str, score: f64) {
        self.scores.insert(Self::key(x, y), score);
    }

    pub fn get(&self, x: &str, y: &str) -> Option<f64> {
        self.scores.get(&Self::key(x, y)).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Reads `{"x": .., "y": .., "score": ..}` lines.
    pub fn read(reader: impl BufRead) -> Result<Self, MiningError> {
        let mut scores = PairScores::default();
        for record in read_jsonl::<PairScoreRecord>(reader)? {
            scores.insert(&record.x, &record.y, record.score);
        }
        Ok(scores)
    }
}

pub fn read_triplets(reader: impl BufRead) -> Result<Vec<TripletRecord>, MiningError> {
    read_jsonl(reader)
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(reader: impl BufRead) -> Result<Vec<T>, MiningError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| MiningError::Json {
            line: idx + 1,
            source,
        })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DedupConfig {
    pub min_qa_score: f64,
    /// Answers with fewer words are dropped.
    pub min_answer_words: usize,
    pub phi: PhiThresholds,
}

impl Default for DedupConfig {
    fn default() -> Self {
        DedupConfig {
            min_qa_score: 0.5,
            min_answer_words: 4,
            phi: PhiThresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum DropReason {
    LowScore,
    /// The page of an earlier kept candidate.
    SamePage { kept: usize },
    TooShort { words: usize },
    /// The answer appears inside an earlier kept passage.
    InKeptPassage { kept: usize },
    SimilarAnswer { kept: usize, triggered_by: Vec<Trigger> },
}

/// Indices into the candidate list: kept in scan order, dropped with why.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DedupOutcome {
    pub kept: Vec<usize>,
    pub dropped: Vec<(usize, DropReason)>,
}

impl DedupOutcome {
    pub fn kept_records<'a>(&self, candidates: &'a [TripletRecord]) -> Vec<&'a TripletRecord> {
        self.kept.iter().map(|&i| &candidates[i]).collect()
    }
}

fn checked_scores(candidates: &[TripletRecord]) -> Result<Vec<f64>, MiningError> {
    candidates
        .iter()
        .enumerate()
        .map(|(index, c)| match c.qa_score {
            None => Err(MiningError::MissingScore { index }),
            Some(score) if !(0.0..=1.0).contains(&score) => {
                Err(MiningError::InvalidScore { index, score })
            }
            Some(score) => Ok(score),
        })
        .collect()
}

/// Removes duplicate and weak answers for one question.
///
/// Candidates scoring below `min_qa_score` are dropped; the rest are scanned
/// by descending score (input order on ties) and a candidate is dropped when
/// its page was already kept, its answer is too short, its answer occurs
/// (case-insensitively) in a kept passage, or it is `phi`-similar to a kept
/// answer. Rules are checked in that order.
pub fn dedup_answers(
    candidates: &[TripletRecord],
    config: &DedupConfig,
    semantic: Option<&PairScores>,
) -> Result<DedupOutcome, MiningError> {
    let scores = checked_scores(candidates)?;
    let mut outcome = DedupOutcome::default();
    let mut order: Vec<usize> = Vec::new();
    for (i, &score) in scores.iter().enumerate() {
        if score < config.min_qa_score {
            outcome.dropped.push((i, DropReason::LowScore));
        } else {
            order.push(i);
        }
    }
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut kept_passages_lower: Vec<String> = Vec::new();
    for i in order {
        let candidate = &candidates[i];
        let reason = drop_reason(candidate, &outcome.kept, &kept_passages_lower, candidates, config, semantic);
        match reason {
            Some(reason) => outcome.dropped.push((i, reason)),
            None => {
                outcome.kept.push(i);
                kept_passages_lower.push(candidate.passage.text.to_lowercase());
            }
        }
    }
    outcome.dropped.sort_by_key(|(i, _)| *i);
    Ok(outcome)
}

fn drop_reason(
    candidate: &TripletRecord,
    kept: &[usize],
    kept_passages_lower: &[String],
    candidates: &[TripletRecord],
    config: &DedupConfig,
    semantic: Option<&PairScores>,
) -> Option<DropReason> {
    if let Some(&k) = kept.iter().find(|&&k| candidates[k].page_id == candidate.page_id) {
        return Some(DropReason::SamePage { kept: k });
    }
    let words = candidate.short_answer.split_whitespace().count();
    if words < config.min_answer_words {
        return Some(DropReason::TooShort { words });
    }
    let answer_lower = candidate.short_answer.to_lowercase();
    if let Some(pos) = kept_passages_lower.iter().position(|p| p.contains(&answer_lower)) {
        return Some(DropReason::InKeptPassage { kept: kept[pos] });
    }
    kept.iter().find_map(|&k| {
        let other = &candidates[k].short_answer;
        let score = semantic.and_then(|s| s.get(&candidate.short_answer, other));
        let verdict = phi(&candidate.short_answer, other, score, &config.phi);
        verdict.similar.then(|| DropReason::SimilarAnswer {
            kept: k,
            triggered_by: verdict.triggered_by.into_iter().collect(),
        })
    })
}
