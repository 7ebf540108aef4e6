//! End-to-end question mining from scored triplets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{dedup_answers, merge_questions, passage_overlap, DedupConfig, MiningError, PairScores, TripletRecord};
use crate::dataset::{Origin, Passage};
use crate::textnorm::normalize_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    pub dedup: DedupConfig,
    /// Questions with TF-IDF cosine above this are merged.
    pub merge_threshold: f64,
    /// Passages overlapping a kept passage above this ratio are removed (NQ path).
    pub max_passage_overlap: f64,
    pub min_answers: usize,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            dedup: DedupConfig::default(),
            merge_threshold: 0.9,
            max_passage_overlap: 0.4,
            min_answers: 2,
        }
    }
}

/// A multi-answer question ready for answer writing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinedQuestion {
    pub question: String,
    pub origin: Origin,
    pub passages: Vec<Passage>,
    /// Short answer found in each passage, aligned with `passages`.
    pub short_answers: Vec<String>,
    /// Other question phrasings merged into this one.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub merged: Vec<String>,
}

/// A mined question in the dataset layout, minus answers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinedRecord<'a> {
    pub id: &'a str,
    pub question: &'a str,
    pub origin: Origin,
    pub passages: &'a [Passage],
    /// One bundle whose per-source sets hold the mined short answer.
    pub short_answers: [Vec<[&'a str; 1]>; 1],
}

impl MinedQuestion {
    pub fn to_record<'a>(&'a self, id: &'a str) -> MinedRecord<'a> {
        MinedRecord {
            id,
            question: &self.question,
            origin: self.origin,
            passages: &self.passages,
            short_answers: [self.short_answers.iter().map(|s| [s.as_str()]).collect()],
        }
    }
}

fn group_by_question(triplets: &[TripletRecord]) -> BTreeMap<&str, Vec<usize>> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, t) in triplets.iter().enumerate() {
        groups.entry(t.question.as_str()).or_default().push(i);
    }
    groups
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Groups triplets by question, filters duplicate answers, merges
/// near-identical questions and keeps those left with enough answers.
///
/// A merged group is filtered again over the union of its candidates. Its
/// representative phrasing is the member with the highest mean QA score over
/// the kept answers it contributed (lexicographically smallest on ties or
/// when none contributed). Output is sorted by question text.
pub fn mine_paq(
    triplets: &[TripletRecord],
    config: &MiningConfig,
    semantic: Option<&PairScores>,
) -> Result<Vec<MinedQuestion>, MiningError> {
    let groups = group_by_question(triplets);
    let questions: Vec<&str> = groups.keys().copied().collect();
    let members: Vec<&Vec<usize>> = groups.values().collect();

    let mut mined = Vec::new();
    for component in merge_questions(&questions, config.merge_threshold) {
        let pool: Vec<usize> = component.iter().flat_map(|&q| members[q].iter().copied()).collect();
        let candidates: Vec<TripletRecord> = pool.iter().map(|&i| triplets[i].clone()).collect();
        let outcome = dedup_answers(&candidates, &config.dedup, semantic)?;
        if outcome.kept.len() < config.min_answers {
            continue;
        }
        let kept: Vec<&TripletRecord> = outcome.kept_records(&candidates);

        let mut phrasing: Vec<(&str, Option<f64>)> = component
            .iter()
            .map(|&q| {
                let scores: Vec<f64> = kept
                    .iter()
                    .filter(|t| t.question == questions[q])
                    .filter_map(|t| t.qa_score)
                    .collect();
                (questions[q], mean(&scores))
            })
            .collect();
        phrasing.sort_by(|a, b| {
            b.1.unwrap_or(f64::NEG_INFINITY)
                .total_cmp(&a.1.unwrap_or(f64::NEG_INFINITY))
                .then_with(|| a.0.cmp(b.0))
        });
        let question = phrasing[0].0.to_owned();
        let merged = phrasing[1..].iter().map(|(q, _)| q.to_string()).collect();

        mined.push(MinedQuestion {
            question,
            origin: Origin::Paq,
            passages: kept.iter().map(|t| t.passage.clone()).collect(),
            short_answers: kept.iter().map(|t| t.short_answer.clone()).collect(),
            merged,
        });
    }
    mined.sort_by(|a, b| a.question.cmp(&b.question));
    Ok(mined)
}

/// Filters question/passage pairs with annotated short answers.
///
/// Per question: drop pairs scoring below the QA threshold; scanning by
/// descending score, drop passages whose word overlap with a kept passage
/// exceeds `max_passage_overlap`; keep the question if at least
/// `min_answers` distinct short answers remain.
pub fn mine_nq(triplets: &[TripletRecord], config: &MiningConfig) -> Result<Vec<MinedQuestion>, MiningError> {
    let mut mined = Vec::new();
    for (question, indices) in group_by_question(triplets) {
        let mut scored = Vec::new();
        for &i in &indices {
            let score = triplets[i]
                .qa_score
                .ok_or(MiningError::MissingScore { index: i })?;
            if !(0.0..=1.0).contains(&score) {
                return Err(MiningError::InvalidScore { index: i, score });
            }
            if score >= config.dedup.min_qa_score {
                scored.push((i, score));
            }
        }
        scored.sort_by(|a, b| b.1.total_cmp(&a.1));

        let mut kept: Vec<&TripletRecord> = Vec::new();
        for (i, _) in scored {
            let t = &triplets[i];
            let overlapping = kept
                .iter()
                .any(|k| passage_overlap(&k.passage, &t.passage) > config.max_passage_overlap);
            if !overlapping {
                kept.push(t);
            }
        }
        let mut distinct: Vec<Vec<String>> = kept.iter().map(|t| normalize_tokens(&t.short_answer)).collect();
        distinct.sort();
        distinct.dedup();
        if distinct.len() < config.min_answers {
            continue;
        }
        mined.push(MinedQuestion {
            question: question.to_owned(),
            origin: Origin::Nq,
            passages: kept.iter().map(|t| t.passage.clone()).collect(),
            short_answers: kept.iter().map(|t| t.short_answer.clone()).collect(),
            merged: Vec::new(),
        });
    }
    Ok(mined)
}
