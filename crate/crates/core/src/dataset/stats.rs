use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::{Example, Origin};

/// Coarse question category used for balancing and reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    What,
    Who,
    Where,
    When,
    How,
    Which,
    Why,
    StandFor,
    Other,
}

impl QuestionType {
    pub const ALL: [QuestionType; 9] = [
        QuestionType::What,
        QuestionType::Who,
        QuestionType::Where,
        QuestionType::When,
        QuestionType::How,
        QuestionType::Which,
        QuestionType::Why,
        QuestionType::StandFor,
        QuestionType::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionType::What => "what",
            QuestionType::Who => "who",
            QuestionType::Where => "where",
            QuestionType::When => "when",
            QuestionType::How => "how",
            QuestionType::Which => "which",
            QuestionType::Why => "why",
            QuestionType::StandFor => "stand_for",
            QuestionType::Other => "other",
        }
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `stand for` anywhere wins; otherwise the first word decides.
pub fn question_type(question: &str) -> QuestionType {
    let lowered = question.to_lowercase();
    if lowered.contains("stand for") {
        return QuestionType::StandFor;
    }
    let first = lowered
        .split_whitespace()
        .next()
        .unwrap_or("")
        .trim_matches(|c: char| !c.is_alphanumeric());
    match first {
        "what" => QuestionType::What,
        "who" => QuestionType::Who,
        "where" => QuestionType::Where,
        "when" => QuestionType::When,
        "how" => QuestionType::How,
        "which" => QuestionType::Which,
        "why" => QuestionType::Why,
        _ => QuestionType::Other,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub example_count: usize,
    pub answer_count: usize,
    pub unique_question_count: usize,
    /// Unique questions per origin.
    pub questions_by_origin: BTreeMap<Origin, usize>,
    pub examples_by_origin: BTreeMap<Origin, usize>,
    pub question_types: BTreeMap<QuestionType, usize>,
    pub sources_per_question: BTreeMap<usize, usize>,
    pub references_per_question: BTreeMap<usize, usize>,
    pub max_sources: usize,
}

pub fn compute_stats(examples: &[Example]) -> DatasetStats {
    let mut stats = DatasetStats {
        example_count: examples.len(),
        ..DatasetStats::default()
    };
    let mut seen = HashSet::new();
    for example in examples {
        stats.answer_count += example.answers.len();
        if seen.insert(example.question.trim()) {
            *stats.questions_by_origin.entry(example.origin).or_default() += 1;
        }
        *stats.examples_by_origin.entry(example.origin).or_default() += 1;
        *stats
            .question_types
            .entry(question_type(&example.question))
            .or_default() += 1;
        *stats
            .sources_per_question
            .entry(example.source_count())
            .or_default() += 1;
        *stats
            .references_per_question
            .entry(example.answers.len())
            .or_default() += 1;
        stats.max_sources = stats.max_sources.max(example.source_count());
    }
    stats.unique_question_count = seen.len();
    stats
}

impl DatasetStats {
    /// Human-readable table.
    pub fn to_text_table(&self) -> String {
        let mut out = String::new();
        let mut row = |label: &str, value: String| {
            let _ = writeln!(out, "{label:<28}{value:>10}");
        };
        row("examples", self.example_count.to_string());
        row("answers", self.answer_count.to_string());
        row("unique questions", self.unique_question_count.to_string());
        for (origin, n) in &self.questions_by_origin {
            row(&format!("  questions from {origin}"), n.to_string());
        }
        row("max sources per question", self.max_sources.to_string());
        row("question types", String::new());
        for (qt, n) in &self.question_types {
            row(&format!("  {qt}"), n.to_string());
        }
        row("sources per question", String::new());
        for (k, n) in &self.sources_per_question {
            row(&format!("  {k}"), n.to_string());
        }
        row("references per question", String::new());
        for (k, n) in &self.references_per_question {
            row(&format!("  {k}"), n.to_string());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Passage;
    use crate::markup::{QuotedAnswer, Segment};
    use crate::metrics::ShortAnswerSets;

    #[test]
    fn question_types() {
        assert_eq!(
            question_type("Who is the actress that portrays wonder woman?"),
            QuestionType::Who
        );
        assert_eq!(question_type("what does nasa stand for"), QuestionType::StandFor);
        assert_eq!(question_type("In which cities..."), QuestionType::Other);
        assert_eq!(question_type("  WHEN did it air?  "), QuestionType::When);
        assert_eq!(question_type(""), QuestionType::Other);
        assert_eq!(question_type("Why was the porsche 911 rs built?"), QuestionType::Why);
    }

    fn example(id: &str, question: &str, origin: Origin, k: usize, refs: usize) -> Example {
        Example {
            id: id.into(),
            question: question.into(),
            origin,
            passages: (0..k).map(|i| Passage::new(format!("t{i}"), "x")).collect(),
            answers: vec![QuotedAnswer::new([Segment::free("a")]); refs],
            short_answers: ShortAnswerSets::new(vec![vec![vec![]; k]; refs]),
        }
    }

    #[test]
    fn empty_stats_are_zero() {
        assert_eq!(compute_stats(&[]), DatasetStats::default());
    }

    #[test]
    fn counts_and_histograms() {
        let examples = [
            example("1", "who sang it", Origin::Paq, 2, 3),
            example("2", "who sang it", Origin::Paq, 3, 2),
            example("3", "what is nq", Origin::Nq, 7, 3),
        ];
        let stats = compute_stats(&examples);
        assert_eq!(stats.example_count, 3);
        assert_eq!(stats.answer_count, 8);
        assert_eq!(stats.unique_question_count, 2);
        assert_eq!(stats.questions_by_origin[&Origin::Paq], 1);
        assert_eq!(stats.questions_by_origin[&Origin::Nq], 1);
        assert_eq!(stats.max_sources, 7);
        for hist in [
            stats.sources_per_question.values().sum::<usize>(),
            stats.references_per_question.values().sum(),
            stats.question_types.values().sum(),
        ] {
            assert_eq!(hist, 3);
        }
        let table = stats.to_text_table();
        assert!(table.contains("unique questions"));
        let json = serde_json::to_string(&stats).unwrap();
        assert!(json.contains(r#""questions_by_origin":{"PAQ":1,"NQ":1}"#));
    }
}
