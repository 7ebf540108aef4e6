//! String-matching answer metrics.
//!
//! - **ROUGE-L** (fluency): LCS F-measure on attribution-stripped text, max
//!   over references.
//! - **Sem-F1** (preciseness): per-source token F1 of quoted spans, max over
//!   references per source, averaged over sources.
//! - **Sem-Rec** (comprehensiveness): per-source token recall of reference
//!   short answers inside the quoted spans.
//! - **SEMQA**: geometric mean of Sem-F1 and ROUGE-L.
//!
//! All scores are percentages in `[0, 100]`. Tokens come from
//! [`normalize_tokens`]; there is no stemming.
//!
//! A source that neither the hypothesis nor a reference quotes counts as
//! agreement (F1 = 1). Writers may legitimately leave irrelevant sources
//! unused, so abstaining from the same source is not penalised.

mod bootstrap;
mod report;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::markup::{psi_k, strip_marks, QuotedAnswer};
use crate::textnorm::normalize_tokens;

pub use bootstrap::bootstrap_ci;
pub use report::{score_example, ExampleScores, Interval, MetricAggregate, MetricReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("at least one reference is required")]
    EmptyReferenceList,
    #[error("number of sources must be positive")]
    NonpositiveK,
    #[error("short-answer sets must cover at least one reference")]
    EmptyShortAnswerSets,
    #[error("short-answer sets for reference {reference} have {found} sources, expected {expected}")]
    ShortAnswerShape {
        reference: usize,
        found: usize,
        expected: usize,
    },
    #[error("score {0} is outside [0, 100]")]
    OutOfRangeInput(f64),
    #[error("cannot bootstrap an empty sample")]
    EmptyValues,
    #[error("resample count must be at least 1")]
    NoResamples,
    #[error("confidence {0} must lie strictly between 0 and 1")]
    InvalidConfidence(f64),
}

/// Short answers per reference, per source: `per_reference[r][k - 1]` is the
/// set of short answers for source `k` covered by reference `r`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ShortAnswerSets {
    pub per_reference: Vec<Vec<Vec<String>>>,
}

impl ShortAnswerSets {
    pub fn new(per_reference: Vec<Vec<Vec<String>>>) -> Self {
        ShortAnswerSets { per_reference }
    }

    pub fn reference_count(&self) -> usize {
        self.per_reference.len()
    }

    /// Checks there is at least one reference and each covers `k` sources.
    pub fn validate(&self, k: usize) -> Result<(), MetricError> {
        if self.per_reference.is_empty() {
            return Err(MetricError::EmptyShortAnswerSets);
        }
        for (reference, sources) in self.per_reference.iter().enumerate() {
            if sources.len() != k {
                return Err(MetricError::ShortAnswerShape {
                    reference,
                    found: sources.len(),
                    expected: k,
                });
            }
        }
        Ok(())
    }
}

/// How Sem-Rec takes its maximum within a source.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SemRecMode {
    /// All short answers a reference covers for a source form one token
    /// bundle; max over references.
    #[default]
    ReferenceBundle,
    /// Max over individual short answers pooled from every reference.
    PerAnswer,
}

/// Length of the longest common subsequence.
pub fn lcs_length<T: PartialEq>(x: &[T], y: &[T]) -> usize {
    if x.is_empty() || y.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; y.len() + 1];
    let mut curr = vec![0usize; y.len() + 1];
    for xi in x {
        for (j, yj) in y.iter().enumerate() {
            curr[j + 1] = if xi == yj {
                prev[j] + 1
            } else {
                curr[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[y.len()]
}

fn f_measure(overlap: usize, predicted: usize, gold: usize) -> f64 {
    if predicted == 0 || gold == 0 || overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / predicted as f64;
    let r = overlap as f64 / gold as f64;
    (2.0 * p * r / (p + r)).min(1.0)
}

fn rouge_l_tokens(hyp: &[String], reference: &[String]) -> f64 {
    if hyp.is_empty() && reference.is_empty() {
        return 1.0;
    }
    f_measure(lcs_length(hyp, reference), hyp.len(), reference.len())
}

/// ROUGE-L F-measure in percent, max over references.
pub fn rouge_l<S: AsRef<str>>(hypothesis: &str, references: &[S]) -> Result<f64, MetricError> {
    if references.is_empty() {
        return Err(MetricError::EmptyReferenceList);
    }
    let hyp = normalize_tokens(hypothesis);
    let best = references
        .iter()
        .map(|r| rouge_l_tokens(&hyp, &normalize_tokens(r.as_ref())))
        .fold(0.0, f64::max);
    Ok(100.0 * best)
}

fn multiset_overlap(a: &[String], b: &[String]) -> usize {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in b {
        *counts.entry(t).or_default() += 1;
    }
    a.iter()
        .filter(|t| match counts.get_mut(t.as_str()) {
            Some(n) if *n > 0 => {
                *n -= 1;
                true
            }
            _ => false,
        })
        .count()
}

/// SQuAD-style token F1 as a fraction. Both empty scores 1.
pub fn token_f1(predicted: &[String], gold: &[String]) -> f64 {
    if predicted.is_empty() && gold.is_empty() {
        return 1.0;
    }
    f_measure(multiset_overlap(predicted, gold), predicted.len(), gold.len())
}

/// Token recall of `gold` inside `predicted`; empty gold scores 1.
pub fn token_recall(gold: &[String], predicted: &[String]) -> f64 {
    if gold.is_empty() {
        return 1.0;
    }
    multiset_overlap(gold, predicted) as f64 / gold.len() as f64
}

/// Sem-F1 in percent over sources `1..=k`.
pub fn sem_f1(
    hypothesis: &QuotedAnswer,
    references: &[QuotedAnswer],
    k: usize,
) -> Result<f64, MetricError> {
    if k == 0 {
        return Err(MetricError::NonpositiveK);
    }
    if references.is_empty() {
        return Err(MetricError::EmptyReferenceList);
    }
    let total: f64 = (1..=k)
        .map(|source| {
            let hyp = normalize_tokens(&psi_k(hypothesis, source));
            references
                .iter()
                .map(|r| token_f1(&hyp, &normalize_tokens(&psi_k(r, source))))
                .fold(0.0, f64::max)
        })
        .sum();
    Ok(100.0 * total / k as f64)
}

/// Sem-Rec in percent over sources `1..=k`.
pub fn sem_rec(
    hypothesis: &QuotedAnswer,
    short_answers: &ShortAnswerSets,
    k: usize,
    mode: SemRecMode,
) -> Result<f64, MetricError> {
    if k == 0 {
        return Err(MetricError::NonpositiveK);
    }
    short_answers.validate(k)?;
    let total: f64 = (1..=k)
        .map(|source| {
            let hyp = normalize_tokens(&psi_k(hypothesis, source));
            let per_source = short_answers.per_reference.iter().map(|r| &r[source - 1]);
            match mode {
                SemRecMode::ReferenceBundle => per_source
                    .map(|answers| token_recall(&normalize_tokens(&answers.join(" ")), &hyp))
                    .fold(0.0, f64::max),
                SemRecMode::PerAnswer => {
                    let mut answers = per_source.flatten().peekable();
                    if answers.peek().is_none() {
                        return 1.0;
                    }
                    answers
                        .map(|a| token_recall(&normalize_tokens(a), &hyp))
                        .fold(0.0, f64::max)
                }
            }
        })
        .sum();
    Ok(100.0 * total / k as f64)
}

/// Geometric mean of Sem-F1 and ROUGE-L, both in percent.
pub fn semqa_score(sem_f1: f64, rouge_l: f64) -> Result<f64, MetricError> {
    for value in [sem_f1, rouge_l] {
        if !(0.0..=100.0).contains(&value) {
            return Err(MetricError::OutOfRangeInput(value));
        }
    }
    Ok((sem_f1 * rouge_l).sqrt())
}

/// ROUGE-L of a quoted hypothesis against quoted references, marks stripped.
pub fn rouge_l_quoted(
    hypothesis: &QuotedAnswer,
    references: &[QuotedAnswer],
) -> Result<f64, MetricError> {
    let refs: Vec<String> = references.iter().map(strip_marks).collect();
    rouge_l(&strip_marks(hypothesis), &refs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markup::{parse, ParseMode, Segment};

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    fn q(text: &str) -> QuotedAnswer {
        parse(text, ParseMode::Strict, None).unwrap()
    }

    #[test]
    fn lcs_examples() {
        assert_eq!(lcs_length(&toks("a b c"), &toks("a b c")), 3);
        assert_eq!(lcs_length(&toks("a b c"), &toks("d e")), 0);
        // Exhaustive enumeration over the 16 subsequences of the first list gives 3.
        assert_eq!(lcs_length(&toks("a c b d"), &toks("a b c d")), 3);
        assert_eq!(lcs_length::<String>(&[], &toks("a")), 0);
    }

    #[test]
    fn rouge_examples() {
        assert_eq!(rouge_l("Bing Crosby sang", &["Bing Crosby sang"]).unwrap(), 100.0);
        assert_eq!(rouge_l("the cat sat", &["the cat ate"]).unwrap(), 50.0);
        assert_eq!(rouge_l("", &["nonempty"]).unwrap(), 0.0);
        assert_eq!(rouge_l("", &["the"]).unwrap(), 100.0);
        assert_eq!(
            rouge_l::<&str>("x", &[]).unwrap_err(),
            MetricError::EmptyReferenceList
        );
    }

    #[test]
    fn rouge_takes_best_reference() {
        let score = rouge_l("cat sat", &["dog ran", "cat sat"]).unwrap();
        assert_eq!(score, 100.0);
    }

    #[test]
    fn token_f1_examples() {
        let f1 = token_f1(&toks("bing crosby"), &toks("bing crosby 1943"));
        assert!((f1 - 0.8).abs() < 1e-12);
        assert_eq!(token_f1(&[], &[]), 1.0);
        assert_eq!(token_f1(&toks("x"), &toks("y")), 0.0);
        assert_eq!(token_f1(&toks("x"), &[]), 0.0);
    }

    #[test]
    fn token_f1_counts_multiplicity() {
        // overlap is min(2,1) = 1 for "a": P = 1/2, R = 1
        let f1 = token_f1(&toks("x x"), &toks("x"));
        assert!((f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sem_f1_examples() {
        let a = q("by [ 1 Bing Crosby ] in [ 2 1943 ]");
        assert_eq!(sem_f1(&a, std::slice::from_ref(&a), 2).unwrap(), 100.0);

        let hyp = q("by [ 1 Bing Crosby ]");
        let reference = q("by [ 1 Bing Crosby 1943 ]");
        let score = sem_f1(&hyp, std::slice::from_ref(&reference), 2).unwrap();
        assert!((score - 90.0).abs() < 1e-9);

        let wrong_source = q("by [ 2 Bing Crosby 1943 ]");
        let score = sem_f1(&wrong_source, &[reference], 2).unwrap();
        assert_eq!(score, 0.0);
    }

    #[test]
    fn sem_f1_errors() {
        let a = q("[ 1 x ]");
        assert_eq!(sem_f1(&a, &[], 1).unwrap_err(), MetricError::EmptyReferenceList);
        assert_eq!(sem_f1(&a, std::slice::from_ref(&a), 0).unwrap_err(), MetricError::NonpositiveK);
    }

    fn sets(v: &[&[&[&str]]]) -> ShortAnswerSets {
        ShortAnswerSets::new(
            v.iter()
                .map(|r| {
                    r.iter()
                        .map(|s| s.iter().map(|x| x.to_string()).collect())
                        .collect()
                })
                .collect(),
        )
    }

    #[test]
    fn sem_rec_examples() {
        let hyp = q("It was [ 1 released in 1943 ]");
        let short = sets(&[&[&["1943"]]]);
        assert_eq!(sem_rec(&hyp, &short, 1, SemRecMode::default()).unwrap(), 100.0);

        let hyp = q("[ 1 Bing Crosby ] and nothing else");
        let short = sets(&[&[&["Bing Crosby"], &["Kelly Clarkson"]]]);
        assert_eq!(sem_rec(&hyp, &short, 2, SemRecMode::default()).unwrap(), 50.0);

        let a = q("[ 1 Bing Crosby ] and [ 2 Kelly Clarkson ]");
        assert_eq!(sem_rec(&a, &short, 2, SemRecMode::default()).unwrap(), 100.0);
    }

    #[test]
    fn sem_rec_modes_differ_on_partial_bundles() {
        // One reference needs both answers; per-answer credit takes the best single one.
        let hyp = q("[ 1 Bing Crosby ]");
        let short = sets(&[&[&["Bing Crosby", "Kelly Clarkson"]]]);
        let bundle = sem_rec(&hyp, &short, 1, SemRecMode::ReferenceBundle).unwrap();
        let per_answer = sem_rec(&hyp, &short, 1, SemRecMode::PerAnswer).unwrap();
        assert!((bundle - 50.0).abs() < 1e-9);
        assert_eq!(per_answer, 100.0);
    }

    #[test]
    fn sem_rec_errors() {
        let hyp = q("x");
        assert_eq!(
            sem_rec(&hyp, &ShortAnswerSets::default(), 1, SemRecMode::default()).unwrap_err(),
            MetricError::EmptyShortAnswerSets
        );
        let short = sets(&[&[&["a"]]]);
        assert!(matches!(
            sem_rec(&hyp, &short, 2, SemRecMode::default()),
            Err(MetricError::ShortAnswerShape { .. })
        ));
        assert_eq!(
            sem_rec(&hyp, &short, 0, SemRecMode::default()).unwrap_err(),
            MetricError::NonpositiveK
        );
    }

    #[test]
    fn semqa_examples() {
        assert_eq!(semqa_score(100.0, 100.0).unwrap(), 100.0);
        assert_eq!(semqa_score(0.0, 80.0).unwrap(), 0.0);
        assert!((semqa_score(84.20, 73.36).unwrap() - 78.59).abs() < 0.01);
        assert!(matches!(
            semqa_score(100.5, 1.0),
            Err(MetricError::OutOfRangeInput(_))
        ));
    }

    #[test]
    fn rouge_on_quoted_answers_ignores_marks() {
        let hyp = QuotedAnswer::new([Segment::free("by "), Segment::quote(2, "Bing Crosby")]);
        let reference = q("by [ 1 Bing Crosby ]");
        assert_eq!(rouge_l_quoted(&hyp, &[reference]).unwrap(), 100.0);
    }
}
