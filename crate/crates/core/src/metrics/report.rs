use serde::{Deserialize, Serialize};

use super::{bootstrap_ci, rouge_l_quoted, sem_f1, sem_rec, semqa_score, MetricError, SemRecMode};
use crate::dataset::Example;
use crate::markup::QuotedAnswer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleScores {
    pub example_id: String,
    pub rouge_l: f64,
    pub sem_f1: f64,
    pub sem_rec: f64,
    pub semqa: f64,
    pub parse_warnings: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub examples: usize,
    pub rouge_l: f64,
    pub sem_f1: f64,
    pub sem_rec: f64,
    pub semqa: f64,
    pub parse_warnings: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapIntervals {
    pub resamples: usize,
    pub confidence: f64,
    pub seed: u64,
    pub rouge_l: Interval,
    pub sem_f1: Interval,
    pub sem_rec: Interval,
    pub semqa: Interval,
}

/// Per-example and aggregate scores of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub per_example: Vec<ExampleScores>,
    pub aggregate: MetricAggregate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<BootstrapIntervals>,
}

/// Scores one hypothesis against an example's references and short answers.
pub fn score_example(
    example: &Example,
    hypothesis: &QuotedAnswer,
    parse_warnings: usize,
    mode: SemRecMode,
) -> Result<ExampleScores, MetricError> {
    let k = example.source_count();
    let rouge_l = rouge_l_quoted(hypothesis, &example.answers)?;
    let sem_f1 = sem_f1(hypothesis, &example.answers, k)?;
    let sem_rec = sem_rec(hypothesis, &example.short_answers, k, mode)?;
    Ok(ExampleScores {
        example_id: example.id.clone(),
        rouge_l,
        sem_f1,
        sem_rec,
        semqa: semqa_score(sem_f1, rouge_l)?,
        parse_warnings,
    })
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        values.sum::<f64>() / n as f64
    }
}

impl MetricReport {
    /// Builds a report; rows are ordered by example id so the aggregate does
    /// not depend on scoring order.
    pub fn new(mut per_example: Vec<ExampleScores>) -> Self {
        per_example.sort_by(|a, b| a.example_id.cmp(&b.example_id));
        let n = per_example.len();
        let aggregate = MetricAggregate {
            examples: n,
            rouge_l: mean(per_example.iter().map(|s| s.rouge_l), n),
            sem_f1: mean(per_example.iter().map(|s| s.sem_f1), n),
            sem_rec: mean(per_example.iter().map(|s| s.sem_rec), n),
            semqa: mean(per_example.iter().map(|s| s.semqa), n),
            parse_warnings: per_example.iter().map(|s| s.parse_warnings).sum(),
        };
        MetricReport {
            per_example,
            aggregate,
            intervals: None,
        }
    }

    /// Attaches percentile-bootstrap intervals for every metric. All four
    /// metrics use the same seed, so they see the same resamples.
    pub fn with_bootstrap(
        mut self,
        resamples: usize,
        confidence: f64,
        seed: u64,
    ) -> Result<Self, MetricError> {
        let interval = |f: fn(&ExampleScores) -> f64| -> Result<Interval, MetricError> {
            let values: Vec<f64> = self.per_example.iter().map(f).collect();
            let (low, high) = bootstrap_ci(&values, resamples, confidence, seed)?;
            Ok(Interval { low, high })
        };
        let intervals = BootstrapIntervals {
            resamples,
            confidence,
            seed,
            rouge_l: interval(|s| s.rouge_l)?,
            sem_f1: interval(|s| s.sem_f1)?,
            sem_rec: interval(|s| s.sem_rec)?,
            semqa: interval(|s| s.semqa)?,
        };
        self.intervals = Some(intervals);
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per example, two decimals.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["example_id", "rouge_l", "sem_f1", "sem_rec", "semqa", "parse_warnings"])
            .expect("in-memory write");
        for s in &self.per_example {
            writer
                .write_record([
                    s.example_id.clone(),
                    format!("{:.2}", s.rouge_l),
                    format!("{:.2}", s.sem_f1),
                    format!("{:.2}", s.sem_rec),
                    format!("{:.2}", s.semqa),
                    s.parse_warnings.to_string(),
                ])
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}
