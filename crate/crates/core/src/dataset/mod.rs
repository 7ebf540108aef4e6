//! QuoteSum-style examples stored as JSON Lines.
//!
//! One object per line:
//!
//! ```json
//! {"id": "q1", "question": "...", "origin": "PAQ",
//!  "passages": [{"title": "...", "text": "..."}, ...],
//!  "answers": ["markup answer", ...],
//!  "short_answers": [[["short", ...], ...per source], ...per answer]}
//! ```
//!
//! Answers are parsed in strict mode against the example's passage count.

mod published;
mod split;
mod stats;

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::markup::{parse, serialize, strip_marks, MarkupError, ParseMode, QuotedAnswer};
use crate::metrics::ShortAnswerSets;

pub use published::{import_published, import_published_line};
pub use split::{split_dataset, split_indices, DatasetSplits, SplitRatios};
pub use stats::{compute_stats, question_type, DatasetStats, QuestionType};

/// Word limit writers were given for an answer; exceeding it is a warning.
pub const ANSWER_WORD_LIMIT: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Passage {
    pub title: String,
    pub text: String,
}

impl Passage {
    pub fn new(title: impl Into<String>, text: impl Into<String>) -> Self {
        Passage {
            title: title.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Origin {
    #[serde(rename = "PAQ")]
    Paq,
    #[serde(rename = "NQ")]
    Nq,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Paq => "PAQ",
            Origin::Nq => "NQ",
        })
    }
}

/// A question, its source passages and the reference quoted answers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub id: String,
    pub question: String,
    pub origin: Origin,
    pub passages: Vec<Passage>,
    pub answers: Vec<QuotedAnswer>,
    pub short_answers: ShortAnswerSets,
}

impl Example {
    /// Number of input sources `K`.
    pub fn source_count(&self) -> usize {
        self.passages.len()
    }

    pub fn to_record(&self) -> ExampleRecord {
        ExampleRecord {
            id: self.id.clone(),
            question: self.question.clone(),
            origin: self.origin,
            passages: self.passages.clone(),
            answers: self.answers.iter().map(serialize).collect(),
            short_answers: self.short_answers.clone(),
        }
    }
}

/// The on-disk shape of one line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleRecord {
    pub id: String,
    pub question: String,
    pub origin: Origin,
    pub passages: Vec<Passage>,
    pub answers: Vec<String>,
    pub short_answers: ShortAnswerSets,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: invalid JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: answer {answer}: {source}")]
    Markup {
        line: usize,
        answer: usize,
        #[source]
        source: MarkupError,
    },
    #[error("line {line}: field `{field}`: {detail}")]
    Schema {
        line: usize,
        field: String,
        detail: String,
    },
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    InvalidRatios([f64; 3]),
}

impl DatasetError {
    fn schema(line: usize, field: impl Into<String>, detail: impl Into<String>) -> Self {
        DatasetError::Schema {
            line,
            field: field.into(),
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IssueKind {
    /// Fewer than two passages.
    TooFewPassages { passages: usize },
    /// A reference longer than [`ANSWER_WORD_LIMIT`] words once marks are stripped.
    AnswerTooLong { answer: usize, words: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationIssue {
    pub line: usize,
    pub id: String,
    #[serde(flatten)]
    pub kind: IssueKind,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {} ({}): ", self.line, self.id)?;
        match self.kind {
            IssueKind::TooFewPassages { passages } => write!(f, "only {passages} passage(s)"),
            IssueKind::AnswerTooLong { answer, words } => {
                write!(f, "answer {answer} has {words} words (limit {ANSWER_WORD_LIMIT})")
            }
        }
    }
}

/// Soft invariant violations found while loading.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub examples: usize,
    pub answers: usize,
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedDataset {
    pub examples: Vec<Example>,
    pub report: ValidationReport,
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<LoadedDataset, DatasetError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_owned(),
        source,
    })?;
    read_dataset(BufReader::new(file)).map_err(|e| match e {
        DatasetError::Io { source, .. } => DatasetError::Io {
            path: path.to_owned(),
            source,
        },
        other => other,
    })
}

/// Reads JSONL from any reader. Blank lines are skipped; line numbers are 1-based.
pub fn read_dataset(reader: impl BufRead) -> Result<LoadedDataset, DatasetError> {
    let mut examples = Vec::new();
    let mut report = ValidationReport::default();
    let mut seen_ids = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| DatasetError::Io {
            path: PathBuf::new(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ExampleRecord = serde_json::from_str(&line).map_err(|source| {
            if source.is_data() {
                DatasetError::schema(line_no, "<record>", source.to_string())
            } else {
                DatasetError::Json {
                    line: line_no,
                    source,
                }
            }
        })?;
        let example = example_from_record(record, line_no)?;
        if !seen_ids.insert(example.id.clone()) {
            return Err(DatasetError::schema(
                line_no,
                "id",
                format!("duplicate id {:?}", example.id),
            ));
        }
        validate_soft(&example, line_no, &mut report.issues);
        report.answers += example.answers.len();
        examples.push(example);
    }
    report.examples = examples.len();
    Ok(LoadedDataset { examples, report })
}

/// Checks the hard schema rules and parses the answer markup strictly.
pub fn example_from_record(record: ExampleRecord, line: usize) -> Result<Example, DatasetError> {
    if record.id.trim().is_empty() {
        return Err(DatasetError::schema(line, "id", "must not be empty"));
    }
    if record.passages.is_empty() {
        return Err(DatasetError::schema(line, "passages", "must not be empty"));
    }
    for (i, p) in record.passages.iter().enumerate() {
        if p.text.trim().is_empty() {
            return Err(DatasetError::schema(
                line,
                format!("passages[{i}].text"),
                "must not be empty",
            ));
        }
    }
    if record.answers.is_empty() {
        return Err(DatasetError::schema(line, "answers", "at least one answer is required"));
    }
    let k = record.passages.len();
    let answers = record
        .answers
        .iter()
        .enumerate()
        .map(|(answer, text)| {
            parse(text, ParseMode::Strict, Some(k)).map_err(|source| DatasetError::Markup {
                line,
                answer,
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if record.short_answers.reference_count() != answers.len() {
        return Err(DatasetError::schema(
            line,
            "short_answers",
            format!(
                "has {} entries for {} answers",
                record.short_answers.reference_count(),
                answers.len()
            ),
        ));
    }
    if let Err(e) = record.short_answers.validate(k) {
        return Err(DatasetError::schema(line, "short_answers", e.to_string()));
    }
    Ok(Example {
        id: record.id,
        question: record.question,
        origin: record.origin,
        passages: record.passages,
        answers,
        short_answers: record.short_answers,
    })
}

fn validate_soft(example: &Example, line: usize, issues: &mut Vec<ValidationIssue>) {
    let mut issue = |kind| {
        issues.push(ValidationIssue {
            line,
            id: example.id.clone(),
            kind,
        })
    };
    if example.source_count() < 2 {
        issue(IssueKind::TooFewPassages {
            passages: example.source_count(),
        });
    }
    for (answer, a) in example.answers.iter().enumerate() {
        let words = strip_marks(a).split_whitespace().count();
        if words > ANSWER_WORD_LIMIT {
            issue(IssueKind::AnswerTooLong { answer, words });
        }
    }
}

pub fn write_dataset(mut writer: impl Write, examples: &[Example]) -> io::Result<()> {
    for example in examples {
        serde_json::to_writer(&mut writer, &example.to_record())?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_dataset(path: impl AsRef<Path>, examples: &[Example]) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let io_err = |source| DatasetError::Io {
        path: path.to_owned(),
        source,
    };
    let mut writer = io::BufWriter::new(File::create(path).map_err(io_err)?);
    write_dataset(&mut writer, examples).map_err(io_err)?;
    writer.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markup::MarkupErrorKind;

    fn line(id: &str, answers: &str, short: &str) -> String {
        format!(
            r#"{{"id":"{id}","question":"who sang it?","origin":"PAQ","passages":[{{"title":"A","text":"Bing Crosby sang."}},{{"title":"B","text":"Kelly Clarkson sang."}},{{"title":"C","text":"Nobody else."}}],"answers":{answers},"short_answers":{short}}}"#
        )
    }

    #[test]
    fn loads_two_lines() {
        let data = [
            line("a", r#"["[ 1 Bing Crosby ] and [ 2 Kelly Clarkson ]"]"#, r#"[[["Bing Crosby"],["Kelly Clarkson"],[]]]"#),
            line("b", r#"["x [ 3 Nobody ]","y"]"#, r#"[[[],[],[]],[[],[],[]]]"#),
        ]
        .join("\n");
        let loaded = read_dataset(data.as_bytes()).unwrap();
        assert_eq!(loaded.examples.len(), 2);
        assert_eq!(loaded.report.answers, 3);
        assert!(loaded.report.is_clean());
        assert_eq!(loaded.examples[0].source_count(), 3);
    }

    #[test]
    fn out_of_range_source_is_markup_error() {
        let data = line("a", r#"["[ 5 Bing ]"]"#, r#"[[[],[],[]]]"#);
        match read_dataset(data.as_bytes()).unwrap_err() {
            DatasetError::Markup { line, answer, source } => {
                assert_eq!((line, answer), (1, 0));
                assert!(matches!(
                    source.kind,
                    MarkupErrorKind::IndexOutOfRange { index: 5, source_count: Some(3) }
                ));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn schema_errors() {
        let short_mismatch = line("a", r#"["x"]"#, r#"[[[],[]]]"#);
        assert!(matches!(
            read_dataset(short_mismatch.as_bytes()),
            Err(DatasetError::Schema { ref field, .. }) if field == "short_answers"
        ));
        let missing = r#"{"id":"a","question":"q"}"#;
        assert!(matches!(
            read_dataset(missing.as_bytes()),
            Err(DatasetError::Schema { line: 1, .. })
        ));
        assert!(matches!(
            read_dataset("{not json".as_bytes()),
            Err(DatasetError::Json { line: 1, .. })
        ));
        let dup = [line("a", r#"["x"]"#, r#"[[[],[],[]]]"#), line("a", r#"["x"]"#, r#"[[[],[],[]]]"#)].join("\n");
        assert!(matches!(
            read_dataset(dup.as_bytes()),
            Err(DatasetError::Schema { line: 2, ref field, .. }) if field == "id"
        ));
    }

    #[test]
    fn soft_issues_are_reported() {
        let long = std::iter::repeat_n("word", 101).collect::<Vec<_>>().join(" ");
        let record = format!(
            r#"{{"id":"a","question":"q","origin":"NQ","passages":[{{"title":"A","text":"t"}}],"answers":["{long}"],"short_answers":[[[]]]}}"#
        );
        let loaded = read_dataset(record.as_bytes()).unwrap();
        let kinds: Vec<_> = loaded.report.issues.iter().map(|i| i.kind.clone()).collect();
        assert_eq!(
            kinds,
            [
                IssueKind::TooFewPassages { passages: 1 },
                IssueKind::AnswerTooLong { answer: 0, words: 101 }
            ]
        );
    }

    #[test]
    fn write_then_read_is_fixed_point() {
        let data = line("a", r#"["The song \"[ 1 Bing Crosby ]\" [ 2 Kelly ]"]"#, r#"[[["Bing"],[],[]]]"#);
        let first = read_dataset(data.as_bytes()).unwrap().examples;
        let mut buf = Vec::new();
        write_dataset(&mut buf, &first).unwrap();
        let second = read_dataset(buf.as_slice()).unwrap().examples;
        assert_eq!(first, second);
        let mut again = Vec::new();
        write_dataset(&mut again, &second).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_dataset("/nonexistent/quotesum.jsonl"),
            Err(DatasetError::Io { .. })
        ));
    }
}
