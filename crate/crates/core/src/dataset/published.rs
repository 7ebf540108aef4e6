//! Adapter from the flatter layouts used by released copies of the data.
//!
//! Accepted variants, per record:
//! - id: `id`, `qid` or `example_id` (string or number); falls back to the line number.
//! - question: `question`, `q` or `query`.
//! - origin: `origin`, `source_dataset` or `dataset`; otherwise inferred from an
//!   id containing `paq` or `nq`; otherwise the caller's default.
//! - passages: an array under `passages`/`sources`/`contexts` (objects with
//!   `title`/`text`, or `"Title: text"` strings), or numbered fields
//!   `title1`/`source1`, `title2`/`source2`, ... (`passage{i}`, `text{i}` also work).
//! - answers: an array under `answers`/`summaries`/`quoted_answers`, or
//!   numbered `summary{j}`/`answer{j}`/`quoted_answer{j}` fields.
//! - short answers: nested per answer per source, a single per-source list
//!   shared by every answer, or absent (every set empty).

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use serde_json::{Map, Value};

use super::{example_from_record, DatasetError, Example, ExampleRecord, Origin, Passage};
use crate::metrics::ShortAnswerSets;

/// Reads a released file: JSONL, a JSON array, or CSV (by `.csv` extension,
/// header row naming the fields; cells holding JSON arrays are decoded).
pub fn import_published(path: impl AsRef<Path>, default_origin: Option<Origin>) -> Result<Vec<Example>, DatasetError> {
    let path = path.as_ref();
    let io_err = |source| DatasetError::Io {
        path: path.to_owned(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        return import_csv(file, default_origin);
    }
    let mut reader = BufReader::new(file);
    let mut text = String::new();
    reader.read_to_string(&mut text).map_err(io_err)?;
    if text.trim_start().starts_with('[') {
        let rows: Vec<Value> = serde_json::from_str(&text).map_err(|source| DatasetError::Json { line: 1, source })?;
        return rows
            .iter()
            .enumerate()
            .map(|(i, row)| import_value(row, i + 1, default_origin))
            .collect();
    }
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(idx, line)| import_published_line(line, idx + 1, default_origin))
        .collect()
}

fn import_csv(file: File, default_origin: Option<Origin>) -> Result<Vec<Example>, DatasetError> {
    let mut reader = csv::Reader::from_reader(file);
    let csv_err = |line: usize, e: csv::Error| DatasetError::schema(line, "<csv>", e.to_string());
    let headers = reader.headers().map_err(|e| csv_err(1, e))?.clone();
    let mut examples = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        // Header is line 1.
        let line_no = idx + 2;
        let record = record.map_err(|e| csv_err(line_no, e))?;
        let obj: Map<String, Value> = headers
            .iter()
            .zip(record.iter())
            .map(|(key, cell)| {
                let value = if cell.trim_start().starts_with('[') {
                    serde_json::from_str(cell).unwrap_or_else(|_| Value::String(cell.to_owned()))
                } else {
                    Value::String(cell.to_owned())
                };
                (key.trim().to_owned(), value)
            })
            .collect();
        examples.push(import_value(&Value::Object(obj), line_no, default_origin)?);
    }
    Ok(examples)
}

pub fn import_published_line(
    line: &str,
    line_no: usize,
    default_origin: Option<Origin>,
) -> Result<Example, DatasetError> {
    let value: Value = serde_json::from_str(line).map_err(|source| DatasetError::Json {
        line: line_no,
        source,
    })?;
    import_value(&value, line_no, default_origin)
}

fn import_value(value: &Value, line_no: usize, default_origin: Option<Origin>) -> Result<Example, DatasetError> {
    let obj = value
        .as_object()
        .ok_or_else(|| DatasetError::schema(line_no, "<record>", "expected a JSON object"))?;

    let id = first_of(obj, &["id", "qid", "example_id"])
        .map(|v| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        })
        .unwrap_or_else(|| format!("line-{line_no}"));
    let question = first_of(obj, &["question", "q", "query"])
        .and_then(Value::as_str)
        .ok_or_else(|| DatasetError::schema(line_no, "question", "missing"))?
        .to_owned();
    let origin = origin_of(obj, &id)
        .or(default_origin)
        .ok_or_else(|| DatasetError::schema(line_no, "origin", "missing and not inferable from id"))?;
    let passages = passages_of(obj, line_no)?;
    let answers = strings_of(obj, &["answers", "summaries", "quoted_answers"], &["summary", "answer", "quoted_answer"]);
    let short_answers = short_answers_of(obj, answers.len(), passages.len(), line_no)?;

    example_from_record(
        ExampleRecord {
            id,
            question,
            origin,
            passages,
            answers,
            short_answers,
        },
        line_no,
    )
}

fn first_of<'a>(obj: &'a Map<String, Value>, keys: &[&str]) -> Option<&'a Value> {
    keys.iter().find_map(|k| obj.get(*k)).filter(|v| !v.is_null())
}

fn origin_of(obj: &Map<String, Value>, id: &str) -> Option<Origin> {
    let from_str = |s: &str| match s.to_ascii_lowercase().as_str() {
        "paq" => Some(Origin::Paq),
        "nq" | "ambigqa" | "ambignq" => Some(Origin::Nq),
        _ => None,
    };
    if let Some(s) = first_of(obj, &["origin", "source_dataset", "dataset"]).and_then(Value::as_str) {
        return from_str(s);
    }
    let lowered = id.to_ascii_lowercase();
    if lowered.contains("paq") {
        Some(Origin::Paq)
    } else if lowered.contains("nq") {
        Some(Origin::Nq)
    } else {
        None
    }
}

/// Values of `prefix1`, `prefix2`, ... until the first gap.
fn numbered<'a>(obj: &'a Map<String, Value>, prefixes: &[&str]) -> Vec<&'a Value> {
    prefixes
        .iter()
        .map(|prefix| {
            (1..)
                .map_while(|i| obj.get(&format!("{prefix}{i}")).filter(|v| !is_blank(v)))
                .collect::<Vec<_>>()
        })
        .find(|values| !values.is_empty())
        .unwrap_or_default()
}

fn is_blank(v: &Value) -> bool {
    match v {
        Value::Null => true,
        Value::String(s) => s.trim().is_empty(),
        _ => false,
    }
}

fn passages_of(obj: &Map<String, Value>, line_no: usize) -> Result<Vec<Passage>, DatasetError> {
    if let Some(Value::Array(items)) = first_of(obj, &["passages", "sources", "contexts"]) {
        return items
            .iter()
            .map(|item| match item {
                Value::Object(p) => Ok(Passage::new(
                    p.get("title").and_then(Value::as_str).unwrap_or_default(),
                    p.get("text").and_then(Value::as_str).unwrap_or_default(),
                )),
                Value::String(s) => Ok(match s.split_once(": ") {
                    Some((title, text)) => Passage::new(title, text),
                    None => Passage::new("", s.as_str()),
                }),
                _ => Err(DatasetError::schema(line_no, "passages", "unsupported passage entry")),
            })
            .collect();
    }
    let texts = numbered(obj, &["source", "passage", "text"]);
    Ok(texts
        .into_iter()
        .enumerate()
        .map(|(i, text)| {
            let title = obj
                .get(&format!("title{}", i + 1))
                .and_then(Value::as_str)
                .unwrap_or_default();
            Passage::new(title, text.as_str().unwrap_or_default())
        })
        .collect())
}

fn strings_of(obj: &Map<String, Value>, array_keys: &[&str], prefixes: &[&str]) -> Vec<String> {
    if let Some(Value::Array(items)) = first_of(obj, array_keys) {
        return items.iter().filter_map(Value::as_str).map(str::to_owned).collect();
    }
    numbered(obj, prefixes)
        .into_iter()
        .filter_map(Value::as_str)
        .map(str::to_owned)
        .collect()
}

fn string_list(v: &Value) -> Option<Vec<String>> {
    match v {
        Value::String(s) => Some(vec![s.clone()]),
        Value::Array(items) => items.iter().map(|i| i.as_str().map(str::to_owned)).collect(),
        _ => None,
    }
}

fn short_answers_of(
    obj: &Map<String, Value>,
    answers: usize,
    k: usize,
    line_no: usize,
) -> Result<ShortAnswerSets, DatasetError> {
    let bad = || DatasetError::schema(line_no, "short_answers", "unsupported layout");
    let Some(value) = first_of(obj, &["short_answers", "short_answer_sets"]) else {
        return Ok(ShortAnswerSets::new(vec![vec![Vec::new(); k]; answers]));
    };
    let Value::Array(outer) = value else {
        return Err(bad());
    };
    // Per-source list of strings or string lists, shared by every answer.
    let per_source: Option<Vec<Vec<String>>> = outer.iter().map(string_list).collect();
    if let Some(per_source) = per_source {
        if per_source.len() == k {
            return Ok(ShortAnswerSets::new(vec![per_source; answers]));
        }
    }
    let nested: Option<Vec<Vec<Vec<String>>>> = outer
        .iter()
        .map(|r| r.as_array()?.iter().map(string_list).collect())
        .collect();
    nested.map(ShortAnswerSets::new).ok_or_else(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbered_fields() {
        let line = r#"{"qid":"paq-17","q":"who sang it?","title1":"A","source1":"Bing Crosby sang.","title2":"B","source2":"Kelly Clarkson sang.","source3":"","summary1":"[ 1 Bing Crosby ] and [ 2 Kelly Clarkson ]","summary2":"[ 2 Kelly Clarkson ]"}"#;
        let example = import_published_line(line, 1, None).unwrap();
        assert_eq!(example.id, "paq-17");
        assert_eq!(example.origin, Origin::Paq);
        assert_eq!(example.source_count(), 2);
        assert_eq!(example.answers.len(), 2);
        assert_eq!(example.short_answers.per_reference, vec![vec![Vec::<String>::new(); 2]; 2]);
    }

    #[test]
    fn array_fields_and_shared_short_answers() {
        let line = r#"{"id":7,"question":"q","origin":"NQ","sources":["A: one.","B: two."],"answers":["[ 1 one ]"],"short_answers":[["one"],"two"]}"#;
        let example = import_published_line(line, 3, None).unwrap();
        assert_eq!(example.id, "7");
        assert_eq!(example.passages[1], Passage::new("B", "two."));
        assert_eq!(
            example.short_answers.per_reference,
            vec![vec![vec!["one".to_string()], vec!["two".to_string()]]]
        );
    }

    #[test]
    fn unknown_origin_is_schema_error() {
        let line = r#"{"id":"x","question":"q","sources":["A: one.","B: two."],"answers":["a"]}"#;
        assert!(matches!(
            import_published_line(line, 2, None),
            Err(DatasetError::Schema { ref field, .. }) if field == "origin"
        ));
        assert_eq!(import_published_line(line, 2, Some(Origin::Nq)).unwrap().origin, Origin::Nq);
    }

    #[test]
    fn csv_and_json_array_files() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("release.csv");
        std::fs::write(
            &csv_path,
            "qid,question,title1,source1,title2,source2,summary1\n\
             paq_1,who,A,Alice ran.,B,Bob sat.,\"[ 1 Alice ran ] and [ 2 Bob sat ] .\"\n",
        )
        .unwrap();
        let examples = import_published(&csv_path, None).unwrap();
        assert_eq!(examples.len(), 1);
        assert_eq!(examples[0].origin, Origin::Paq);
        assert_eq!(examples[0].passages[1], Passage::new("B", "Bob sat."));

        let json_path = dir.path().join("release.json");
        std::fs::write(
            &json_path,
            r#"[{"id":"nq-2","question":"q","sources":["A: one.","B: two."],"answers":["[ 2 two ]"]}]"#,
        )
        .unwrap();
        let examples = import_published(&json_path, None).unwrap();
        assert_eq!(examples[0].origin, Origin::Nq);
        assert_eq!(examples[0].short_answers.per_reference, vec![vec![Vec::<String>::new(); 2]]);
    }
}
