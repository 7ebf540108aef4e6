use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use semqa::dataset::{load_dataset, Example, ValidationReport};

/// One system output line: `{"id": .., "answer": ..}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hypothesis {
    pub id: String,
    pub answer: String,
}

pub fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => {
            Box::new(BufReader::new(File::open(p).with_context(|| format!("opening {}", p.display()))?))
        }
        _ => Box::new(BufReader::new(io::stdin())),
    })
}

pub fn read_to_string(path: Option<&Path>) -> Result<String> {
    let mut text = String::new();
    open_input(path)?.read_to_string(&mut text)?;
    Ok(text)
}

/// Writes `contents` to `path`, or to standard output when absent.
pub fn write_output(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) if p != Path::new("-") => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
            }
            fs::write(p, contents).with_context(|| format!("writing {}", p.display()))
        }
        _ => {
            let mut out = io::stdout().lock();
            out.write_all(contents.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn jsonl<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(&row)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn read_hypotheses(path: &Path) -> Result<Vec<Hypothesis>> {
    let reader = open_input(Some(path))?;
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Hypothesis = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}: expected {{\"id\", \"answer\"}}", path.display(), idx + 1))?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn load_examples(path: &Path) -> Result<Vec<Example>> {
    let loaded = load_dataset(path)?;
    report_issues(path, &loaded.report);
    Ok(loaded.examples)
}

pub fn report_issues(path: &Path, report: &ValidationReport) {
    for issue in &report.issues {
        eprintln!("warning: {}: {issue}", path.display());
    }
}

pub fn require_dir(path: &Path) -> Result<PathBuf> {
    if path.exists() && !path.is_dir() {
        bail!("{} exists and is not a directory", path.display());
    }
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(path.to_owned())
}
