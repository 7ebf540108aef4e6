use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use semqa::baselines::lead_tail_baseline;
use semqa::dataset::{
    compute_stats, import_published, load_dataset, question_type, save_dataset, split_dataset, write_dataset,
    DatasetStats, Example, SplitRatios, ValidationReport,
};
use semqa::metrics::score_example;
use semqa::mining::{
    balanced_sample, mine_nq, mine_paq, read_triplets, DedupConfig, MiningConfig, PairScores,
};
use semqa::prompting::{build_prompt, random_scores, retrieve_exemplars, PromptQuery, RetrievalMethod};
use semqa::transform::{check_faithfulness, html_document, render as render_answer, to_sentence_citations, FaithfulnessViolation, RenderTarget};
use semqa::{parse, parse_lenient, strip_marks, MetricReport, ParseMode, QuotedAnswer};

use crate::io::{jsonl, load_examples, open_input, read_hypotheses, read_to_string, report_issues, require_dir, write_output, Hypothesis};
use crate::{
    BaselineArgs, CheckArgs, ConvertArgs, ConvertTarget, ImportArgs, MineArgs, OriginArg, PromptArgs, RenderArgs,
    ReportFormat, RetrievalArg, ScoreArgs, SplitArgs, StatsArgs, StatsFormat,
};

/// Hypothesis and dataset ids that do not line up; exits with status 2.
#[derive(Debug)]
pub struct UnmatchedIds {
    pub unknown: Vec<String>,
    pub missing: Vec<String>,
}

impl fmt::Display for UnmatchedIds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |ids: &[String]| {
            let shown: Vec<&str> = ids.iter().take(20).map(String::as_str).collect();
            let more = ids.len().saturating_sub(shown.len());
            if more > 0 {
                format!("{} (+{more} more)", shown.join(", "))
            } else {
                shown.join(", ")
            }
        };
        let mut parts = Vec::new();
        if !self.unknown.is_empty() {
            parts.push(format!("{} hypothesis id(s) not in the dataset: {}", self.unknown.len(), list(&self.unknown)));
        }
        if !self.missing.is_empty() {
            parts.push(format!("{} example(s) without a hypothesis: {}", self.missing.len(), list(&self.missing)));
        }
        f.write_str(&parts.join("; "))
    }
}

impl std::error::Error for UnmatchedIds {}

pub fn score(args: ScoreArgs) -> Result<()> {
    let examples = load_examples(&args.dataset)?;
    let hypotheses = read_hypotheses(&args.hypotheses)?;

    let mut by_id: BTreeMap<&str, &Hypothesis> = BTreeMap::new();
    for h in &hypotheses {
        if by_id.insert(h.id.as_str(), h).is_some() {
            bail!("{}: duplicate hypothesis id {}", args.hypotheses.display(), h.id);
        }
    }
    let known: BTreeSet<&str> = examples.iter().map(|e| e.id.as_str()).collect();
    let unknown: Vec<String> = by_id.keys().filter(|id| !known.contains(*id)).map(|id| id.to_string()).collect();
    let missing: Vec<String> = if args.allow_partial {
        Vec::new()
    } else {
        examples.iter().filter(|e| !by_id.contains_key(e.id.as_str())).map(|e| e.id.clone()).collect()
    };
    if !unknown.is_empty() || !missing.is_empty() {
        return Err(UnmatchedIds { unknown, missing }.into());
    }

    let mode = args.sem_rec_mode.into();
    let mut rows = Vec::with_capacity(by_id.len());
    for example in &examples {
        let Some(h) = by_id.get(example.id.as_str()) else {
            continue;
        };
        let k = Some(example.source_count());
        let (answer, warnings) = if args.strict {
            let answer = parse(&h.answer, ParseMode::Strict, k).with_context(|| format!("hypothesis {}", h.id))?;
            (answer, 0)
        } else {
            let parsed = parse_lenient(&h.answer, k);
            (parsed.answer, parsed.warnings.len())
        };
        rows.push(score_example(example, &answer, warnings, mode).with_context(|| format!("scoring {}", h.id))?);
    }
    let mut report = MetricReport::new(rows);
    if args.bootstrap > 0 {
        report = report.with_bootstrap(args.bootstrap, args.confidence, args.seed.seed)?;
    }
    let text = match args.format {
        ReportFormat::Json => report.to_json() + "\n",
        ReportFormat::Csv => report.to_csv(),
    };
    write_output(args.out.as_deref(), &text)
}

pub fn baseline(args: BaselineArgs) -> Result<()> {
    let examples = load_examples(&args.dataset)?;
    let k = usize::try_from(args.k)?;
    let rows = examples.iter().map(|e| Hypothesis {
        id: e.id.clone(),
        answer: lead_tail_baseline(e, args.mode.into(), k).to_string(),
    });
    write_output(args.out.as_deref(), &jsonl(rows)?)
}

/// Answers given either as hypotheses JSONL or one markup string per line.
enum AnswerLines {
    Jsonl(Vec<Hypothesis>),
    Plain(Vec<String>),
}

fn read_answer_lines(path: Option<&Path>) -> Result<AnswerLines> {
    let text = read_to_string(path)?;
    let first = text.lines().find(|l| !l.trim().is_empty());
    if first.is_some_and(|l| l.trim_start().starts_with('{')) {
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            rows.push(serde_json::from_str(line).with_context(|| format!("line {}: expected {{\"id\", \"answer\"}}", idx + 1))?);
        }
        Ok(AnswerLines::Jsonl(rows))
    } else {
        Ok(AnswerLines::Plain(text.lines().map(str::to_owned).collect()))
    }
}

fn parse_answer(text: &str, lenient: bool, what: &str) -> Result<QuotedAnswer> {
    if lenient {
        let parsed = parse_lenient(text, None);
        for w in &parsed.warnings {
            eprintln!("warning: {what}: {w}");
        }
        Ok(parsed.answer)
    } else {
        parse(text, ParseMode::Strict, None).with_context(|| what.to_owned())
    }
}

pub fn convert(args: ConvertArgs) -> Result<()> {
    let apply = |text: &str, what: &str| -> Result<String> {
        let answer = parse_answer(text, args.lenient, what)?;
        Ok(match args.to {
            ConvertTarget::QsumS => to_sentence_citations(&answer),
            ConvertTarget::Plain => strip_marks(&answer),
            ConvertTarget::Qsum => answer.to_string(),
        })
    };
    let out = match read_answer_lines(args.input.as_deref())? {
        AnswerLines::Jsonl(rows) => {
            let converted = rows
                .into_iter()
                .map(|h| {
                    let answer = apply(&h.answer, &h.id)?;
                    Ok(Hypothesis { id: h.id, answer })
                })
                .collect::<Result<Vec<_>>>()?;
            jsonl(converted)?
        }
        AnswerLines::Plain(lines) => {
            let mut out = String::new();
            for (idx, line) in lines.iter().enumerate() {
                out.push_str(&apply(line, &format!("line {}", idx + 1))?);
                out.push('\n');
            }
            out
        }
    };
    write_output(args.out.as_deref(), &out)
}

pub fn render(args: RenderArgs) -> Result<()> {
    let items: Vec<(String, QuotedAnswer)> = if let Some(path) = &args.dataset {
        load_examples(path)?
            .into_iter()
            .flat_map(|e| {
                let id = e.id;
                e.answers.into_iter().enumerate().map(move |(j, a)| (format!("{id} #{}", j + 1), a))
            })
            .collect()
    } else {
        match read_answer_lines(args.input.as_deref())? {
            AnswerLines::Jsonl(rows) => rows
                .into_iter()
                .map(|h| Ok((h.id.clone(), parse_answer(&h.answer, true, &h.id)?)))
                .collect::<Result<_>>()?,
            AnswerLines::Plain(lines) => lines
                .iter()
                .enumerate()
                .map(|(i, l)| Ok((format!("line {}", i + 1), parse_answer(l, true, &format!("line {}", i + 1))?)))
                .collect::<Result<_>>()?,
        }
    };
    let out = match args.target.into() {
        RenderTarget::Html => html_document("Quoted answers", &items),
        RenderTarget::Ansi => {
            let mut out = String::new();
            for (label, answer) in &items {
                out.push_str(&format!("{label}\t{}\n", render_answer(answer, RenderTarget::Ansi)));
            }
            out
        }
    };
    write_output(args.out.as_deref(), &out)
}

#[derive(Serialize)]
struct StatsOutput<'a> {
    stats: &'a DatasetStats,
    validation: &'a ValidationReport,
}

pub fn stats(args: StatsArgs) -> Result<()> {
    let loaded = load_dataset(&args.dataset)?;
    let stats = compute_stats(&loaded.examples);
    let out = match args.format {
        StatsFormat::Json => {
            serde_json::to_string_pretty(&StatsOutput {
                stats: &stats,
                validation: &loaded.report,
            })? + "\n"
        }
        StatsFormat::Text => {
            report_issues(&args.dataset, &loaded.report);
            let mut text = stats.to_text_table();
            text.push_str(&format!("{:<28}{:>10}\n", "validation warnings", loaded.report.issues.len()));
            text
        }
    };
    write_output(args.out.as_deref(), &out)
}

#[derive(Serialize)]
struct CheckRow<'a> {
    id: &'a str,
    /// 1-based reference number; absent for hypotheses.
    #[serde(skip_serializing_if = "Option::is_none")]
    answer: Option<usize>,
    #[serde(flatten)]
    violation: FaithfulnessViolation,
}

pub fn check(args: CheckArgs) -> Result<()> {
    let examples = load_examples(&args.dataset)?;
    let mut rows = Vec::new();
    let mut checked = 0;
    match &args.hypotheses {
        None => {
            for e in &examples {
                for (j, answer) in e.answers.iter().enumerate() {
                    checked += 1;
                    for violation in check_faithfulness(answer, &e.passages)? {
                        rows.push(CheckRow { id: &e.id, answer: Some(j + 1), violation });
                    }
                }
            }
        }
        Some(path) => {
            let by_id: HashMap<&str, &Example> = examples.iter().map(|e| (e.id.as_str(), e)).collect();
            let hypotheses = read_hypotheses(path)?;
            let unknown: Vec<String> =
                hypotheses.iter().filter(|h| !by_id.contains_key(h.id.as_str())).map(|h| h.id.clone()).collect();
            if !unknown.is_empty() {
                return Err(UnmatchedIds { unknown, missing: Vec::new() }.into());
            }
            for h in &hypotheses {
                let e = by_id[h.id.as_str()];
                let answer = parse_lenient(&h.answer, Some(e.source_count())).answer;
                checked += 1;
                for violation in check_faithfulness(&answer, &e.passages)? {
                    rows.push(CheckRow { id: &e.id, answer: None, violation });
                }
            }
        }
    }
    eprintln!("{} unfaithful quote(s) in {checked} answer(s)", rows.len());
    write_output(args.out.as_deref(), &jsonl(rows)?)
}

pub fn split(args: SplitArgs) -> Result<()> {
    let examples = load_examples(&args.dataset)?;
    let ratios = SplitRatios {
        train: args.train,
        validation: args.validation,
        test: args.test,
    };
    let splits = split_dataset(&examples, ratios, args.seed.seed)?;
    let dir = require_dir(&args.out_dir)?;
    for (name, part) in [("train", &splits.train), ("validation", &splits.validation), ("test", &splits.test)] {
        save_dataset(dir.join(format!("{name}.jsonl")), part)?;
        eprintln!("{name}: {} examples", part.len());
    }
    Ok(())
}

pub fn import(args: ImportArgs) -> Result<()> {
    let examples = import_published(&args.input, args.default_origin.map(Into::into))?;
    let mut buf = Vec::new();
    write_dataset(&mut buf, &examples)?;
    eprintln!("imported {} examples", examples.len());
    write_output(args.out.as_deref(), &String::from_utf8(buf)?)
}

pub fn mine(args: MineArgs) -> Result<()> {
    let triplets = read_triplets(open_input(Some(&args.triplets))?)?;
    let semantic = match &args.pair_scores {
        Some(path) => Some(PairScores::read(open_input(Some(path))?)?),
        None => None,
    };
    let config = MiningConfig {
        dedup: DedupConfig {
            min_qa_score: args.min_qa_score,
            min_answer_words: args.min_answer_words,
            ..DedupConfig::default()
        },
        merge_threshold: args.merge_threshold,
        ..MiningConfig::default()
    };
    let (mut mined, prefix) = match args.origin {
        OriginArg::Paq => (mine_paq(&triplets, &config, semantic.as_ref())?, "PAQ"),
        OriginArg::Nq => (mine_nq(&triplets, &config)?, "NQ"),
    };
    eprintln!("{} question(s) from {} triplet(s)", mined.len(), triplets.len());
    if let Some(quota) = args.quota {
        let items = mined.into_iter().map(|m| (question_type(&m.question), m.short_answers.len(), m)).collect();
        mined = balanced_sample(items, quota, args.seed.seed)?;
        mined.sort_by(|a, b| a.question.cmp(&b.question));
    }
    let ids: Vec<String> = (1..=mined.len()).map(|i| format!("{prefix}-{i:06}")).collect();
    let rows = mined.iter().zip(&ids).map(|(m, id)| m.to_record(id));
    write_output(args.out.as_deref(), &jsonl(rows)?)
}

#[derive(Deserialize)]
struct ScoreRow {
    query: String,
    candidate: String,
    score: f64,
}

#[derive(Serialize)]
struct PromptRow<'a> {
    id: &'a str,
    prompt: String,
}

pub fn prompt(args: PromptArgs) -> Result<()> {
    let train = load_examples(&args.train)?;
    let queries = load_examples(&args.dataset)?;
    let selected: Vec<&Example> = match &args.id {
        Some(id) => vec![queries
            .iter()
            .find(|e| &e.id == id)
            .with_context(|| format!("no example {id} in {}", args.dataset.display()))?],
        None => queries.iter().collect(),
    };

    let mut precomputed: HashMap<String, HashMap<String, f64>> = HashMap::new();
    if let Some(path) = &args.scores {
        for (idx, line) in read_to_string(Some(path))?.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let row: ScoreRow = serde_json::from_str(line).with_context(|| format!("{}:{}", path.display(), idx + 1))?;
            precomputed.entry(row.query).or_default().insert(row.candidate, row.score);
        }
    }

    let mut prompts = Vec::with_capacity(selected.len());
    for (i, query) in selected.iter().enumerate() {
        let pool: Vec<Example> = train.iter().filter(|e| e.id != query.id).cloned().collect();
        let seed = args.seed.seed.wrapping_add(i as u64);
        let exemplars = match args.retrieval {
            RetrievalArg::Tfidf => retrieve_exemplars(&query.question, &pool, args.shots, RetrievalMethod::Tfidf, None)?,
            RetrievalArg::Random => {
                let scores = random_scores(&pool, seed);
                retrieve_exemplars(&query.question, &pool, args.shots, RetrievalMethod::Precomputed, Some(&scores))?
            }
            RetrievalArg::Precomputed => {
                let scores = precomputed.get(&query.id).with_context(|| format!("no scores for query {}", query.id))?;
                retrieve_exemplars(&query.question, &pool, args.shots, RetrievalMethod::Precomputed, Some(scores))?
            }
        };
        let text = build_prompt(&exemplars, &PromptQuery::from(*query), args.format.into(), seed)?;
        prompts.push(PromptRow { id: &query.id, prompt: text });
    }
    let out = if args.id.is_some() {
        prompts.pop().map(|p| p.prompt).unwrap_or_default()
    } else {
        jsonl(prompts)?
    };
    write_output(args.out.as_deref(), &out)
}
