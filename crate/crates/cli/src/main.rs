//! `semqa`: scoring, baselines, conversion and dataset tooling for quoted answers.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use semqa::baselines::BaselineMode;
use semqa::dataset::Origin;
use semqa::prompting::PromptFormat;
use semqa::transform::RenderTarget;
use semqa::SemRecMode;

#[derive(Debug, Parser)]
#[command(name = "semqa", version, about = "Tools for semi-extractive multi-source QA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score system answers against a dataset's references.
    Score(ScoreArgs),
    /// Emit Lead-k / Tail-k answers for every example.
    Baseline(BaselineArgs),
    /// Convert quoted answers to another format.
    Convert(ConvertArgs),
    /// Highlight quotes by source for a terminal or a browser.
    Render(RenderArgs),
    /// Dataset statistics and validation warnings.
    Stats(StatsArgs),
    /// Report quotes that are not verbatim in the cited passage.
    Check(CheckArgs),
    /// Title-disjoint train/validation/test split.
    Split(SplitArgs),
    /// Convert a released copy of the data into the canonical JSONL layout.
    Import(ImportArgs),
    /// Filter candidate triplets into multi-answer questions.
    Mine(MineArgs),
    /// Build few-shot prompts with retrieved exemplars.
    Prompt(PromptArgs),
}

#[derive(Debug, Args)]
struct SeedArg {
    /// Seed for every random choice.
    #[arg(long, env = "SEMQA_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// JSONL with one `{"id", "answer"}` object per line.
    #[arg(long)]
    hypotheses: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Bootstrap resamples for confidence intervals (0 disables).
    #[arg(long, default_value_t = 0)]
    bootstrap: usize,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: ReportFormat,
    /// Reject malformed hypothesis markup instead of repairing it.
    #[arg(long, conflicts_with = "lenient")]
    strict: bool,
    /// Repair malformed hypothesis markup (default).
    #[arg(long)]
    lenient: bool,
    #[arg(long, value_enum, default_value = "reference-bundle")]
    sem_rec_mode: SemRecModeArg,
    /// Score only the examples that have a hypothesis.
    #[arg(long)]
    allow_partial: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SemRecModeArg {
    ReferenceBundle,
    PerAnswer,
}

impl From<SemRecModeArg> for SemRecMode {
    fn from(m: SemRecModeArg) -> Self {
        match m {
            SemRecModeArg::ReferenceBundle => SemRecMode::ReferenceBundle,
            SemRecModeArg::PerAnswer => SemRecMode::PerAnswer,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Lead,
    Tail,
}

impl From<ModeArg> for BaselineMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Lead => BaselineMode::Lead,
            ModeArg::Tail => BaselineMode::Tail,
        }
    }
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Sentences taken from each source.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConvertTarget {
    /// Sentence-level citations.
    QsumS,
    /// Marks removed.
    Plain,
    /// Canonical quoted markup.
    Qsum,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long, value_enum)]
    to: ConvertTarget,
    /// One answer per line, or hypotheses JSONL; standard input when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Repair malformed markup instead of failing.
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TargetArg {
    Ansi,
    Html,
}

impl From<TargetArg> for RenderTarget {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Ansi => RenderTarget::Ansi,
            TargetArg::Html => RenderTarget::Html,
        }
    }
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long, value_enum, default_value = "ansi")]
    target: TargetArg,
    /// Answers (lines or hypotheses JSONL); standard input when omitted.
    #[arg(long, conflicts_with = "dataset")]
    input: Option<PathBuf>,
    /// Render every reference of a dataset instead.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StatsFormat {
    Json,
    Text,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: StatsFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Check these answers against the dataset's passages instead of its references.
    #[arg(long)]
    hypotheses: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0.6)]
    train: f64,
    #[arg(long, default_value_t = 0.07)]
    validation: f64,
    #[arg(long, default_value_t = 0.33)]
    test: f64,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Debug, Args)]
struct ImportArgs {
    #[arg(long)]
    input: PathBuf,
    /// Origin for records that neither state nor imply one.
    #[arg(long, value_enum)]
    default_origin: Option<OriginArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OriginArg {
    Paq,
    Nq,
}

impl From<OriginArg> for Origin {
    fn from(o: OriginArg) -> Self {
        match o {
            OriginArg::Paq => Origin::Paq,
            OriginArg::Nq => Origin::Nq,
        }
    }
}

#[derive(Debug, Args)]
struct MineArgs {
    /// JSONL of `{"question", "passage", "short_answer", "page_id", "qa_score"}`.
    #[arg(long)]
    triplets: PathBuf,
    #[arg(long, value_enum)]
    origin: OriginArg,
    /// JSONL of `{"x", "y", "score"}` semantic answer similarities.
    #[arg(long)]
    pair_scores: Option<PathBuf>,
    /// Keep a type- and size-balanced sample of this many questions.
    #[arg(long)]
    quota: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    min_qa_score: f64,
    #[arg(long, default_value_t = 4)]
    min_answer_words: usize,
    #[arg(long, default_value_t = 0.9)]
    merge_threshold: f64,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PromptFormatArg {
    Qsum,
    QsumS,
}

impl From<PromptFormatArg> for PromptFormat {
    fn from(f: PromptFormatArg) -> Self {
        match f {
            PromptFormatArg::Qsum => PromptFormat::QSum,
            PromptFormatArg::QsumS => PromptFormat::QSumS,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RetrievalArg {
    /// Nearest questions by TF-IDF cosine.
    Tfidf,
    /// Seeded random exemplars.
    Random,
    /// Scores from `--scores`.
    Precomputed,
}

#[derive(Debug, Args)]
struct PromptArgs {
    /// Exemplar pool.
    #[arg(long)]
    train: PathBuf,
    /// Questions to build prompts for.
    #[arg(long)]
    dataset: PathBuf,
    /// Only this query; the prompt is written as plain text.
    #[arg(long)]
    id: Option<String>,
    #[arg(long, default_value_t = 4)]
    shots: usize,
    #[arg(long, value_enum, default_value = "qsum")]
    format: PromptFormatArg,
    #[arg(long, value_enum, default_value = "tfidf")]
    retrieval: RetrievalArg,
    /// JSONL of `{"query", "candidate", "score"}` by example id.
    #[arg(long, required_if_eq("retrieval", "precomputed"))]
    scores: Option<PathBuf>,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    // Usage errors exit with 1; status 2 is reserved for id mismatches.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Score(args) => commands::score(args),
        Command::Baseline(args) => commands::baseline(args),
        Command::Convert(args) => commands::convert(args),
        Command::Render(args) => commands::render(args),
        Command::Stats(args) => commands::stats(args),
        Command::Check(args) => commands::check(args),
        Command::Split(args) => commands::split(args),
        Command::Import(args) => commands::import(args),
        Command::Mine(args) => commands::mine(args),
        Command::Prompt(args) => commands::prompt(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<commands::UnmatchedIds>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
