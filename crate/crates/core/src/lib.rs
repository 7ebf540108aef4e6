//! Tooling for semi-extractive multi-source question answering: the
//! quoted-answer markup, string-matching metrics, extractive baselines,
//! format converters, dataset utilities and dataset-mining filters.

pub mod baselines;
pub mod dataset;
pub mod markup;
pub mod metrics;
pub mod mining;
pub mod prompting;
pub mod textnorm;
pub mod transform;

pub use dataset::{Example, Origin, Passage};
pub use markup::{parse, parse_lenient, psi_k, serialize, strip_marks, ParseMode, QuotedAnswer, Segment};
pub use metrics::{rouge_l, sem_f1, sem_rec, semqa_score, token_f1, MetricReport, SemRecMode, ShortAnswerSets};
pub use textnorm::{normalize_tokens, split_sentences};
