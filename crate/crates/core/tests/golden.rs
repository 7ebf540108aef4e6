//! Byte-exact checks against transcribed prompt tables.

use semqa::dataset::{Example, Origin, Passage};
use semqa::metrics::ShortAnswerSets;
use semqa::prompting::{build_prompt, PromptFormat, PromptQuery};
use semqa::transform::{check_faithfulness, to_sentence_citations};
use semqa::{parse, ParseMode};

const QSUM_ANSWERS: &str = include_str!("data/appd_qsum.txt");
const QSUM_S_ANSWERS: &str = include_str!("data/appd_qsum_s.txt");
const QSUM_PROMPT: &str = include_str!("data/appd_prompt_qsum.txt");
const QSUM_S_PROMPT: &str = include_str!("data/appd_prompt_qsum_s.txt");

#[test]
fn sentence_citation_conversion_matches_table() {
    let quoted: Vec<&str> = QSUM_ANSWERS.lines().collect();
    let cited: Vec<&str> = QSUM_S_ANSWERS.lines().collect();
    assert_eq!(quoted.len(), 2);
    assert_eq!(quoted.len(), cited.len());
    for (q, s) in quoted.iter().zip(&cited) {
        let answer = parse(q, ParseMode::Strict, None).unwrap();
        assert_eq!(to_sentence_citations(&answer), *s);
    }
}

struct Block {
    question: String,
    passages: Vec<Passage>,
    answer: Option<String>,
}

/// Splits a prompt into (header, blocks). Passage lines are ` [i] title: text`
/// with the title ending at the first `: `.
fn parse_prompt(prompt: &str, label: &str) -> (String, Vec<Block>) {
    let mut lines = prompt.lines();
    let header = lines.next().unwrap().to_owned();
    let mut blocks = Vec::new();
    let mut current: Option<Block> = None;
    for line in lines {
        if let Some(q) = line.strip_prefix("Question: ") {
            current = Some(Block {
                question: q.to_owned(),
                passages: Vec::new(),
                answer: None,
            });
        } else if let Some(rest) = line.strip_prefix(" [") {
            let (_, body) = rest.split_once("] ").unwrap();
            let (title, text) = body.split_once(": ").unwrap();
            current.as_mut().unwrap().passages.push(Passage::new(title, text));
        } else if let Some(answer) = line.strip_prefix(label) {
            let mut block = current.take().unwrap();
            block.answer = answer.strip_prefix(' ').map(str::to_owned);
            blocks.push(block);
        }
    }
    (header, blocks)
}

fn exemplar(block: &Block, id: usize) -> Example {
    let k = block.passages.len();
    Example {
        id: format!("ex-{id}"),
        question: block.question.clone(),
        origin: Origin::Paq,
        passages: block.passages.clone(),
        answers: vec![parse(block.answer.as_deref().unwrap(), ParseMode::Strict, Some(k)).unwrap()],
        short_answers: ShortAnswerSets::new(vec![vec![Vec::new(); k]]),
    }
}

fn rebuild(format: PromptFormat) -> String {
    let (_, blocks) = parse_prompt(QSUM_PROMPT, "Quoted summary:");
    let (query, shots) = blocks.split_last().unwrap();
    assert!(query.answer.is_none());
    let examples: Vec<Example> = shots.iter().enumerate().map(|(i, b)| exemplar(b, i)).collect();
    let refs: Vec<&Example> = examples.iter().collect();
    let query = PromptQuery {
        question: query.question.clone(),
        passages: query.passages.clone(),
    };
    build_prompt(&refs, &query, format, 0).unwrap()
}

#[test]
fn two_shot_qsum_prompt_matches_table() {
    assert_eq!(rebuild(PromptFormat::QSum), QSUM_PROMPT);
}

#[test]
fn two_shot_qsum_s_prompt_matches_table() {
    assert_eq!(rebuild(PromptFormat::QSumS), QSUM_S_PROMPT);
}

#[test]
fn table_quotes_are_faithful_to_their_sources() {
    let (_, blocks) = parse_prompt(QSUM_PROMPT, "Quoted summary:");
    for (i, block) in blocks.iter().filter(|b| b.answer.is_some()).enumerate() {
        let example = exemplar(block, i);
        let violations = check_faithfulness(&example.answers[0], &example.passages).unwrap();
        assert!(violations.is_empty(), "{violations:?}");
    }
}
