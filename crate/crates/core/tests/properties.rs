use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::sample::select;

use semqa::baselines::{lead_tail_baseline, BaselineMode};
use semqa::dataset::{question_type, read_dataset, split_indices, write_dataset, Example, Origin, Passage, SplitRatios};
use semqa::metrics::{lcs_length, rouge_l_quoted, ShortAnswerSets};
use semqa::mining::{dedup_answers, phi, DedupConfig, PhiThresholds, TripletRecord};
use semqa::transform::{render, to_sentence_citations, RenderTarget};
use semqa::{
    normalize_tokens, parse, parse_lenient, psi_k, rouge_l, sem_f1, sem_rec, semqa_score, serialize, split_sentences,
    strip_marks, ParseMode, QuotedAnswer, Segment, SemRecMode,
};

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z]{1,7}",
        "[A-Z][a-z]{1,6}",
        "[0-9]{1,4}",
        select(vec!["the", "a", "an", "I'll", "U.S.", "café", "x,", "(y)"]).prop_map(str::to_owned),
    ]
}

fn words(min: usize, max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(word(), min..=max).prop_map(|w| w.join(" "))
}

/// Free text bounded by whitespace, as writers separate quotes from prose.
fn free_text() -> impl Strategy<Value = String> {
    words(0, 4).prop_map(|w| if w.is_empty() { " ".into() } else { format!(" {w} ") })
}

fn answer(max_source: usize) -> impl Strategy<Value = QuotedAnswer> {
    let segment = prop_oneof![
        free_text().prop_map(Segment::FreeText),
        (1..=max_source, words(1, 5)).prop_map(|(k, t)| Segment::quote(k, t)),
    ];
    prop::collection::vec(segment, 0..8).prop_map(QuotedAnswer::new)
}

fn sentence() -> impl Strategy<Value = String> {
    (words(2, 8), select(vec![".", "!", "?"])).prop_map(|(w, p)| format!("{w}{p}"))
}

fn passage_text() -> impl Strategy<Value = String> {
    prop::collection::vec(sentence(), 1..5).prop_map(|s| s.join(" "))
}

/// An example whose references quote word ranges of its passages and whose
/// short answers are sub-spans of each reference's quotes.
fn example() -> impl Strategy<Value = Example> {
    (2usize..=4)
        .prop_flat_map(|k| prop::collection::vec(passage_text(), k))
        .prop_flat_map(|texts| {
            let k = texts.len();
            let reference = prop::collection::vec((0..k, any::<prop::sample::Index>(), 1usize..5), 1..5);
            (Just(texts), prop::collection::vec(reference, 1..4))
        })
        .prop_map(|(texts, refs)| {
            let k = texts.len();
            let passages: Vec<Passage> =
                texts.iter().enumerate().map(|(i, t)| Passage::new(format!("T{i}"), t.clone())).collect();
            let mut answers = Vec::new();
            let mut short = Vec::new();
            for quotes in refs {
                let mut segments = vec![Segment::free("Answer: ")];
                let mut per_source = vec![Vec::new(); k];
                for (source, start, len) in quotes {
                    let tokens: Vec<&str> = texts[source].split_whitespace().collect();
                    let start = start.index(tokens.len());
                    let end = (start + len).min(tokens.len());
                    let span = tokens[start..end].join(" ");
                    per_source[source].push(tokens[start].to_owned());
                    segments.push(Segment::quote(source + 1, span));
                    segments.push(Segment::free(" and "));
                }
                answers.push(QuotedAnswer::new(segments).with_source_count(k));
                short.push(per_source);
            }
            Example {
                id: "p".into(),
                question: "what is it".into(),
                origin: Origin::Paq,
                passages,
                answers,
                short_answers: ShortAnswerSets::new(short),
            }
        })
}

fn exhaustive_lcs(x: &[u8], y: &[u8]) -> usize {
    let mut best = 0;
    for mask in 0u32..(1 << x.len()) {
        let sub: Vec<u8> = (0..x.len()).filter(|i| mask & (1 << i) != 0).map(|i| x[i]).collect();
        if sub.len() <= best {
            continue;
        }
        let mut it = y.iter();
        if sub.iter().all(|c| it.any(|d| d == c)) {
            best = sub.len();
        }
    }
    best
}

fn non_ws(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

proptest! {
    #[test]
    fn markup_round_trip(a in answer(6)) {
        let text = serialize(&a);
        prop_assert_eq!(parse(&text, ParseMode::Strict, None).unwrap(), a.canonical());
    }

    #[test]
    fn lenient_parse_is_total(s in prop_oneof![any::<String>(), "[\\[\\] 0-9a-z]{0,40}"]) {
        let out = parse_lenient(&s, Some(3));
        for (source, text) in out.answer.quotes() {
            prop_assert!((1..=3).contains(&source));
            prop_assert!(!text.trim().is_empty());
        }
    }

    #[test]
    fn strip_marks_partitions_tokens(a in answer(4)) {
        let mut left = normalize_tokens(&strip_marks(&a));
        let mut right: Vec<String> = a
            .segments()
            .iter()
            .filter(|s| !s.is_quote())
            .flat_map(|s| normalize_tokens(s.text()))
            .collect();
        for k in 1..=4 {
            right.extend(normalize_tokens(&psi_k(&a, k)));
        }
        left.sort();
        right.sort();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn psi_k_empty_for_unused_sources(a in answer(3), k in 4usize..10) {
        prop_assert_eq!(psi_k(&a, k), "");
    }

    #[test]
    fn normalization_is_idempotent(s in any::<String>()) {
        let once = normalize_tokens(&s);
        prop_assert!(once.iter().all(|t| !t.is_empty() && !t.contains(char::is_whitespace)));
        prop_assert_eq!(normalize_tokens(&once.join(" ")), once);
    }

    #[test]
    fn token_count_ignores_surrounding_whitespace(s in words(0, 10), pad in "[ \t\n]{0,4}") {
        prop_assert_eq!(normalize_tokens(&format!("{pad}{s}{pad}")).len(), normalize_tokens(&s).len());
    }

    #[test]
    fn sentence_split_loses_nothing(s in prop_oneof![passage_text(), any::<String>()]) {
        prop_assert_eq!(non_ws(&split_sentences(&s).join(" ")), non_ws(&s));
    }

    #[test]
    fn lcs_matches_exhaustive_oracle(
        x in prop::collection::vec(0u8..4, 0..=10),
        y in prop::collection::vec(0u8..4, 0..=10),
    ) {
        prop_assert_eq!(lcs_length(&x, &y), exhaustive_lcs(&x, &y));
    }

    #[test]
    fn metrics_in_range(e in example(), h in answer(4)) {
        let k = e.source_count();
        let r = rouge_l_quoted(&h, &e.answers).unwrap();
        let f = sem_f1(&h, &e.answers, k).unwrap();
        for mode in [SemRecMode::ReferenceBundle, SemRecMode::PerAnswer] {
            let s = sem_rec(&h, &e.short_answers, k, mode).unwrap();
            prop_assert!((0.0..=100.0).contains(&s));
        }
        prop_assert!((0.0..=100.0).contains(&r));
        prop_assert!((0.0..=100.0).contains(&f));
        prop_assert!((0.0..=100.0).contains(&semqa_score(f, r).unwrap()));
    }

    #[test]
    fn references_score_perfectly_against_themselves(e in example()) {
        let k = e.source_count();
        for reference in &e.answers {
            prop_assert_eq!(rouge_l_quoted(reference, &e.answers).unwrap(), 100.0);
            prop_assert_eq!(sem_f1(reference, std::slice::from_ref(reference), k).unwrap(), 100.0);
        }
    }

    #[test]
    fn semqa_of_equal_scores(x in 0.0f64..=100.0) {
        prop_assert!((semqa_score(x, x).unwrap() - x).abs() < 1e-9);
    }

    #[test]
    fn appending_a_reference_never_lowers(e in example(), h in answer(4), extra in answer(4)) {
        let k = e.source_count();
        let mut more = e.answers.clone();
        more.push(extra);
        prop_assert!(rouge_l_quoted(&h, &more).unwrap() >= rouge_l_quoted(&h, &e.answers).unwrap());
        prop_assert!(sem_f1(&h, &more, k).unwrap() >= sem_f1(&h, &e.answers, k).unwrap());
    }

    #[test]
    fn reference_order_is_irrelevant(e in example(), h in answer(4)) {
        let k = e.source_count();
        let mut reversed = e.clone();
        reversed.answers.reverse();
        reversed.short_answers.per_reference.reverse();
        prop_assert_eq!(rouge_l_quoted(&h, &e.answers).unwrap(), rouge_l_quoted(&h, &reversed.answers).unwrap());
        prop_assert_eq!(sem_f1(&h, &e.answers, k).unwrap(), sem_f1(&h, &reversed.answers, k).unwrap());
        prop_assert_eq!(
            sem_rec(&h, &e.short_answers, k, SemRecMode::default()).unwrap(),
            sem_rec(&h, &reversed.short_answers, k, SemRecMode::default()).unwrap()
        );
    }

    #[test]
    fn renaming_sources_is_irrelevant(e in example(), h in answer(4), rotate in 1usize..4) {
        let k = e.source_count();
        let rename = |a: &QuotedAnswer| {
            QuotedAnswer::new(a.segments().iter().map(|s| match s {
                Segment::Quote { source, text } if *source <= k => Segment::quote((source - 1 + rotate) % k + 1, text.clone()),
                other => other.clone(),
            }))
        };
        let answers: Vec<QuotedAnswer> = e.answers.iter().map(rename).collect();
        let mut short = e.short_answers.clone();
        for per_source in &mut short.per_reference {
            per_source.rotate_right(rotate % k);
        }
        let h2 = rename(&h);
        let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
        prop_assert!(close(sem_f1(&h, &e.answers, k).unwrap(), sem_f1(&h2, &answers, k).unwrap()));
        for mode in [SemRecMode::ReferenceBundle, SemRecMode::PerAnswer] {
            prop_assert!(close(sem_rec(&h, &e.short_answers, k, mode).unwrap(), sem_rec(&h2, &short, k, mode).unwrap()));
        }
    }

    #[test]
    fn rouge_handles_plain_strings(h in words(0, 12), r in words(0, 12)) {
        let v = rouge_l(&h, &[r.as_str()]).unwrap();
        prop_assert!((0.0..=100.0).contains(&v));
    }

    #[test]
    fn dataset_round_trip_is_fixed_point(e in example(), id in "[a-z0-9-]{1,8}") {
        let examples = vec![Example { id, ..e }];
        let mut first = Vec::new();
        write_dataset(&mut first, &examples).unwrap();
        let loaded = read_dataset(first.as_slice()).unwrap();
        let mut second = Vec::new();
        write_dataset(&mut second, &loaded.examples).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn split_keeps_titles_disjoint(
        titles in prop::collection::vec(prop::collection::vec(0u8..30, 1..4), 1..60),
        seed in any::<u64>(),
    ) {
        let names: Vec<Vec<String>> = titles.iter().map(|t| t.iter().map(|n| format!("t{n}")).collect()).collect();
        let refs: Vec<Vec<&str>> = names.iter().map(|t| t.iter().map(String::as_str).collect()).collect();
        let splits = split_indices(&refs, SplitRatios::DEFAULT, seed).unwrap();
        let title_sets: Vec<BTreeSet<&str>> = splits
            .iter()
            .map(|idx| idx.iter().flat_map(|&i| refs[i].iter().copied()).collect())
            .collect();
        for a in 0..3 {
            for b in a + 1..3 {
                prop_assert!(title_sets[a].is_disjoint(&title_sets[b]));
            }
        }
        let mut all: Vec<usize> = splits.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..refs.len()).collect::<Vec<_>>());
    }

    #[test]
    fn question_type_ignores_trailing_whitespace(q in words(0, 6), pad in "[ \t\n]{0,3}") {
        prop_assert_eq!(question_type(&q), question_type(&format!("{q}{pad}")));
    }

    #[test]
    fn lead_recall_grows_with_k(e in example()) {
        let k = e.source_count();
        let mut last = 0.0;
        for n in 1..=5 {
            let hyp = lead_tail_baseline(&e, BaselineMode::Lead, n);
            let score = sem_rec(&hyp, &e.short_answers, k, SemRecMode::default()).unwrap();
            prop_assert!(score >= last);
            last = score;
        }
    }

    #[test]
    fn baseline_tokens_come_from_passages(e in example(), n in 1usize..4, tail in any::<bool>()) {
        let mode = if tail { BaselineMode::Tail } else { BaselineMode::Lead };
        let hyp = lead_tail_baseline(&e, mode, n);
        prop_assert!(parse(&serialize(&hyp), ParseMode::Strict, Some(e.source_count())).is_ok());
        for (source, text) in hyp.quotes() {
            let passage: BTreeSet<String> = normalize_tokens(&e.passages[source - 1].text).into_iter().collect();
            prop_assert!(normalize_tokens(text).iter().all(|t| passage.contains(t)));
        }
    }

    #[test]
    fn citations_only_add_markers(a in answer(4)) {
        let cited = to_sentence_citations(&a);
        let marker = regex::Regex::new(r" \[\d+\]").unwrap();
        prop_assert_eq!(non_ws(&marker.replace_all(&cited, "")), non_ws(&strip_marks(&a)));
    }

    #[test]
    fn html_tags_balance(a in answer(9), extra in "[<>&\"' a-z]{0,10}") {
        let mut a = a;
        a.push(Segment::free(extra));
        let html = render(&a, RenderTarget::Html);
        prop_assert_eq!(html.matches("<span").count(), html.matches("</span>").count());
        prop_assert_eq!(html.matches('<').count(), html.matches('>').count());
        prop_assert_eq!(html.matches("<p").count(), 1);
    }

    #[test]
    fn phi_is_symmetric(x in words(0, 6), y in words(0, 6), s in prop::option::of(0.0f64..1.0)) {
        let t = PhiThresholds::default();
        let (a, b) = (phi(&x, &y, s, &t), phi(&y, &x, s, &t));
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.similar, !a.triggered_by.is_empty());
    }

    #[test]
    fn dedup_ignores_input_order(
        rows in prop::collection::vec(("[a-c]", words(2, 7), words(3, 10)), 1..8),
        shuffle in any::<prop::sample::Index>(),
    ) {
        let records: Vec<TripletRecord> = rows
            .iter()
            .enumerate()
            .map(|(i, (page, answer, text))| TripletRecord {
                question: "q".into(),
                passage: Passage::new(page.clone(), text.clone()),
                short_answer: answer.clone(),
                page_id: page.clone(),
                qa_score: Some(0.3 + 0.7 * (i as f64 + 1.0) / (rows.len() as f64 + 1.0)),
            })
            .collect();
        let mut permuted = records.clone();
        permuted.rotate_left(shuffle.index(records.len()));
        let config = DedupConfig::default();
        let kept = |rs: &[TripletRecord]| -> Vec<(String, String)> {
            let out = dedup_answers(rs, &config, None).unwrap();
            let mut v: Vec<(String, String)> =
                out.kept_records(rs).iter().map(|r| (r.page_id.clone(), r.short_answer.clone())).collect();
            v.sort();
            v
        };
        prop_assert_eq!(kept(&records), kept(&permuted));
    }
}
