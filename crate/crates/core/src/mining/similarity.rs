use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::dataset::Passage;
use crate::textnorm::normalize_tokens;

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein(x: &str, y: &str) -> usize {
    let x: Vec<char> = x.chars().collect();
    let y: Vec<char> = y.chars().collect();
    if x.is_empty() {
        return y.len();
    }
    let mut prev: Vec<usize> = (0..=y.len()).collect();
    let mut curr = vec![0; y.len() + 1];
    for (i, xc) in x.iter().enumerate() {
        curr[0] = i + 1;
        for (j, yc) in y.iter().enumerate() {
            let substitution = prev[j] + usize::from(xc != yc);
            curr[j + 1] = substitution.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[y.len()]
}

fn token_set(text: &str) -> HashSet<String> {
    normalize_tokens(text).into_iter().collect()
}

/// Jaccard overlap of normalized word sets; two empty sets score 1.
pub fn word_iou(x: &str, y: &str) -> f64 {
    let (a, b) = (token_set(x), token_set(y));
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Shared normalized words over the size of the smaller word set.
pub fn passage_overlap(p1: &Passage, p2: &Passage) -> f64 {
    let (a, b) = (token_set(&p1.text), token_set(&p2.text));
    let smaller = a.len().min(b.len());
    if smaller == 0 {
        return 0.0;
    }
    a.intersection(&b).count() as f64 / smaller as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    Levenshtein,
    Iou,
    Semantic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiThresholds {
    /// Similar when the edit distance is at most this.
    pub max_edit_distance: usize,
    /// Similar when word IoU is strictly above this.
    pub min_iou: f64,
    /// Similar when the semantic score is strictly above this.
    pub min_semantic: f64,
}

impl Default for PhiThresholds {
    fn default() -> Self {
        PhiThresholds {
            max_edit_distance: 10,
            min_iou: 0.75,
            min_semantic: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimilarityVerdict {
    pub similar: bool,
    pub triggered_by: BTreeSet<Trigger>,
}

/// Binary answer similarity: any of edit distance, word IoU or the external
/// semantic score crossing its threshold. A missing score never triggers.
pub fn phi(x: &str, y: &str, semantic_score: Option<f64>, thresholds: &PhiThresholds) -> SimilarityVerdict {
    let mut triggered_by = BTreeSet::new();
    if levenshtein(x, y) <= thresholds.max_edit_distance {
        triggered_by.insert(Trigger::Levenshtein);
    }
    if word_iou(x, y) > thresholds.min_iou {
        triggered_by.insert(Trigger::Iou);
    }
    if semantic_score.is_some_and(|s| s > thresholds.min_semantic) {
        triggered_by.insert(Trigger::Semantic);
    }
    SimilarityVerdict {
        similar: !triggered_by.is_empty(),
        triggered_by,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edit_distance() {
        assert_eq!(levenshtein("Céline", "Celine"), 1);
        assert_eq!(levenshtein("same", "same"), 0);
        assert_eq!(levenshtein("abc", ""), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
    }

    #[test]
    fn iou() {
        assert_eq!(word_iou("b a c d", "a b c d"), 1.0);
        assert_eq!(word_iou("x y", "z w"), 0.0);
        assert_eq!(word_iou("x y z", "x y w"), 0.5);
        // `a` is an article and is normalized away: {b, c} vs {b, d}.
        assert!((word_iou("a b c", "a b d") - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(word_iou("", "!!"), 1.0);
    }

    #[test]
    fn overlap_uses_smaller_set() {
        let p = |t: &str| Passage::new("", t);
        assert_eq!(passage_overlap(&p("one two"), &p("one two")), 1.0);
        assert_eq!(passage_overlap(&p("one two"), &p("three four")), 0.0);
        let six = p("w1 w2 w3 w4 w5 w6");
        let other = p("w1 w2 w3 x1 x2 x3 x4 x5 x6 x7");
        assert_eq!(passage_overlap(&six, &other), 0.5);
        assert_eq!(passage_overlap(&p(""), &six), 0.0);
    }

    #[test]
    fn phi_triggers() {
        let t = PhiThresholds::default();
        let v = phi("Céline Dion", "Celine Dion", None, &t);
        assert!(v.similar);
        assert!(v.triggered_by.contains(&Trigger::Levenshtein));

        let x = "abcdefghijklmnopqrstuvwxyzabcdefghijklmn";
        let y = "0123456789012345678901234567890123456789";
        assert_eq!(x.len(), 40);
        let v = phi(x, y, Some(0.4), &t);
        assert!(!v.similar && v.triggered_by.is_empty());

        let v = phi(
            "the capital city of the northern province",
            "a metropolis which governs the region up north",
            Some(0.9),
            &t,
        );
        assert_eq!(v.triggered_by.into_iter().collect::<Vec<_>>(), vec![Trigger::Semantic]);
    }

    #[test]
    fn phi_iou_trigger_for_reordered_lists() {
        let v = phi(
            "Paris, London, Berlin, Madrid and Rome",
            "Rome, Madrid, Berlin, London and Paris",
            None,
            &PhiThresholds::default(),
        );
        assert!(v.triggered_by.contains(&Trigger::Iou));
        assert!(!v.triggered_by.contains(&Trigger::Levenshtein));
    }
}
