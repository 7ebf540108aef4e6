use std::collections::HashMap;

use crate::textnorm::normalize_tokens;

/// Sparse L2-normalized vector sorted by term id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector(pub Vec<(usize, f64)>);

/// TF-IDF with raw term counts and smoothed idf `ln((1 + N) / (1 + df)) + 1`
/// over [`normalize_tokens`] output. Vectors are L2-normalized.
#[derive(Debug, Clone, Default)]
pub struct TfIdfModel {
    vocab: HashMap<String, usize>,
    idf: Vec<f64>,
}

impl TfIdfModel {
    pub fn fit<S: AsRef<str>>(docs: &[S]) -> Self {
        let mut vocab: HashMap<String, usize> = HashMap::new();
        let mut df: Vec<usize> = Vec::new();
        for doc in docs {
            let mut tokens = normalize_tokens(doc.as_ref());
            tokens.sort_unstable();
            tokens.dedup();
            for token in tokens {
                let next = vocab.len();
                let id = *vocab.entry(token).or_insert(next);
                if id == df.len() {
                    df.push(0);
                }
                df[id] += 1;
            }
        }
        let n = docs.len() as f64;
        let idf = df
            .into_iter()
            .map(|d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
            .collect();
        TfIdfModel { vocab, idf }
    }

    /// Vectorizes `text`; tokens outside the fitted vocabulary are ignored.
    pub fn transform(&self, text: &str) -> SparseVector {
        let mut counts: HashMap<usize, f64> = HashMap::new();
        for token in normalize_tokens(text) {
            if let Some(&id) = self.vocab.get(&token) {
                *counts.entry(id).or_default() += 1.0;
            }
        }
        let mut weights: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(id, tf)| (id, tf * self.idf[id]))
            .collect();
        weights.sort_unstable_by_key(|(id, _)| *id);
        let norm = weights.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut weights {
                *w /= norm;
            }
        }
        SparseVector(weights)
    }
}

/// Dot product of two normalized vectors; 0 when either is empty.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    let (mut i, mut j, mut dot) = (0, 0, 0.0);
    while i < a.0.len() && j < b.0.len() {
        match a.0[i].0.cmp(&b.0[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += a.0[i].1 * b.0[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    dot
}

/// Connected components of the graph linking questions whose TF-IDF cosine
/// exceeds `threshold`. Members are ascending; groups are ordered by their
/// first member.
pub fn merge_questions<S: AsRef<str>>(questions: &[S], threshold: f64) -> Vec<Vec<usize>> {
    let model = TfIdfModel::fit(questions);
    let vectors: Vec<SparseVector> = questions.iter().map(|q| model.transform(q.as_ref())).collect();

    let mut postings: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
    for (doc, v) in vectors.iter().enumerate() {
        for &(term, w) in &v.0 {
            postings.entry(term).or_default().push((doc, w));
        }
    }

    let mut parent: Vec<usize> = (0..questions.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (doc, v) in vectors.iter().enumerate() {
        let mut dots: HashMap<usize, f64> = HashMap::new();
        for &(term, w) in &v.0 {
            for &(other, ow) in &postings[&term] {
                if other > doc {
                    *dots.entry(other).or_default() += w * ow;
                }
            }
        }
        for (other, dot) in dots {
            if dot > threshold {
                let (a, b) = (find(&mut parent, doc), find(&mut parent, other));
                parent[a.max(b)] = a.min(b);
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for i in 0..questions.len() {
        let root = find(&mut parent, i);
        let g = *slot.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_questions_merge() {
        let qs = ["who sang it", "who sang it"];
        let model = TfIdfModel::fit(&qs);
        let c = cosine(&model.transform(qs[0]), &model.transform(qs[1]));
        assert!((c - 1.0).abs() < 1e-12);
        assert_eq!(merge_questions(&qs, 0.9), vec![vec![0, 1]]);
    }

    #[test]
    fn disjoint_questions_stay_apart() {
        assert_eq!(
            merge_questions(&["red green", "blue yellow"], 0.9),
            vec![vec![0], vec![1]]
        );
    }

    #[test]
    fn near_duplicate_years() {
        // Independent two-document TF-IDF computation gives 0.7523197619890014.
        let qs = ["where did bob dylan tour in 1978", "where did bob dylan tour in 1979"];
        let model = TfIdfModel::fit(&qs);
        let c = cosine(&model.transform(qs[0]), &model.transform(qs[1]));
        assert!((c - 0.752_319_761_989_001_4).abs() < 1e-12);
        assert_eq!(merge_questions(&qs, 0.9), vec![vec![0], vec![1]]);
        assert_eq!(merge_questions(&qs, 0.75), vec![vec![0, 1]]);
    }

    #[test]
    fn transitive_groups_and_empty_docs() {
        let qs = ["a b c d e", "?!", "a b c d e", "zzz"];
        assert_eq!(merge_questions(&qs, 0.9), vec![vec![0, 2], vec![1], vec![3]]);
        assert!(merge_questions::<&str>(&[], 0.9).is_empty());
    }
}
