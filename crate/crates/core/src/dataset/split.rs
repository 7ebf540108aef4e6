use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DatasetError, Example};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl SplitRatios {
    pub const DEFAULT: SplitRatios = SplitRatios {
        train: 0.60,
        validation: 0.07,
        test: 0.33,
    };

    fn as_array(self) -> [f64; 3] {
        [self.train, self.validation, self.test]
    }

    pub fn validate(self) -> Result<(), DatasetError> {
        let arr = self.as_array();
        let ok = arr.iter().all(|r| r.is_finite() && *r >= 0.0)
            && (arr.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        if ok {
            Ok(())
        } else {
            Err(DatasetError::InvalidRatios(arr))
        }
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios::DEFAULT
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetSplits {
    pub train: Vec<Example>,
    pub validation: Vec<Example>,
    pub test: Vec<Example>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Groups examples that share any passage title, transitively.
fn title_groups(titles: &[Vec<&str>]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..titles.len()).collect();
    let mut owner: HashMap<&str, usize> = HashMap::new();
    for (i, ts) in titles.iter().enumerate() {
        for t in ts {
            match owner.get(t) {
                Some(&j) => {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a.max(b)] = a.min(b);
                }
                None => {
                    owner.insert(t, i);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for i in 0..titles.len() {
        let root = find(&mut parent, i);
        let g = *slot.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    groups
}

/// Assigns example indices to (train, validation, test).
///
/// Examples sharing a passage title end up in the same split. Groups go
/// largest first (seeded shuffle among equal sizes) to whichever split is
/// furthest below its target size.
pub fn split_indices(
    titles: &[Vec<&str>],
    ratios: SplitRatios,
    seed: u64,
) -> Result<[Vec<usize>; 3], DatasetError> {
    ratios.validate()?;
    let mut groups = title_groups(titles);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups.shuffle(&mut rng);
    groups.sort_by_key(|g| std::cmp::Reverse(g.len()));

    let total = titles.len() as f64;
    let targets = ratios.as_array().map(|r| r * total);
    let mut splits: [Vec<usize>; 3] = Default::default();
    for group in groups {
        let deficit = |i: usize| targets[i] - splits[i].len() as f64;
        let best = (0..3)
            .reduce(|best, i| if deficit(i) > deficit(best) { i } else { best })
            .expect("three splits");
        splits[best].extend(group);
    }
    for split in &mut splits {
        split.sort_unstable();
    }
    Ok(splits)
}

/// Title-disjoint seeded split of a dataset.
pub fn split_dataset(
    examples: &[Example],
    ratios: SplitRatios,
    seed: u64,
) -> Result<DatasetSplits, DatasetError> {
    let titles: Vec<Vec<&str>> = examples
        .iter()
        .map(|e| e.passages.iter().map(|p| p.title.as_str()).collect())
        .collect();
    let [train, validation, test] = split_indices(&titles, ratios, seed)?;
    let pick = |idx: Vec<usize>| idx.into_iter().map(|i| examples[i].clone()).collect();
    Ok(DatasetSplits {
        train: pick(train),
        validation: pick(validation),
        test: pick(test),
    })
}
