use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::MiningError;
use crate::dataset::QuestionType;

/// Stratified sampling over `(question type, answer count)` cells.
///
/// Cells are visited round-robin in sorted order; each visit to a non-empty
/// cell draws one item uniformly at random (seeded) until `quota` items are
/// taken.
pub fn balanced_sample<T>(
    items: Vec<(QuestionType, usize, T)>,
    quota: usize,
    seed: u64,
) -> Result<Vec<T>, MiningError> {
    if quota > items.len() {
        return Err(MiningError::QuotaTooLarge {
            quota,
            available: items.len(),
        });
    }
    let mut cells: BTreeMap<(QuestionType, usize), Vec<T>> = BTreeMap::new();
    for (qt, answers, payload) in items {
        cells.entry((qt, answers)).or_default().push(payload);
    }
    let mut cells: Vec<Vec<T>> = cells.into_values().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = Vec::with_capacity(quota);
    while sample.len() < quota {
        for cell in cells.iter_mut().filter(|c| !c.is_empty()) {
            if sample.len() == quota {
                break;
            }
            let pick = rng.random_range(0..cell.len());
            sample.push(cell.remove(pick));
        }
    }
    Ok(sample)
}
