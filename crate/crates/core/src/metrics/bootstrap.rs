use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::MetricError;

/// Percentile bootstrap interval for the mean of `values`.
///
/// Draws `resamples` samples of `values.len()` items with replacement from a
/// ChaCha8 stream seeded with `seed`, then reads the `(1 - c) / 2` and
/// `1 - (1 - c) / 2` quantiles of the resampled means with linear
/// interpolation between order statistics.
pub fn bootstrap_ci(
    values: &[f64],
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> Result<(f64, f64), MetricError> {
    if values.is_empty() {
        return Err(MetricError::EmptyValues);
    }
    if resamples == 0 {
        return Err(MetricError::NoResamples);
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(MetricError::InvalidConfidence(confidence));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = values.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);

    let tail = (1.0 - confidence) / 2.0;
    Ok((quantile(&means, tail), quantile(&means, 1.0 - tail)))
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}
