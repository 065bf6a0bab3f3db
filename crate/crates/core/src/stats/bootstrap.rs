use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::stance::StanceScore;

/// Percentile bootstrap summary of a statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// The statistic evaluated on the full sample.
    pub mean: f64,
    /// Half-width of the confidence interval.
    pub error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub resamples: u32,
    pub seed: u64,
}

/// Percentile bootstrap for an arbitrary statistic.
///
/// Resample `i` draws its indices from a ChaCha stream keyed by `(seed, i)`,
/// so results are reproducible for a given seed and unaffected by how many
/// further resamples follow. Interval endpoints use linearly interpolated
/// percentiles of the resampled statistics.
pub fn bootstrap_statistic<T: Copy>(
    items: &[T],
    statistic: impl Fn(&[T]) -> f64,
    resamples: u32,
    seed: u64,
    level: f64,
) -> Result<BootstrapResult, StatsError> {
    if items.len() < 2 {
        return Err(StatsError::InsufficientData {
            need: 2,
            got: items.len(),
        });
    }
    if resamples == 0 {
        return Err(StatsError::InvalidResamples);
    }
    if !level.is_finite() || level <= 0.0 || level >= 1.0 {
        return Err(StatsError::InvalidLevel(level));
    }
    let mean = statistic(items);
    let mut resampled = Vec::with_capacity(resamples as usize);
    let mut draw = Vec::with_capacity(items.len());
    for index in 0..resamples {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(u64::from(index) + 1);
        draw.clear();
        for _ in 0..items.len() {
            draw.push(items[rng.random_range(0..items.len())]);
        }
        resampled.push(statistic(&draw));
    }
    resampled.sort_by(f64::total_cmp);
    let alpha = 1.0 - level;
    let ci_low = percentile(&resampled, alpha / 2.0);
    let ci_high = percentile(&resampled, 1.0 - alpha / 2.0);
    Ok(BootstrapResult {
        mean,
        error: (ci_high - ci_low) / 2.0,
        ci_low,
        ci_high,
        resamples,
        seed,
    })
}

/// Bootstrap confidence interval for the mean stance score.
pub fn bootstrap_stance(
    scores: &[StanceScore],
    resamples: u32,
    seed: u64,
    level: f64,
) -> Result<BootstrapResult, StatsError> {
    let values: Vec<f64> = scores.iter().map(|s| s.value()).collect();
    bootstrap_statistic(&values, sample_mean, resamples, seed, level)
}

fn sample_mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Linearly interpolated percentile of a sorted slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let last = sorted.len() - 1;
    let position = q * last as f64;
    let lower = position.floor() as usize;
    let upper = position.ceil() as usize;
    if lower == upper {
        return sorted[lower];
    }
    let weight = position - lower as f64;
    sorted[lower] * (1.0 - weight) + sorted[upper] * weight
}

/// Mean stance score weighted by classifier confidence.
pub fn confidence_weighted_mean(pairs: &[(StanceScore, f64)]) -> Result<f64, StatsError> {
    if pairs.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut weighted_sum = 0.0;
    let mut weight_sum = 0.0;
    for (score, weight) in pairs {
        if !weight.is_finite() || !(0.0..=1.0).contains(weight) {
            return Err(StatsError::InvalidWeight(*weight));
        }
        weighted_sum += score.value() * weight;
        weight_sum += weight;
    }
    if weight_sum == 0.0 {
        return Err(StatsError::ZeroWeight);
    }
    Ok(weighted_sum / weight_sum)
}

/// Count and share of confidences strictly below a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowConfidence {
    pub count: usize,
    pub total: usize,
    pub fraction: f64,
}

pub fn low_confidence_fraction(
    confidences: &[f64],
    threshold: f64,
) -> Result<LowConfidence, StatsError> {
    if confidences.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if !threshold.is_finite() || threshold <= 0.0 || threshold > 1.0 {
        return Err(StatsError::InvalidThreshold(threshold));
    }
    let count = confidences.iter().filter(|c| **c < threshold).count();
    Ok(LowConfidence {
        count,
        total: confidences.len(),
        fraction: count as f64 / confidences.len() as f64,
    })
}
