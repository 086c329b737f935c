use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::StatsError;

/// Spread of `σ̂/σ_pool` over the trials at one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeEnvelope {
    pub n: usize,
    pub trials: usize,
    pub min_ratio: f64,
    pub q05_ratio: f64,
    pub median_ratio: f64,
    pub q95_ratio: f64,
    pub max_ratio: f64,
    /// Largest `|σ̂/σ_pool − 1|` over the trials.
    pub max_abs_rel_error: f64,
}

fn sample_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    let mean = sum / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    libm::sqrt(ss / (n as f64 - 1.0))
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// σ of one random subset of size `n`, drawn without replacement on the
/// stream for `(n, trial)`. Indices are visited in pool order, so a subset
/// of the whole pool reproduces the pool σ exactly.
pub fn trial_sigma(pool: &[f64], n: usize, trial: usize, seed: u64) -> f64 {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 32) | trial as u64);
    let mut idx = rand::seq::index::sample(&mut rng, pool.len(), n).into_vec();
    idx.sort_unstable();
    sample_std(idx.iter().map(|&i| pool[i]))
}

/// For each size, `trials` subsets without replacement and the envelope of
/// their σ relative to the pool σ (both with the n−1 denominator).
pub fn sample_size_experiment(pool: &[f64], sizes: &[usize], trials: usize, seed: u64) -> Result<Vec<SizeEnvelope>, StatsError> {
    if trials == 0 {
        return Err(StatsError::NoTrials);
    }
    if pool.len() < 2 {
        return Err(StatsError::TooFewValues { needed: 2, got: pool.len() });
    }
    for &n in sizes {
        if n > pool.len() {
            return Err(StatsError::SizeExceedsPool { size: n, pool: pool.len() });
        }
        if n < 2 {
            return Err(StatsError::TooFewValues { needed: 2, got: n });
        }
    }
    let sigma_pool = sample_std(pool.iter().cloned());
    Ok(sizes
        .iter()
        .map(|&n| {
            let mut ratios: Vec<f64> = (0..trials).map(|t| trial_sigma(pool, n, t, seed) / sigma_pool).collect();
            ratios.sort_by(f64::total_cmp);
            let max_abs_rel_error = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
            SizeEnvelope {
                n,
                trials,
                min_ratio: ratios[0],
                q05_ratio: quantile(&ratios, 0.05),
                median_ratio: quantile(&ratios, 0.5),
                q95_ratio: quantile(&ratios, 0.95),
                max_ratio: ratios[trials - 1],
                max_abs_rel_error,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_pool_has_no_error() {
        let pool: Vec<f64> = (0..50).map(|i| libm::sin(i as f64)).collect();
        let env = sample_size_experiment(&pool, &[50], 5, 3).unwrap();
        assert_eq!(env[0].max_abs_rel_error, 0.0);
    }

    #[test]
    fn bad_requests() {
        let pool = [1.0, 2.0, 3.0];
        assert_eq!(sample_size_experiment(&pool, &[4], 1, 0), Err(StatsError::SizeExceedsPool { size: 4, pool: 3 }));
        assert_eq!(sample_size_experiment(&pool, &[2], 0, 0), Err(StatsError::NoTrials));
    }

    #[test]
    fn reproducible_per_seed() {
        let pool: Vec<f64> = (0..200).map(|i| libm::cos(i as f64 * 0.3)).collect();
        let a = sample_size_experiment(&pool, &[10, 30], 20, 9).unwrap();
        let b = sample_size_experiment(&pool, &[10, 30], 20, 9).unwrap();
        assert_eq!(a, b);
    }
}
