//! Small statistics helpers shared by the estimators.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 1, "empty sample");
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median-of-means over `blocks` contiguous blocks.
///
/// Robust location estimate for heavy-tailed samples; falls back to the
/// plain mean when the sample is too small to split.
pub fn median_of_means(xs: &[f64], blocks: usize) -> f64 {
    let blocks = blocks.max(1).min(xs.len());
    if blocks <= 1 {
        return mean_se(xs).0;
    }
    let len = xs.len() / blocks;
    let means: Vec<f64> = (0..blocks)
        .map(|b| {
            let chunk = &xs[b * len..(b + 1) * len];
            chunk.iter().sum::<f64>() / chunk.len() as f64
        })
        .collect();
    median(&means)
}

/// Bootstrap an upper confidence limit for a statistic of the sample.
///
/// Resamples with replacement `resamples` times (deterministic in `seed`)
/// and returns the `quantile` point of the resampled statistics.
pub fn bootstrap_upper<F: Fn(&[f64]) -> f64>(
    xs: &[f64],
    stat: F,
    resamples: usize,
    quantile: f64,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats: Vec<f64> = Vec::with_capacity(resamples);
    let mut buf = vec![0.0; xs.len()];
    for _ in 0..resamples {
        for slot in buf.iter_mut() {
            *slot = xs[rng.gen_range(0..xs.len())];
        }
        stats.push(stat(&buf));
    }
    stats.sort_by(|a, b| a.partial_cmp(b).expect("NaN bootstrap statistic"));
    let idx = ((resamples as f64 - 1.0) * quantile).round() as usize;
    stats[idx.min(resamples - 1)]
}
