//! Hill estimator for the tail index of a positive-tailed sample.

use crate::error::{Error, Result};

/// Estimate the tail index from the largest `top_fraction` of the sample.
///
/// The estimator is the reciprocal of the mean log-excess over the order
/// statistic at the cut. Only the far tail of the shifted law follows the
/// pure power; fractions larger than a few permille pick up the shift of
/// the support and bias the estimate downward, so keep `top_fraction`
/// small.
pub fn hill_tail_estimate(samples: &[f64], top_fraction: f64) -> Result<f64> {
    if samples.len() < 10_000 {
        return Err(Error::InsufficientData(format!(
            "hill estimator needs at least 10000 samples, got {}",
            samples.len()
        )));
    }
    if !(top_fraction > 0.0 && top_fraction <= 0.1) {
        return Err(Error::Domain(format!(
            "top_fraction must lie in (0, 0.1], got {top_fraction}"
        )));
    }
    let k = ((samples.len() as f64 * top_fraction).floor() as usize).max(2);
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("NaN sample"));
    let cut = sorted[k - 1];
    if !(cut > 0.0) {
        return Err(Error::Precondition(format!(
            "order statistic at the cut must be positive, got {cut}"
        )));
    }
    let mean_log_excess: f64 = sorted[..k - 1]
        .iter()
        .map(|&x| (x / cut).ln())
        .sum::<f64>()
        / (k - 1) as f64;
    if mean_log_excess <= 0.0 {
        return Err(Error::Precondition(
            "degenerate tail: no spread above the cut".into(),
        ));
    }
    Ok(1.0 / mean_log_excess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::GammaEnvSpec;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recovers_index_on_exact_pareto() {
        // Pure Pareto: the Hill estimator is unbiased at any cut.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        use rand::Rng;
        let g = 1.7;
        let xs: Vec<f64> = (0..200_000)
            .map(|_| (1.0 - rng.gen::<f64>()).powf(-1.0 / g))
            .collect();
        let est = hill_tail_estimate(&xs, 0.01).unwrap();
        assert!((est - g).abs() < 0.1, "est {est}");
    }

    #[test]
    fn recovers_index_on_shifted_family_far_tail() {
        // The shifted law is only asymptotically Pareto; at the 0.1% cut
        // the residual bias is within the +-0.1 band.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &g in &[1.3, 1.5, 1.9] {
            let spec = GammaEnvSpec::new(g).unwrap();
            let xs: Vec<f64> = (0..1_000_000).map(|_| spec.sample(&mut rng)).collect();
            let est = hill_tail_estimate(&xs, 0.001).unwrap();
            assert!((est - g).abs() < 0.1, "gamma {g}: est {est}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let xs = vec![1.0; 100];
        assert!(hill_tail_estimate(&xs, 0.01).is_err());
        let xs = vec![1.0; 20_000];
        assert!(hill_tail_estimate(&xs, 0.0).is_err());
        assert!(hill_tail_estimate(&xs, 0.5).is_err());
        // Constant sample: no spread above the cut.
        assert!(hill_tail_estimate(&xs, 0.01).is_err());
        // Negative cut value.
        let xs = vec![-2.0; 20_000];
        assert!(hill_tail_estimate(&xs, 0.01).is_err());
    }
}
