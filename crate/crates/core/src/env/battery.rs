//! Self-check battery for an environment specification.
//!
//! Draws a fresh sample from the law and verifies, end to end, the
//! properties the rest of the pipeline relies on: support bound, centered
//! mean, tail index, tail constant, and the size-biased sampling identity.

use super::{GammaEnvSpec, TiltedEnvSpec};
use crate::error::{Error, Result};
use crate::quad;
use crate::stats::mean_se;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One indicator-function comparison between the tilted sampler and the
/// reweighted base sampler.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TiltCheck {
    pub threshold: f64,
    /// Mean of `1{omega~ > t}` under the tilted sampler.
    pub tilted_mean: f64,
    /// Mean of `(1 + beta*omega) 1{omega > t}` under the base sampler.
    pub weighted_mean: f64,
    /// Combined standard error of the two means.
    pub se: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnvBatteryReport {
    pub gamma: f64,
    pub samples: usize,
    pub min_sample: f64,
    pub support_ok: bool,
    /// Mean of the law by high-accuracy quadrature (should be ~0).
    pub quadrature_mean: f64,
    pub mean_ok: bool,
    pub hill_estimate: f64,
    pub hill_ok: bool,
    /// Relative deviation of `survival(x) x^gamma` from the tail constant
    /// at `x = 1e3`.
    pub tail_constant_deviation: f64,
    pub tail_ok: bool,
    pub tilt_checks: Vec<TiltCheck>,
    pub tilt_ok: bool,
    pub pass: bool,
}

/// Run the battery with `samples` fresh draws (at least 10^6 recommended).
///
/// The support bound is a hard failure: a single draw below -1 aborts with
/// an error rather than a failed report, since it indicates a broken
/// sampler rather than statistical noise.
pub fn run_battery(spec: &GammaEnvSpec, samples: usize, seed: u64) -> Result<EnvBatteryReport> {
    if samples < 10_000 {
        return Err(Error::InsufficientData(format!(
            "battery needs at least 10000 samples, got {samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..samples).map(|_| spec.sample(&mut rng)).collect();
    let min_sample = draws.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_sample < -1.0 {
        return Err(Error::Numerical(format!(
            "sampler produced {min_sample} below the support bound -1"
        )));
    }

    // Mean by quadrature in survival coordinates, singularity absorbed.
    let g = spec.gamma();
    let p = 3.0 / (1.0 - 1.0 / g);
    let sp = *spec;
    let integrand = move |t: f64| {
        if t == 0.0 {
            return 0.0;
        }
        sp.quantile_unchecked(t.powf(p)) * p * t.powf(p - 1.0)
    };
    let quadrature_mean = quad::adaptive_simpson(&integrand, 0.0, 1.0, 1e-12, 1.0)?;
    let mean_ok = quadrature_mean.abs() <= 1e-10;

    let hill_estimate = super::hill_tail_estimate(&draws, 0.001)?;
    let hill_ok = (hill_estimate - g).abs() <= 0.1;

    let x = 1e3;
    let tail_constant_deviation =
        (spec.survival(x) * x.powf(g) / spec.tail_constant() - 1.0).abs();
    let tail_ok = tail_constant_deviation <= 0.02;

    let beta = 0.3;
    let tilt = TiltedEnvSpec::new(*spec, beta)?;
    let m = samples.min(200_000);
    let tilted_draws: Vec<f64> = (0..m).map(|_| tilt.sample(&mut rng)).collect();
    let base_draws: Vec<f64> = (0..m).map(|_| spec.sample(&mut rng)).collect();
    let mut tilt_checks = Vec::new();
    for &t in &[-0.5, 0.0, 1.0, 5.0] {
        let lhs: Vec<f64> = tilted_draws
            .iter()
            .map(|&x| if x > t { 1.0 } else { 0.0 })
            .collect();
        let rhs: Vec<f64> = base_draws
            .iter()
            .map(|&x| if x > t { 1.0 + beta * x } else { 0.0 })
            .collect();
        let (m1, s1) = mean_se(&lhs);
        let (m2, s2) = mean_se(&rhs);
        let se = (s1 * s1 + s2 * s2).sqrt();
        tilt_checks.push(TiltCheck {
            threshold: t,
            tilted_mean: m1,
            weighted_mean: m2,
            se,
            pass: (m1 - m2).abs() <= 4.0 * se,
        });
    }
    let tilt_ok = tilt_checks.iter().all(|c| c.pass);

    let pass = mean_ok && hill_ok && tail_ok && tilt_ok;
    Ok(EnvBatteryReport {
        gamma: g,
        samples,
        min_sample,
        support_ok: true,
        quadrature_mean,
        mean_ok,
        hill_estimate,
        hill_ok,
        tail_constant_deviation,
        tail_ok,
        tilt_checks,
        tilt_ok,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_passes_across_gammas() {
        for &g in &[1.3, 1.5, 1.9] {
            let spec = GammaEnvSpec::new(g).unwrap();
            let report = run_battery(&spec, 1_000_000, 2).unwrap();
            assert!(report.pass, "gamma {g}: {report:?}");
        }
    }

    #[test]
    fn battery_rejects_small_samples() {
        let spec = GammaEnvSpec::new(1.5).unwrap();
        assert!(run_battery(&spec, 100, 7).is_err());
    }
}
