//! Derivative and monotonicity checks on the finite-volume free energy.
//!
//! The derivative formula
//! `d/dbeta p_N = (1/N) E[ E_N[ sum_i omega_i / (1 + beta omega_i) ] ]`
//! is evaluated exactly per environment by an augmented transfer matrix
//! carrying, alongside each site weight `W(x)`, the weighted statistic
//! `A(x) = sum_paths W(path) T(path)` with `T = sum_i omega_i/(1+beta omega_i)`.
//! One step updates `A' = (1+beta omega) spread(A) + omega spread(W)`.
//! The comparison against a central finite difference shares environment
//! seeds across `beta - h` and `beta + h` (common random numbers), so the
//! two estimates are paired per replica.

use super::ensemble::EnsembleConfig;
use crate::error::{Error, Result};
use crate::polymer::{log_partition, ModelParams, SiteCodec, SiteMap};
use crate::stats::mean_se;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Exact per-environment value of `E_N[sum omega/(1+beta omega)]`.
fn quenched_susceptibility(params: &ModelParams) -> Result<f64> {
    let codec = SiteCodec::new(params.d, params.horizon as i64 + 1)?;
    let mut w = SiteMap::default();
    let mut a = SiteMap::default();
    let origin = codec.encode(&vec![0; params.d]);
    w.insert(origin, 1.0);
    a.insert(origin, 0.0);
    let inv = 1.0 / (2 * params.d) as f64;
    let mut site = vec![0i64; params.d];
    for n in 1..=params.horizon {
        let mut spread_w = SiteMap::default();
        let mut spread_a = SiteMap::default();
        for (&key, &ww) in &w {
            codec.decode(key, &mut site);
            let aa = a[&key];
            for j in 0..params.d {
                for delta in [-1i64, 1] {
                    site[j] += delta;
                    let k2 = codec.encode(&site);
                    *spread_w.entry(k2).or_insert(0.0) += ww * inv;
                    *spread_a.entry(k2).or_insert(0.0) += aa * inv;
                    site[j] -= delta;
                }
            }
        }
        if spread_w.len() > params.site_budget {
            return Err(Error::ResourceRefusal(format!(
                "augmented front grew to {} sites, budget {}",
                spread_w.len(),
                params.site_budget
            )));
        }
        let mut max_w = 0.0f64;
        for (&key, sw) in spread_w.iter_mut() {
            codec.decode(key, &mut site);
            let omega = params.field.value(n, &site);
            let env = 1.0 + params.beta * omega;
            let sa = spread_a.get_mut(&key).expect("parallel fronts");
            *sa = env * *sa + omega * *sw;
            *sw *= env;
            max_w = max_w.max(*sw);
        }
        if !(1e-2..=1e2).contains(&max_w) {
            for v in spread_w.values_mut() {
                *v /= max_w;
            }
            for v in spread_a.values_mut() {
                *v /= max_w;
            }
        }
        w = spread_w;
        a = spread_a;
    }
    let mut keys: Vec<u64> = w.keys().copied().collect();
    keys.sort_unstable();
    let total_w: f64 = keys.iter().map(|k| w[k]).sum();
    let total_a: f64 = keys.iter().map(|k| a[k]).sum();
    Ok(total_a / total_w)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DerivativeRecord {
    pub beta: f64,
    pub h: f64,
    /// Mean/se of the exact-formula values `(1/N) E_N[sum omega/(1+beta omega)]`.
    pub formula_mean: f64,
    pub formula_se: f64,
    /// Mean/se of the central finite differences of `(1/N) log Z_N`.
    pub fd_mean: f64,
    pub fd_se: f64,
    /// Paired difference (formula - finite difference) with its se.
    pub diff_mean: f64,
    pub diff_se: f64,
    /// Whether the paired difference is within its 95% interval of zero.
    pub agree: bool,
}

/// Compare the derivative formula against a common-random-numbers central
/// finite difference at `beta +- h`.
pub fn derivative_check(config: &EnsembleConfig, h: f64) -> Result<DerivativeRecord> {
    let beta = config.beta;
    if !(beta - h >= 0.0 && beta + h < 1.0 && h > 0.0) {
        return Err(Error::Domain(format!(
            "need 0 <= beta-h and beta+h < 1, got beta={beta}, h={h}"
        )));
    }
    if config.replicas < 2 {
        return Err(Error::InsufficientData("need at least 2 replicas".into()));
    }
    let n = config.horizon as f64;
    let rows: Vec<(f64, f64)> = (0..config.replicas)
        .into_par_iter()
        .map(|i| {
            let params = config.params_for(i)?;
            let formula = quenched_susceptibility(&params)? / n;
            // Central differences at h and h/2, Richardson-extrapolated:
            // the O(h^2) discretization bias would otherwise dominate the
            // paired comparison once common random numbers remove the
            // sampling noise.
            let at = |b: f64| -> Result<f64> {
                let mut p = params.clone();
                p.beta = b;
                log_partition(&p)
            };
            let fd_h = (at(beta + h)? - at(beta - h)?) / (2.0 * h);
            let fd_h2 = (at(beta + h / 2.0)? - at(beta - h / 2.0)?) / h;
            let fd = (4.0 * fd_h2 - fd_h) / (3.0 * n);
            Ok((formula, fd))
        })
        .collect::<Result<_>>()?;
    let formulas: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let fds: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let diffs: Vec<f64> = rows.iter().map(|r| r.0 - r.1).collect();
    let (formula_mean, formula_se) = mean_se(&formulas);
    let (fd_mean, fd_se) = mean_se(&fds);
    let (diff_mean, diff_se) = mean_se(&diffs);
    Ok(DerivativeRecord {
        beta,
        h,
        formula_mean,
        formula_se,
        fd_mean,
        fd_se,
        diff_mean,
        diff_se,
        // 95% interval plus the O(h^4) residual of the extrapolated
        // finite difference, which can exceed the tiny paired se.
        agree: diff_mean.abs() <= 1.96 * diff_se.max(1e-15) + h.powi(4),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonotonicityRecord {
    pub betas: Vec<f64>,
    pub means: Vec<f64>,
    pub ses: Vec<f64>,
    /// Adjacent differences `p(beta_{i+1}) - p(beta_i)` with paired se.
    pub diffs: Vec<(f64, f64)>,
    /// No difference significantly positive (each `<= +2 se`).
    pub non_increasing: bool,
}

/// Check that the estimated free energy does not increase along a beta
/// grid, sharing environment seeds across the grid to cancel noise.
pub fn monotonicity_check(config: &EnsembleConfig, betas: &[f64]) -> Result<MonotonicityRecord> {
    if betas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("beta grid must be strictly increasing".into()));
    }
    if betas.iter().any(|&b| !(0.0..1.0).contains(&b)) {
        return Err(Error::Domain("beta grid must lie in [0, 1)".into()));
    }
    let n = config.horizon as f64;
    // rows[i][j] = p-value of replica i at beta j, common seed per i.
    let rows: Vec<Vec<f64>> = (0..config.replicas)
        .into_par_iter()
        .map(|i| {
            let base = config.params_for(i)?;
            betas
                .iter()
                .map(|&b| {
                    let mut p = base.clone();
                    p.beta = b;
                    Ok(log_partition(&p)? / n)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut means = Vec::new();
    let mut ses = Vec::new();
    for j in 0..betas.len() {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let (m, s) = mean_se(&col);
        means.push(m);
        ses.push(s);
    }
    let mut diffs = Vec::new();
    let mut non_increasing = true;
    for j in 0..betas.len() - 1 {
        let paired: Vec<f64> = rows.iter().map(|r| r[j + 1] - r[j]).collect();
        let (m, s) = mean_se(&paired);
        if m > 2.0 * s {
            non_increasing = false;
        }
        diffs.push((m, s));
    }
    Ok(MonotonicityRecord {
        betas: betas.to_vec(),
        means,
        ses,
        diffs,
        non_increasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_centered_at_zero_beta() {
        let mut config = EnsembleConfig::new(1, 1.5, 0.0, 30, 200, 3);
        config.beta = 0.05; // keep beta - h at exactly 0
        let rec = derivative_check(&config, 0.05).unwrap();
        // The derivative near beta = 0 is the centered environment mean
        // (zero) plus an O(beta) correction; with 200 replicas the
        // estimate must sit within noise of a small negative value.
        assert!(rec.formula_mean.abs() < 0.2, "{}", rec.formula_mean);
        assert!(rec.agree, "paired gap {} +- {}", rec.diff_mean, rec.diff_se);
    }

    #[test]
    fn formula_matches_finite_difference() {
        let config = EnsembleConfig::new(1, 1.5, 0.4, 30, 200, 7);
        let rec = derivative_check(&config, 0.02).unwrap();
        assert!(rec.agree, "gap {} +- {}", rec.diff_mean, rec.diff_se);
        // Non-increasing free energy: the derivative estimate cannot be
        // significantly positive.
        assert!(rec.formula_mean <= 3.0 * rec.formula_se, "{}", rec.formula_mean);
    }

    #[test]
    fn derivative_domain_errors() {
        let config = EnsembleConfig::new(1, 1.5, 0.01, 10, 4, 1);
        assert!(derivative_check(&config, 0.05).is_err());
    }

    #[test]
    fn monotone_grid() {
        let config = EnsembleConfig::new(1, 1.5, 0.0, 60, 60, 11);
        let rec = monotonicity_check(&config, &[0.0, 0.2, 0.4, 0.6, 0.8]).unwrap();
        assert_eq!(rec.means[0], 0.0, "p(0) is exactly zero");
        assert!(rec.non_increasing, "{:?}", rec.diffs);
        // In this strong-disorder regime the trend is strictly downward.
        assert!(rec.means[4] < rec.means[1]);
    }

    #[test]
    fn monotonicity_rejects_bad_grid() {
        let config = EnsembleConfig::new(1, 1.5, 0.0, 10, 4, 1);
        assert!(monotonicity_check(&config, &[0.4, 0.2]).is_err());
        assert!(monotonicity_check(&config, &[0.2, 1.0]).is_err());
    }
}
