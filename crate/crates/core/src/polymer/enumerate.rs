//! Brute-force path enumeration — the oracle the transfer matrix is
//! tested against. Exponential in the horizon, guarded accordingly.

use super::ModelParams;
use crate::error::{Error, Result};
use std::collections::HashMap;

fn check_size(params: &ModelParams) -> Result<u64> {
    let base = 2 * params.d as u64;
    let mut total: u64 = 1;
    for _ in 0..params.horizon {
        total = total
            .checked_mul(base)
            .filter(|&t| t <= 100_000_000)
            .ok_or_else(|| {
                Error::ResourceRefusal(format!(
                    "enumeration over (2d)^N = {base}^{} paths refused",
                    params.horizon
                ))
            })?;
    }
    Ok(total)
}

/// Exact `Z_N` as the average of path weight products over all walks.
pub fn brute_force_z(params: &ModelParams) -> Result<f64> {
    let total = check_size(params)?;
    let base = 2 * params.d as u64;
    let mut acc = 0.0f64;
    let mut site = vec![0i64; params.d];
    for path in 0..total {
        site.iter_mut().for_each(|c| *c = 0);
        let mut code = path;
        let mut w = 1.0;
        for n in 1..=params.horizon {
            let step = (code % base) as usize;
            code /= base;
            let (j, delta) = (step / 2, if step % 2 == 0 { 1 } else { -1 });
            site[j] += delta;
            w *= env_weight(params, n, &site);
        }
        acc += w;
    }
    Ok(acc / total as f64)
}

/// Exact endpoint law by the same enumeration.
pub fn brute_force_endpoint(params: &ModelParams) -> Result<HashMap<Vec<i64>, f64>> {
    let total = check_size(params)?;
    let base = 2 * params.d as u64;
    let mut acc: HashMap<Vec<i64>, f64> = HashMap::new();
    let mut z = 0.0f64;
    let mut site = vec![0i64; params.d];
    for path in 0..total {
        site.iter_mut().for_each(|c| *c = 0);
        let mut code = path;
        let mut w = 1.0;
        for n in 1..=params.horizon {
            let step = (code % base) as usize;
            code /= base;
            let (j, delta) = (step / 2, if step % 2 == 0 { 1 } else { -1 });
            site[j] += delta;
            w *= env_weight(params, n, &site);
        }
        z += w;
        *acc.entry(site.clone()).or_insert(0.0) += w;
    }
    for v in acc.values_mut() {
        *v /= z;
    }
    Ok(acc)
}

fn env_weight(params: &ModelParams, n: u64, site: &[i64]) -> f64 {
    use super::WeightMode;
    let omega = params.field.value(n, site);
    match params.weight_mode {
        WeightMode::Plain => 1.0 + params.beta * omega,
        WeightMode::Truncated { level, c_beta } => {
            (1.0 + params.beta * omega.min(level)) / c_beta
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvField, GammaEnvSpec};
    use crate::polymer::{log_partition, DPFront};

    fn params(d: usize, beta: f64, n: u64, seed: u64) -> ModelParams {
        let field = EnvField::new(GammaEnvSpec::new(1.5).unwrap(), seed);
        ModelParams::new(d, beta, n, field).unwrap()
    }

    #[test]
    fn trivial_cases() {
        assert_eq!(brute_force_z(&params(1, 0.5, 0, 1)).unwrap(), 1.0);
        let p = params(1, 0.4, 1, 11);
        let a = p.field.value(1, &[1]);
        let b = p.field.value(1, &[-1]);
        let z = brute_force_z(&p).unwrap();
        assert!((z - (1.0 + 0.4 * (a + b) / 2.0)).abs() < 1e-14);
    }

    #[test]
    fn refuses_large_instances() {
        assert!(brute_force_z(&params(3, 0.1, 40, 1)).is_err());
    }

    #[test]
    fn transfer_matrix_matches_enumeration_d1() {
        for seed in 0..100 {
            let p = params(1, 0.6, 10, seed);
            let z = brute_force_z(&p).unwrap();
            let lp = log_partition(&p).unwrap();
            assert!(
                (lp - z.ln()).abs() < 1e-10,
                "seed {seed}: {lp} vs {}",
                z.ln()
            );
        }
    }

    #[test]
    fn transfer_matrix_matches_enumeration_d2() {
        let p = params(2, 0.8, 6, 42);
        let z = brute_force_z(&p).unwrap();
        let lp = log_partition(&p).unwrap();
        assert!((lp - z.ln()).abs() < 1e-10);
    }

    #[test]
    fn endpoint_matches_enumeration() {
        let p = params(1, 0.7, 3, 9);
        let oracle = brute_force_endpoint(&p).unwrap();
        let mut front = DPFront::origin(&p).unwrap();
        for _ in 0..3 {
            front.step(&p).unwrap();
        }
        for (site, prob) in front.endpoint_distribution() {
            let expect = oracle.get(&site).copied().unwrap_or(0.0);
            assert!((prob - expect).abs() < 1e-12, "site {site:?}");
        }
    }
}
