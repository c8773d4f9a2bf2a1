//! Replica ensembles and the quenched free-energy estimator.

use crate::env::{EnvField, GammaEnvSpec, TruncationSpec};
use crate::error::{Error, Result};
use crate::polymer::{geometric_schedule, run_replica, ModelParams, ReplicaResult, WeightMode};
use crate::rng::mix;
use crate::stats::{mean_se, median_of_means};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Everything needed to reproduce one ensemble of independent replicas.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub d: usize,
    pub gamma: f64,
    pub beta: f64,
    pub horizon: u64,
    pub replicas: usize,
    pub base_seed: u64,
    /// Cap the environment at `beta^{-kappa}` and renormalize (finite
    /// variance regime) instead of using the raw weights.
    pub truncation_kappa: Option<f64>,
    pub prune_threshold: f64,
    pub site_budget: usize,
}

impl EnsembleConfig {
    pub fn new(d: usize, gamma: f64, beta: f64, horizon: u64, replicas: usize, base_seed: u64) -> Self {
        Self {
            d,
            gamma,
            beta,
            horizon,
            replicas,
            base_seed,
            truncation_kappa: None,
            prune_threshold: 0.0,
            site_budget: 50_000_000,
        }
    }

    pub fn spec(&self) -> Result<GammaEnvSpec> {
        GammaEnvSpec::new(self.gamma)
    }

    /// Model parameters for replica `index` (seed derived, schedule-free).
    pub fn params_for(&self, index: usize) -> Result<ModelParams> {
        let spec = self.spec()?;
        let field = EnvField::new(spec, mix(self.base_seed, index as u64));
        let mut params = ModelParams::new(self.d, self.beta, self.horizon, field)?;
        params.prune_threshold = self.prune_threshold;
        params.site_budget = self.site_budget;
        if let Some(kappa) = self.truncation_kappa {
            let tr = TruncationSpec::new(spec, self.beta, kappa)?;
            params.weight_mode = WeightMode::Truncated {
                level: tr.level(),
                c_beta: tr.c_beta(),
            };
        }
        Ok(params)
    }
}

/// Run all replicas in parallel; results are ordered by replica index and
/// independent of worker scheduling.
pub fn run_ensemble(config: &EnsembleConfig) -> Result<Vec<ReplicaResult>> {
    if config.replicas < 1 {
        return Err(Error::Domain("need at least one replica".into()));
    }
    let schedule = geometric_schedule(config.horizon);
    (0..config.replicas)
        .into_par_iter()
        .map(|i| run_replica(&config.params_for(i)?, &schedule))
        .collect()
}

/// The free-energy estimate with its uncertainty and convergence trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FreeEnergyEstimate {
    pub beta: f64,
    pub gamma: f64,
    pub d: usize,
    pub n: u64,
    pub replicas: usize,
    /// Mean of `(1/N) log Z_N` over replicas.
    pub mean: f64,
    pub se: f64,
    /// Median-of-means companion (robust location).
    pub robust: f64,
    /// Per-replica values of `(1/N) log Z_N`, in replica order.
    pub per_replica: Vec<f64>,
    /// Mean of `(1/n) log Z_n` at each checkpoint, to exhibit convergence.
    pub checkpoint_means: Vec<(u64, f64)>,
}

/// Estimate `p(beta)` as the ensemble mean of `(1/N) log Z_N`.
pub fn estimate_free_energy(config: &EnsembleConfig) -> Result<FreeEnergyEstimate> {
    if config.replicas < 2 {
        return Err(Error::InsufficientData("need at least 2 replicas".into()));
    }
    let results = run_ensemble(config)?;
    free_energy_from_results(config, &results)
}

/// Same estimator from already-computed replica results.
pub fn free_energy_from_results(
    config: &EnsembleConfig,
    results: &[ReplicaResult],
) -> Result<FreeEnergyEstimate> {
    let n = config.horizon;
    let per_replica: Vec<f64> = results
        .iter()
        .map(|r| r.checkpoints.last().expect("nonempty schedule").log_z / n as f64)
        .collect();
    let (mean, se) = mean_se(&per_replica);
    let robust = median_of_means(&per_replica, 10.min(results.len() / 2).max(1));
    let schedule_len = results[0].checkpoints.len();
    let checkpoint_means: Vec<(u64, f64)> = (0..schedule_len)
        .map(|i| {
            let ni = results[0].checkpoints[i].n;
            let m = results
                .iter()
                .map(|r| r.checkpoints[i].log_z / ni as f64)
                .sum::<f64>()
                / results.len() as f64;
            (ni, m)
        })
        .collect();
    Ok(FreeEnergyEstimate {
        beta: config.beta,
        gamma: config.gamma,
        d: config.d,
        n,
        replicas: results.len(),
        mean,
        se,
        robust,
        per_replica,
        checkpoint_means,
    })
}
