//! Shared cell execution: run one sweep cell, produce its JSONL replica
//! records and its aggregate summary row.

use crate::config::CellConfig;
use dpre_core::analysis::{
    fm_bound_from_results, free_energy_from_results, probe_from_results, run_ensemble,
    EnsembleConfig, FractionalMomentConfig, ProbeThresholds,
};
use dpre_core::polymer::ReplicaResult;
use dpre_core::rng::mix;
use dpre_core::Result;
use serde::{Deserialize, Serialize};

/// One row of the aggregate table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellSummary {
    pub beta: f64,
    pub gamma: f64,
    pub d: usize,
    pub n: u64,
    pub p_hat: f64,
    pub se: f64,
    /// Fractional-moment upper confidence bound on the free energy.
    pub bound: f64,
    pub diagnosis: String,
    pub cell_seed: u64,
}

pub const AGGREGATE_HEADER: &str = "beta,gamma,d,n,p_hat,se,bound,diagnosis,config_hash,seed\n";

impl CellSummary {
    pub fn to_csv_row(&self, config_hash: &str) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            self.beta,
            self.gamma,
            self.d,
            self.n,
            self.p_hat,
            self.se,
            self.bound,
            self.diagnosis,
            config_hash,
            self.cell_seed
        )
    }
}

pub fn ensemble_config(cell: &CellConfig, base_seed: u64, cell_index: usize) -> EnsembleConfig {
    let mut config = EnsembleConfig::new(
        cell.d,
        cell.gamma,
        cell.beta,
        cell.n,
        cell.replicas,
        mix(base_seed, cell_index as u64),
    );
    config.truncation_kappa = cell.kappa;
    config.prune_threshold = cell.prune_threshold.unwrap_or(0.0);
    config
}

/// Replica records as JSON lines: one record per checkpoint.
pub fn results_to_jsonl(results: &[ReplicaResult]) -> String {
    let mut out = String::new();
    for r in results {
        for c in &r.checkpoints {
            out.push_str(&format!(
                "{{\"seed\":{},\"n\":{},\"logZ\":{},\"overlap\":{},\"max_endpoint_prob\":{}}}\n",
                r.seed, c.n, c.log_z, c.overlap, c.max_endpoint_prob
            ));
        }
    }
    out
}

/// Execute one cell: ensemble, estimate, certificate, and diagnosis.
pub fn run_cell(
    cell: &CellConfig,
    base_seed: u64,
    cell_index: usize,
) -> Result<(String, CellSummary)> {
    let config = ensemble_config(cell, base_seed, cell_index);
    let results = run_ensemble(&config)?;
    let est = free_energy_from_results(&config, &results)?;
    let theta = cell.theta.unwrap_or(0.5);
    let fm = FractionalMomentConfig {
        theta,
        certified: theta <= 0.5,
        ..FractionalMomentConfig::default()
    };
    let bound = fm_bound_from_results(&config, &fm, &results)?;
    let diagnosis = if results[0].checkpoints.len() >= 2 {
        probe_from_results(&config, &ProbeThresholds::default(), &results)?
            .diagnosis
            .to_string()
    } else {
        "inconclusive".to_string()
    };
    let summary = CellSummary {
        beta: cell.beta,
        gamma: cell.gamma,
        d: cell.d,
        n: cell.n,
        p_hat: est.mean,
        se: est.se,
        bound: bound.bound_ucl,
        diagnosis,
        cell_seed: config.base_seed,
    };
    Ok((results_to_jsonl(&results), summary))
}
