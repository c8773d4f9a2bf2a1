//! Sweep configuration: TOML schema, validation, and content hashing.

use dpre_core::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepConfig {
    pub base_seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub cells: Vec<CellConfig>,
}

fn default_workers() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellConfig {
    pub d: usize,
    pub gamma: f64,
    pub beta: f64,
    pub n: u64,
    pub replicas: usize,
    /// Fractional-moment exponent for the certificate column (default 0.5).
    pub theta: Option<f64>,
    /// Truncation exponent: run with the capped, renormalized environment.
    pub kappa: Option<f64>,
    /// Drop front sites below this fraction of the maximal weight.
    pub prune_threshold: Option<f64>,
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: SweepConfig = toml::from_str(text)
            .map_err(|e| Error::Domain(format!("config parse error: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::Domain("config has no cells".into()));
        }
        if self.workers < 1 {
            return Err(Error::Domain("workers must be at least 1".into()));
        }
        for (i, cell) in self.cells.iter().enumerate() {
            cell.validate()
                .map_err(|e| Error::Domain(format!("cell {i}: {e}")))?;
        }
        Ok(())
    }
}

impl CellConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(Error::Domain("d must be at least 1".into()));
        }
        if !(self.gamma > 1.0 && self.gamma < 2.0) {
            return Err(Error::Domain(format!(
                "gamma must lie in (1, 2), got {}",
                self.gamma
            )));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::Domain(format!(
                "beta must lie in [0, 1), got {}",
                self.beta
            )));
        }
        if self.replicas < 2 {
            return Err(Error::Domain("replicas must be at least 2".into()));
        }
        if let Some(theta) = self.theta {
            if !(theta > 0.0 && theta < 1.0) {
                return Err(Error::Domain(format!(
                    "theta must lie in (0, 1), got {theta}"
                )));
            }
        }
        if let Some(kappa) = self.kappa {
            if kappa <= 0.0 {
                return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
            }
            if self.beta == 0.0 {
                return Err(Error::Domain("truncation requires beta > 0".into()));
            }
        }
        if let Some(p) = self.prune_threshold {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::Domain(format!(
                    "prune_threshold must lie in [0, 1), got {p}"
                )));
            }
        }
        Ok(())
    }
}

/// Content hash of the configuration file, quoted in every output row.
pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}
