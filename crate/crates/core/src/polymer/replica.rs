//! Single-replica driver: one pass over the horizon collecting log Z, the
//! overlap series, and endpoint concentration at scheduled checkpoints.

use super::{DPFront, ModelParams};
use crate::error::Result;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: u64,
    pub log_z: f64,
    /// Overlap `I_n` at this time.
    pub overlap: f64,
    /// Running sum of `I_k` for `k <= n` (the quantity whose divergence
    /// signals strong disorder).
    pub overlap_sum: f64,
    pub max_endpoint_prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaResult {
    pub seed: u64,
    pub checkpoints: Vec<Checkpoint>,
    /// Largest front encountered, for resource accounting.
    pub max_front_sites: usize,
}

/// Geometric checkpoint schedule `{1, 2, 4, ...} ∪ {N}`.
pub fn geometric_schedule(horizon: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut n = 1;
    while n < horizon {
        out.push(n);
        n *= 2;
    }
    if horizon >= 1 {
        out.push(horizon);
    }
    out
}

/// Evolve one replica and record the scheduled checkpoints.
///
/// Deterministic in `(params.field.seed(), params)`; the schedule must be
/// sorted and contained in `[1, horizon]`.
pub fn run_replica(params: &ModelParams, schedule: &[u64]) -> Result<ReplicaResult> {
    debug_assert!(schedule.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(schedule.iter().all(|&n| n >= 1 && n <= params.horizon));
    let mut front = DPFront::origin(params)?;
    let mut checkpoints = Vec::with_capacity(schedule.len());
    let mut overlap_sum = 0.0;
    let mut max_front_sites = 1;
    let mut next = schedule.iter().copied().peekable();
    for _ in 0..params.horizon {
        front.step(params)?;
        overlap_sum += front.arrival_overlap;
        max_front_sites = max_front_sites.max(front.weights.len());
        if next.peek() == Some(&front.time) {
            next.next();
            checkpoints.push(Checkpoint {
                n: front.time,
                log_z: front.log_partition(),
                overlap: front.arrival_overlap,
                overlap_sum,
                max_endpoint_prob: front.max_endpoint_prob(),
            });
        }
    }
    Ok(ReplicaResult {
        seed: params.field.seed(),
        checkpoints,
        max_front_sites,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvField, GammaEnvSpec};

    fn params(seed: u64) -> ModelParams {
        let field = EnvField::new(GammaEnvSpec::new(1.5).unwrap(), seed);
        ModelParams::new(1, 0.5, 32, field).unwrap()
    }

    #[test]
    fn schedule_shape() {
        assert_eq!(geometric_schedule(10), vec![1, 2, 4, 8, 10]);
        assert_eq!(geometric_schedule(8), vec![1, 2, 4, 8]);
        assert_eq!(geometric_schedule(1), vec![1]);
        assert!(geometric_schedule(0).is_empty());
    }

    #[test]
    fn replica_is_deterministic() {
        let p = params(1234);
        let a = run_replica(&p, &geometric_schedule(32)).unwrap();
        let b = run_replica(&p, &geometric_schedule(32)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn checkpoint_invariants() {
        let p = params(5);
        let r = run_replica(&p, &geometric_schedule(32)).unwrap();
        assert_eq!(r.checkpoints.last().unwrap().n, 32);
        let mut prev_sum = 0.0;
        for c in &r.checkpoints {
            assert!(c.overlap > 0.0 && c.overlap <= 1.0);
            assert!(c.max_endpoint_prob > 0.0 && c.max_endpoint_prob <= 1.0);
            assert!(c.overlap_sum > prev_sum, "overlap sums must increase");
            prev_sum = c.overlap_sum;
        }
    }

    #[test]
    fn matches_direct_log_partition() {
        let p = params(9);
        let r = run_replica(&p, &[32]).unwrap();
        let lp = crate::polymer::log_partition(&p).unwrap();
        assert_eq!(r.checkpoints[0].log_z, lp);
    }
}
