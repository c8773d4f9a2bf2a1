//! Exact transfer-matrix evolution of the point-to-plane partition
//! function for a fixed environment realization.
//!
//! The front at time `n` is a sparse map from reachable lattice sites to
//! path weights; one step spreads it through the simple-random-walk kernel
//! and multiplies in the slice-`n+1` environment weights. `Z_n` spans
//! hundreds of orders of magnitude, so a running logarithm is extracted
//! whenever the maximal weight leaves `[1e-2, 1e2]`.

mod enumerate;
mod replica;

pub use enumerate::{brute_force_endpoint, brute_force_z};
pub use replica::{geometric_schedule, run_replica, Checkpoint, ReplicaResult};

use crate::env::EnvField;
use crate::error::{Error, Result};
use crate::rng::splitmix64;
use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

/// Hasher with a fixed key so map iteration order is a pure function of
/// the inserted keys — no per-process randomness, reproducible runs.
#[derive(Default)]
pub struct SiteHasher(u64);

impl Hasher for SiteHasher {
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = splitmix64(self.0 ^ b as u64);
        }
    }

    fn write_u64(&mut self, key: u64) {
        self.0 = splitmix64(key);
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

pub type SiteMap = HashMap<u64, f64, BuildHasherDefault<SiteHasher>>;

/// Packs a lattice site of `Z^d` with coordinates in `[-reach, reach]`
/// into a single `u64` key.
#[derive(Clone, Copy, Debug)]
pub struct SiteCodec {
    d: usize,
    reach: i64,
    bits: u32,
}

impl SiteCodec {
    pub fn new(d: usize, reach: i64) -> Result<Self> {
        let span = 2 * reach as u64 + 1;
        let bits = 64 - span.leading_zeros();
        if d as u32 * bits > 64 {
            return Err(Error::ResourceRefusal(format!(
                "cannot pack {d} coordinates of reach {reach} into 64 bits"
            )));
        }
        Ok(Self { d, reach, bits })
    }

    #[inline]
    pub fn encode(&self, site: &[i64]) -> u64 {
        debug_assert_eq!(site.len(), self.d);
        let mut key = 0u64;
        for &c in site {
            debug_assert!(c.abs() <= self.reach);
            key = (key << self.bits) | (c + self.reach) as u64;
        }
        key
    }

    #[inline]
    pub fn decode(&self, mut key: u64, site: &mut [i64]) {
        let mask = (1u64 << self.bits) - 1;
        for i in (0..self.d).rev() {
            site[i] = (key & mask) as i64 - self.reach;
            key >>= self.bits;
        }
    }
}

/// How the environment enters the path weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightMode {
    /// `1 + beta * omega`.
    Plain,
    /// `(1 + beta * (omega ^ level)) / c_beta` — capped environment with
    /// its normalizer, so the weights again average to one.
    Truncated { level: f64, c_beta: f64 },
}

/// Full specification of one polymer evolution.
#[derive(Clone, Debug)]
pub struct ModelParams {
    pub d: usize,
    pub beta: f64,
    pub horizon: u64,
    pub field: EnvField,
    pub weight_mode: WeightMode,
    /// Refuse to grow the front beyond this many sites.
    pub site_budget: usize,
    /// Drop sites whose weight falls below `threshold * max_weight`;
    /// 0.0 keeps the evolution exact.
    pub prune_threshold: f64,
}

impl ModelParams {
    pub fn new(d: usize, beta: f64, horizon: u64, field: EnvField) -> Result<Self> {
        if d < 1 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::Domain(format!("beta must lie in [0, 1), got {beta}")));
        }
        Ok(Self {
            d,
            beta,
            horizon,
            field,
            weight_mode: WeightMode::Plain,
            site_budget: 50_000_000,
            prune_threshold: 0.0,
        })
    }

    fn env_weight(&self, n: u64, site: &[i64]) -> f64 {
        let omega = self.field.value(n, site);
        match self.weight_mode {
            WeightMode::Plain => 1.0 + self.beta * omega,
            WeightMode::Truncated { level, c_beta } => {
                (1.0 + self.beta * omega.min(level)) / c_beta
            }
        }
    }
}

/// Sparse weight front of the partition function at a fixed time.
#[derive(Clone, Debug)]
pub struct DPFront {
    pub time: u64,
    pub weights: SiteMap,
    pub log_scale: f64,
    codec: SiteCodec,
    /// Replica-overlap value `I_n` of the step that produced this front
    /// (collision probability of two independent polymers at time `n`
    /// under the time-`n-1` measure); 0 at time 0.
    pub arrival_overlap: f64,
}

impl DPFront {
    /// Point mass at the origin, time 0, `Z_0 = 1`.
    pub fn origin(params: &ModelParams) -> Result<Self> {
        let codec = SiteCodec::new(params.d, params.horizon as i64 + 1)?;
        let mut weights = SiteMap::default();
        weights.insert(codec.encode(&vec![0; params.d]), 1.0);
        Ok(Self { time: 0, weights, log_scale: 0.0, codec, arrival_overlap: 0.0 })
    }

    pub fn sum(&self) -> f64 {
        let mut keys: Vec<u64> = self.weights.keys().copied().collect();
        keys.sort_unstable();
        keys.iter().map(|k| self.weights[k]).sum()
    }

    /// `log Z_n` for this realization.
    pub fn log_partition(&self) -> f64 {
        self.log_scale + self.sum().ln()
    }

    /// Endpoint law `mu_n` as (site, probability) pairs in key order.
    pub fn endpoint_distribution(&self) -> Vec<(Vec<i64>, f64)> {
        let total = self.sum();
        let mut keys: Vec<u64> = self.weights.keys().copied().collect();
        keys.sort_unstable();
        keys.iter()
            .map(|&k| {
                let mut site = vec![0i64; self.codec.d];
                self.codec.decode(k, &mut site);
                (site, self.weights[&k] / total)
            })
            .collect()
    }

    pub fn max_endpoint_prob(&self) -> f64 {
        let total = self.sum();
        self.weights.values().cloned().fold(0.0, f64::max) / total
    }

    pub fn probability_at(&self, site: &[i64]) -> f64 {
        self.weights
            .get(&self.codec.encode(site))
            .map(|w| w / self.sum())
            .unwrap_or(0.0)
    }

    /// Advance one time slice: spread through the walk kernel, record the
    /// overlap of the arrival law, multiply in the environment.
    pub fn step(&mut self, params: &ModelParams) -> Result<()> {
        let n_next = self.time + 1;
        if n_next > params.horizon {
            return Err(Error::Precondition(format!(
                "step beyond horizon {} requested", params.horizon
            )));
        }
        let inv = 1.0 / (2 * params.d) as f64;
        let mut spread = SiteMap::default();
        spread.reserve(self.weights.len() * 2);
        let mut site = vec![0i64; params.d];
        for (&key, &w) in &self.weights {
            self.codec.decode(key, &mut site);
            let part = w * inv;
            for j in 0..params.d {
                for delta in [-1i64, 1] {
                    site[j] += delta;
                    *spread.entry(self.codec.encode(&site)).or_insert(0.0) += part;
                    site[j] -= delta;
                }
            }
        }
        if spread.len() > params.site_budget {
            return Err(Error::ResourceRefusal(format!(
                "front grew to {} sites at time {n_next}, budget {}",
                spread.len(),
                params.site_budget
            )));
        }

        // Overlap of two independent replicas meeting at time n+1, under
        // the time-n measure: sum of squared arrival probabilities.
        let prev_sum: f64 = {
            let mut keys: Vec<u64> = self.weights.keys().copied().collect();
            keys.sort_unstable();
            keys.iter().map(|k| self.weights[k]).sum()
        };
        let overlap: f64 = spread.values().map(|&s| s * s).sum::<f64>() / (prev_sum * prev_sum);

        let mut max_w = 0.0f64;
        for (&key, s) in spread.iter_mut() {
            self.codec.decode(key, &mut site);
            *s *= params.env_weight(n_next, &site);
            debug_assert!(s.is_finite() && *s >= 0.0);
            max_w = max_w.max(*s);
        }
        if params.prune_threshold > 0.0 {
            let cut = params.prune_threshold * max_w;
            spread.retain(|_, w| *w >= cut);
        }
        if !(1e-2..=1e2).contains(&max_w) {
            let ln_max = max_w.ln();
            for w in spread.values_mut() {
                *w /= max_w;
            }
            self.log_scale += ln_max;
        }
        self.time = n_next;
        self.weights = spread;
        self.arrival_overlap = overlap;
        self.assert_support(params);
        Ok(())
    }

    fn assert_support(&self, params: &ModelParams) {
        if cfg!(debug_assertions) {
            let mut site = vec![0i64; params.d];
            for &key in self.weights.keys() {
                self.codec.decode(key, &mut site);
                let l1: i64 = site.iter().map(|c| c.abs()).sum();
                assert!(l1 <= self.time as i64, "front escaped the light cone");
                assert_eq!(
                    l1 % 2,
                    (self.time % 2) as i64,
                    "front site has wrong parity"
                );
            }
        }
    }
}

/// `log Z_N` for the given parameters, evolving from the origin.
pub fn log_partition(params: &ModelParams) -> Result<f64> {
    let mut front = DPFront::origin(params)?;
    for _ in 0..params.horizon {
        front.step(params)?;
    }
    Ok(front.log_partition())
}

/// Replica overlap `I_n` from the front at time `n-1` (standalone form of
/// the quantity [`DPFront::step`] tracks as it runs).
pub fn overlap_at(front: &DPFront, params: &ModelParams) -> f64 {
    let inv = 1.0 / (2 * params.d) as f64;
    let mut spread = SiteMap::default();
    let mut site = vec![0i64; params.d];
    for (&key, &w) in &front.weights {
        front.codec.decode(key, &mut site);
        let part = w * inv;
        for j in 0..params.d {
            for delta in [-1i64, 1] {
                site[j] += delta;
                *spread.entry(front.codec.encode(&site)).or_insert(0.0) += part;
                site[j] -= delta;
            }
        }
    }
    let total = front.sum();
    spread.values().map(|&s| s * s).sum::<f64>() / (total * total)
}
