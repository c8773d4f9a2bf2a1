//! Two-walk collision probabilities and the first-meeting renewal kernel.
//!
//! For two independent walks, `S_n - S'_n` is again a simple random walk
//! run at double speed, so the collision probability is the exact return
//! probability `u(n) = p_{2n}(0)`. That closed combinatorial form (a
//! multinomial sum over even step splits, evaluated with log-factorials)
//! replaces the quadratic-memory alternative of squaring the full n-step
//! law, and stays exact out to large horizons in any dimension.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// ln n! via lgamma-free accumulation (exact table up to the horizon).
fn ln_factorials(n_max: usize) -> Vec<f64> {
    let mut t = vec![0.0; n_max + 1];
    for i in 1..=n_max {
        t[i] = t[i - 1] + (i as f64).ln();
    }
    t
}

/// Exact collision probabilities `u(n) = P[S_n = S'_n]`, `n = 0..n_max`.
///
/// `u(n) = (2n)! / (2d)^{2n} * sum over k_1+...+k_d = n of prod 1/(k_i!)^2`.
pub fn collision_prob(d: usize, n_max: usize) -> Result<Vec<f64>> {
    if d < 1 || n_max < 1 {
        return Err(Error::Domain("need d >= 1 and n_max >= 1".into()));
    }
    // Composition count C(n+d-1, d-1) per time slice; refuse absurd work.
    let mut comps: f64 = 1.0;
    for i in 0..d - 1 {
        comps *= (n_max + 1 + i) as f64 / (i + 1) as f64;
    }
    if comps * n_max as f64 > 5e8 {
        return Err(Error::ResourceRefusal(format!(
            "collision kernel for d={d}, n_max={n_max} needs ~{:.1e} terms",
            comps * n_max as f64
        )));
    }
    let lf = ln_factorials(2 * n_max);
    let mut u = vec![0.0; n_max + 1];
    u[0] = 1.0;
    let ln_2d = (2 * d) as f64;
    let mut parts = vec![0usize; d];
    for n in 1..=n_max {
        let base = lf[2 * n] - 2.0 * n as f64 * ln_2d.ln();
        let mut terms: Vec<f64> = Vec::new();
        compositions(n, d, &mut parts, 0, &mut |parts: &[usize]| {
            terms.push(-2.0 * parts.iter().map(|&k| lf[k]).sum::<f64>());
        });
        let mx = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = terms.iter().map(|t| (t - mx).exp()).sum();
        u[n] = (base + mx).exp() * s;
    }
    Ok(u)
}

fn compositions<F: FnMut(&[usize])>(rem: usize, d: usize, parts: &mut Vec<usize>, idx: usize, f: &mut F) {
    if idx == d - 1 {
        parts[idx] = rem;
        f(parts);
        return;
    }
    for k in 0..=rem {
        parts[idx] = k;
        compositions(rem - k, d, parts, idx + 1, f);
    }
}

/// Reference `u(n)` by squaring the exact n-step lattice law (test oracle
/// for small horizons; exponential in memory for large ones).
#[cfg(test)]
pub fn collision_prob_lattice(d: usize, n: usize) -> f64 {
    use std::collections::HashMap;
    let mut front: HashMap<Vec<i64>, f64> = HashMap::new();
    front.insert(vec![0; d], 1.0);
    let inv = 1.0 / (2 * d) as f64;
    for _ in 0..n {
        let mut next: HashMap<Vec<i64>, f64> = HashMap::new();
        for (site, w) in &front {
            for j in 0..d {
                for delta in [-1i64, 1] {
                    let mut s = site.clone();
                    s[j] += delta;
                    *next.entry(s).or_insert(0.0) += w * inv;
                }
            }
        }
        front = next;
    }
    front.values().map(|w| w * w).sum()
}

/// Collision probabilities plus the deconvolved first-meeting kernel.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RenewalKernel {
    pub d: usize,
    pub n_max: usize,
    /// `u(n)`, index 0..=n_max.
    pub u: Vec<f64>,
    /// `K(n)`, index 0..=n_max with `K(0) = 0` by convention.
    pub k: Vec<f64>,
    /// Running sums of `K`.
    pub partial_sum_k: Vec<f64>,
}

impl RenewalKernel {
    pub fn build(d: usize, n_max: usize) -> Result<Self> {
        let u = collision_prob(d, n_max)?;
        let k = kernel_from_u(&u)?;
        let mut partial_sum_k = vec![0.0; n_max + 1];
        for n in 1..=n_max {
            partial_sum_k[n] = partial_sum_k[n - 1] + k[n];
        }
        if d >= 3 && partial_sum_k[n_max] >= 1.0 {
            return Err(Error::Numerical(format!(
                "transient walk produced recurrent kernel mass {}",
                partial_sum_k[n_max]
            )));
        }
        Ok(Self { d, n_max, u, k, partial_sum_k })
    }

    /// Renewal mass function `P[n in renewal set]` — reconvolution of `K`,
    /// which must reproduce `u` (identity checked in tests).
    pub fn renewal_mass(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_max + 1];
        m[0] = 1.0;
        for n in 1..=self.n_max {
            m[n] = (1..=n).map(|j| self.k[j] * m[n - j]).sum();
        }
        m
    }

    /// Largest `K(n) n^{d/2}` over the last computed decade — the constant
    /// of the polynomial tail envelope used to bound the sum beyond n_max.
    pub fn tail_envelope_constant(&self) -> f64 {
        (self.n_max / 2..=self.n_max)
            .map(|n| self.k[n] * (n as f64).powf(self.d as f64 / 2.0))
            .fold(0.0, f64::max)
    }

    /// CSV export: `n,u,K,partial_sum_K` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,u,K,partial_sum_K\n");
        for n in 0..=self.n_max {
            out.push_str(&format!(
                "{n},{:.17e},{:.17e},{:.17e}\n",
                self.u[n], self.k[n], self.partial_sum_k[n]
            ));
        }
        out
    }
}

/// First-passage deconvolution: `K(n) = u(n) - sum_{k<n} K(k) u(n-k)`.
pub fn kernel_from_u(u: &[f64]) -> Result<Vec<f64>> {
    if u.is_empty() || (u[0] - 1.0).abs() > 1e-15 {
        return Err(Error::Precondition("u(0) must be 1".into()));
    }
    let mut k = vec![0.0; u.len()];
    for n in 1..u.len() {
        let conv: f64 = (1..n).map(|j| k[j] * u[n - j]).sum();
        k[n] = u[n] - conv;
        if k[n] < -1e-10 {
            return Err(Error::Numerical(format!(
                "deconvolved kernel went negative at n={n}: {}",
                k[n]
            )));
        }
        k[n] = k[n].max(0.0);
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collision_prob_small_values() {
        let u1 = collision_prob(1, 4).unwrap();
        assert!((u1[1] - 0.5).abs() < 1e-14);
        assert!((u1[2] - 0.375).abs() < 1e-14);
        let u3 = collision_prob(3, 2).unwrap();
        assert!((u3[1] - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn collision_prob_matches_lattice_oracle() {
        for d in 1..=3 {
            let u = collision_prob(d, 8).unwrap();
            for n in 1..=8 {
                let oracle = collision_prob_lattice(d, n);
                assert!(
                    (u[n] - oracle).abs() < 1e-12,
                    "d={d} n={n}: {} vs {oracle}",
                    u[n]
                );
            }
        }
    }

    #[test]
    fn collision_prob_polynomial_decay() {
        for d in 1..=3 {
            let u = collision_prob(d, 200).unwrap();
            // u(n) n^{d/2} settles towards a constant over n in [50, 200].
            let r50 = u[50] * 50f64.powf(d as f64 / 2.0);
            let r200 = u[200] * 200f64.powf(d as f64 / 2.0);
            assert!((r50 / r200 - 1.0).abs() < 0.02, "d={d}: {r50} vs {r200}");
            for n in 1..=200 {
                assert!(u[n] <= u[n - 1] + 1e-15);
            }
        }
    }

    #[test]
    fn collision_prob_frozen_values() {
        // Independently computed with exact rational/multi-precision sums.
        let u = collision_prob(3, 200).unwrap();
        assert!((u[10] - 7.108_354_149_086_718e-3).abs() < 1e-15);
        assert!((u[200] - 8.232_621_101_955_05e-5).abs() < 1e-15);
    }

    #[test]
    fn kernel_small_values() {
        let kern = RenewalKernel::build(1, 40).unwrap();
        assert!((kern.k[1] - 0.5).abs() < 1e-14);
        assert!((kern.k[2] - 0.125).abs() < 1e-14);
        assert!((kern.k[3] - 0.0625).abs() < 1e-13);
        let kern3 = RenewalKernel::build(3, 20).unwrap();
        assert!((kern3.k[1] - 1.0 / 6.0).abs() < 1e-14);
        assert!((kern3.k[10] - 3.290_087_962_699_142e-3).abs() < 1e-14);
    }

    #[test]
    fn renewal_identity_holds() {
        for d in [1, 3] {
            let kern = RenewalKernel::build(d, 150).unwrap();
            let mass = kern.renewal_mass();
            for n in 0..=150 {
                assert!(
                    (mass[n] - kern.u[n]).abs() < 1e-12,
                    "d={d} n={n}: {} vs {}",
                    mass[n],
                    kern.u[n]
                );
            }
        }
    }

    #[test]
    fn kernel_mass_dichotomy() {
        // Recurrent (d <= 2): partial sums creep towards 1.
        let k1 = RenewalKernel::build(1, 400).unwrap();
        let s1 = k1.partial_sum_k[400];
        assert!(s1 > 0.95 && s1 < 1.0, "{s1}");
        // Transient (d = 3): mass stays below 1 and agrees with the
        // renewal identity sum K = 1 - 1/sum u, improving in n_max.
        let k3 = RenewalKernel::build(3, 200).unwrap();
        let s3 = k3.partial_sum_k[200];
        assert!(s3 < 0.5);
        let su: f64 = k3.u.iter().sum();
        let via_u = 1.0 - 1.0 / su;
        assert!((s3 - via_u).abs() < 1e-3, "{s3} vs {via_u}");
    }

    #[test]
    fn tail_envelope_is_tight() {
        let k3 = RenewalKernel::build(3, 200).unwrap();
        let c = k3.tail_envelope_constant();
        assert!(c > 0.05 && c < 0.2, "{c}");
        for n in 100..=200 {
            assert!(k3.k[n] <= c * (n as f64).powf(-1.5) + 1e-18);
        }
    }

    #[test]
    fn resource_refusal() {
        assert!(collision_prob(6, 10_000).is_err());
    }

    #[test]
    fn csv_shape() {
        let k = RenewalKernel::build(1, 3).unwrap();
        let csv = k.to_csv();
        assert!(csv.starts_with("n,u,K,partial_sum_K\n"));
        assert_eq!(csv.lines().count(), 5);
    }
}
