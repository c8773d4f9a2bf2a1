//! Size-biased (tilted) and truncated variants of the environment law,
//! plus the scalar moment functionals driving the pinning estimates.

use super::GammaEnvSpec;
use crate::error::{Error, Result};
use crate::quad;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Law reweighted by `(1 + beta * omega)`; a valid probability because the
/// base law is centered.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TiltedEnvSpec {
    base: GammaEnvSpec,
    beta: f64,
}

impl TiltedEnvSpec {
    pub fn new(base: GammaEnvSpec, beta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::Domain(format!("beta must lie in [0, 1), got {beta}")));
        }
        Ok(Self { base, beta })
    }

    pub fn base(&self) -> &GammaEnvSpec {
        &self.base
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Tilted CDF `E[(1 + beta*omega) 1{omega <= x}]`, in closed form.
    pub fn cdf(&self, x: f64) -> f64 {
        self.base.cdf(x) + self.beta * self.base.partial_mean(x)
    }

    /// Tilted survival `P~[omega~ > x]`.
    pub fn survival(&self, x: f64) -> f64 {
        self.base.survival(x) + self.beta * self.base.upper_mean(x)
    }

    pub fn density(&self, x: f64) -> f64 {
        (1.0 + self.beta * x) * self.base.density(x)
    }

    /// Draw from the tilted law by inverting the closed-form CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v: f64 = rng.gen();
        invert_cdf(|x| self.cdf(x), |x| self.density(x), v)
    }
}

/// Environment capped at `beta^{-kappa}`, with its reweighting normalizer.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TruncationSpec {
    base: GammaEnvSpec,
    beta: f64,
    kappa: f64,
    level: f64,
    c_beta: f64,
}

impl TruncationSpec {
    pub fn new(base: GammaEnvSpec, beta: f64, kappa: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Domain(format!("beta must lie in (0, 1), got {beta}")));
        }
        if !(kappa > 0.0) {
            return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
        }
        let level = beta.powf(-kappa);
        // c_beta = E[1 + beta (omega ^ level)] in closed form.
        let c_beta =
            1.0 + beta * (base.partial_mean(level) + level * base.survival(level));
        debug_assert!(c_beta > 1.0 - beta && c_beta <= 1.0 + 1e-15);
        Ok(Self { base, beta, kappa, level, c_beta })
    }

    pub fn base(&self) -> &GammaEnvSpec {
        &self.base
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Truncation level `beta^{-kappa}`.
    pub fn level(&self) -> f64 {
        self.level
    }

    /// Normalizer `c_beta = E[1 + beta (omega ^ level)]`, in (1 - beta, 1].
    pub fn c_beta(&self) -> f64 {
        self.c_beta
    }

    pub fn log_c_beta(&self) -> f64 {
        self.c_beta.ln()
    }

    /// Truncated weight `(1 + beta (x ^ level)) / c_beta`.
    pub fn weight(&self, x: f64) -> f64 {
        (1.0 + self.beta * x.min(self.level)) / self.c_beta
    }

    /// CDF of the law reweighted by [`Self::weight`], closed form with the
    /// kink at the truncation level handled piecewise.
    pub fn tilted_cdf(&self, x: f64) -> f64 {
        let b = self.beta;
        let l = self.level;
        let num = if x <= l {
            self.base.cdf(x) + b * self.base.partial_mean(x)
        } else {
            self.base.cdf(x)
                + b * (self.base.partial_mean(l) + l * (self.base.cdf(x) - self.base.cdf(l)))
        };
        num / self.c_beta
    }

    /// Draw from the truncated tilted law; output never exceeds the level.
    pub fn sample_tilted<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v: f64 = rng.gen();
        let at_level = self.tilted_cdf(self.level);
        if v >= at_level {
            return self.level;
        }
        let dens = |x: f64| (1.0 + self.beta * x.min(self.level)) * self.base.density(x) / self.c_beta;
        invert_cdf(|x| self.tilted_cdf(x), dens, v).min(self.level)
    }
}

/// Admissible `kappa` interval for a target exponent defect `eps`:
/// `(gc/(gc - gamma) - eps/(gamma - 1), gc/(gc - gamma))` with
/// `gc = 1 + 2/d`. Only meaningful for `gamma < gc`.
pub fn kappa_window(gamma: f64, d: usize, eps: f64) -> Result<(f64, f64)> {
    let gc = 1.0 + 2.0 / d as f64;
    if gamma >= gc {
        return Err(Error::Precondition(format!(
            "kappa window requires gamma < gamma_c = {gc}, got {gamma}"
        )));
    }
    let hi = gc / (gc - gamma);
    Ok((hi - eps / (gamma - 1.0), hi))
}

/// `E[(1 + beta*omega)^{1+q}]`.
///
/// Finite exactly when `q < gamma - 1`; returns `f64::INFINITY` on the
/// divergent branch (decided analytically, not by the quadrature).
/// The integral is evaluated in survival coordinates with the power
/// substitution `u = t^p`, which turns the algebraic endpoint blowup into
/// a C^2 integrand.
pub fn moment_m(spec: &GammaEnvSpec, beta: f64, q: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::Domain(format!("beta must lie in [0, 1), got {beta}")));
    }
    if q < 0.0 {
        return Err(Error::Domain(format!("q must be nonnegative, got {q}")));
    }
    let g = spec.gamma();
    if q >= g - 1.0 {
        return Ok(f64::INFINITY);
    }
    if beta == 0.0 {
        return Ok(1.0);
    }
    let s = 1.0 - (1.0 + q) / g; // positive tail margin
    let p = 3.0 / s;
    let f = move |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let log_u = p * t.ln();
        if log_u < -690.0 {
            // u underflows; use the exact power-law asymptote of the weight.
            let log_c = (1.0 + q) * (beta * (g - 1.0)).ln();
            return (log_c + p.ln() + (p * s - 1.0) * t.ln()).exp();
        }
        let u = log_u.exp();
        let x = spec.quantile_unchecked(u);
        let lw = (1.0 + q) * (1.0 + beta * x).ln();
        (lw + p.ln() + (p - 1.0) * t.ln()).exp()
    };
    quad::adaptive_simpson(&f, 0.0, 1.0, 1e-9, 0.0)
}

/// Result of [`truncated_moment_ratio`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TruncatedMomentRatio {
    pub value: f64,
    /// `(1 - kappa)(1 + q) + kappa*gamma`; the ratio tends to 1 as
    /// `beta -> 0` only when this is positive.
    pub exponent: f64,
    pub exponent_condition_ok: bool,
}

/// `E[((1 + beta (omega ^ level)) / c_beta)^{1+q}]` by quadrature split at
/// the truncation kink, relative tolerance 1e-9.
pub fn truncated_moment_ratio(spec: &TruncationSpec, q: f64) -> Result<TruncatedMomentRatio> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("q must lie in (0, 1), got {q}")));
    }
    let base = spec.base();
    let b = spec.beta();
    let l = spec.level();
    let cb = spec.c_beta();
    let exponent = (1.0 - spec.kappa()) * (1.0 + q) + spec.kappa() * base.gamma();
    let u_l = base.survival(l);
    // Piece above the level: constant weight times the tail mass.
    let atom = u_l * ((1.0 + b * l) / cb).powf(1.0 + q);
    // Piece below the level, integrated in log-survival coordinates.
    let t_max = -u_l.ln();
    let f = move |t: f64| {
        let u = (-t).exp();
        let x = base.quantile_unchecked(u);
        let lw = (1.0 + q) * ((1.0 + b * x).ln() - cb.ln());
        (lw - t).exp()
    };
    let mut breaks = vec![0.0];
    let mut t = 1.0;
    while t < t_max {
        breaks.push(t);
        t *= 2.0;
    }
    breaks.push(t_max);
    let body = quad::panels(&f, &breaks, 1e-9)?;
    Ok(TruncatedMomentRatio {
        value: atom + body,
        exponent,
        exponent_condition_ok: exponent > 0.0,
    })
}

/// Safeguarded Newton/bisection inversion of a monotone CDF on [-1, inf),
/// to interval width 1e-12 (absolute, relative for large roots).
fn invert_cdf<C, D>(cdf: C, density: D, v: f64) -> f64
where
    C: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    if v <= 0.0 {
        return -1.0;
    }
    let mut lo = -1.0f64;
    let mut hi = 1.0f64;
    while cdf(hi) < v {
        hi = 2.0 * hi + 2.0;
        if hi > 1e300 {
            return hi;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = cdf(x) - v;
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= 1e-12 * x.abs().max(1.0) {
            break;
        }
        let d = density(x);
        let step = if d > 0.0 { fx / d } else { 0.0 };
        let newton = x - step;
        x = if step != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    x
}
