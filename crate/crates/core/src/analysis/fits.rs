//! Scaling-exponent fit: slope of `log |p_hat|` against `log beta`,
//! compared with the reference exponent
//! `alpha = gamma (gamma_c - 1) / (gamma_c - gamma)`, `gamma_c = 1 + 2/d`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AlphaPoint {
    pub beta: f64,
    pub p_hat: f64,
    pub se: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub slope_se: f64,
    /// 95% confidence interval of the slope.
    pub ci: (f64, f64),
    pub reference_alpha: f64,
    pub gamma_c: f64,
    /// Points admitted to the fit (negative with CI excluding zero).
    pub used: Vec<AlphaPoint>,
    /// Points rejected and why.
    pub rejected: Vec<(AlphaPoint, String)>,
}

/// Reference exponent from the small-beta scaling law.
pub fn reference_alpha(d: usize, gamma: f64) -> Result<f64> {
    let gamma_c = 1.0 + 2.0 / d as f64;
    if gamma >= gamma_c {
        return Err(Error::Precondition(format!(
            "scaling exponent defined only for gamma < gamma_c = {gamma_c}, got {gamma}"
        )));
    }
    Ok(gamma * (gamma_c - 1.0) / (gamma_c - gamma))
}

/// Least-squares fit of the scaling exponent.
///
/// Only points with `p_hat < 0` and a 95% confidence interval excluding
/// zero enter the regression; at least 4 such points are required.
pub fn fit_alpha(points: &[AlphaPoint], d: usize, gamma: f64) -> Result<ExponentFit> {
    let gamma_c = 1.0 + 2.0 / d as f64;
    let reference = reference_alpha(d, gamma)?;
    let mut used = Vec::new();
    let mut rejected = Vec::new();
    for &p in points {
        if p.p_hat >= 0.0 {
            rejected.push((p, "estimate not negative".to_string()));
        } else if p.p_hat + 1.96 * p.se >= 0.0 {
            rejected.push((p, "confidence interval reaches zero".to_string()));
        } else {
            used.push(p);
        }
    }
    if used.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "need at least 4 significant points, have {} ({} rejected: {})",
            used.len(),
            rejected.len(),
            rejected
                .iter()
                .map(|(p, why)| format!("beta={} {why}", p.beta))
                .collect::<Vec<_>>()
                .join("; ")
        )));
    }
    let xs: Vec<f64> = used.iter().map(|p| p.beta.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.p_hat.abs().ln()).collect();
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    if sxx <= 0.0 {
        return Err(Error::Precondition("all beta values coincide".into()));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let slope_se = if xs.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(ExponentFit {
        slope,
        slope_se,
        ci: (slope - 1.96 * slope_se, slope + 1.96 * slope_se),
        reference_alpha: reference,
        gamma_c,
        used,
        rejected,
    })
}
