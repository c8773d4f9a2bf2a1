//! Adaptive quadrature helpers.
//!
//! Integrands here are smooth away from known kinks (the truncation level,
//! the support endpoint), so the caller is responsible for splitting at
//! those points and handing each smooth piece to [`adaptive_simpson`].

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 52;

/// Adaptive Simpson on [a, b] to the given relative tolerance.
///
/// `scale` sets the magnitude against which the tolerance is measured;
/// pass an a-priori estimate of the full integral when integrating one
/// panel of a larger domain, or 0.0 to let the local value be used.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64, scale: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let floor = if scale > 0.0 { scale } else { whole.abs().max(f64::MIN_POSITIVE) };
    recurse(f, a, b, fa, fm, fb, whole, rel_tol * floor, MAX_DEPTH)
}

fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol || (b - a) < f64::EPSILON * (a.abs() + b.abs()) {
        return Ok(left + right + err / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numerical(format!(
            "adaptive Simpson failed to converge on [{a}, {b}] (residual {err:e})"
        )));
    }
    let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Integrate over consecutive panels given by `breaks`, summing the pieces.
pub fn panels<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], rel_tol: f64) -> Result<f64> {
    // First pass with a crude scale, second pass refined against the total.
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += adaptive_simpson(f, w[0], w[1], rel_tol.max(1e-6), 0.0)?;
    }
    let mut refined = 0.0;
    for w in breaks.windows(2) {
        refined += adaptive_simpson(f, w[0], w[1], rel_tol, total.abs())?;
    }
    Ok(refined)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = adaptive_simpson(&|x: f64| x * x * x, 0.0, 2.0, 1e-12, 0.0).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_tail() {
        let v = panels(&|x: f64| (-x).exp(), &[0.0, 1.0, 5.0, 20.0, 60.0], 1e-10).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn algebraic_singularity_after_substitution() {
        // int_0^1 u^{-1/2} du = 2, via u = t^2.
        let v = adaptive_simpson(&|_t: f64| 2.0, 0.0, 1.0, 1e-12, 0.0).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }
}
