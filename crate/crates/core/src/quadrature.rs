//! Adaptive Simpson quadrature, with a dyadic splitting toward 0 for
//! integrands that blow up at the left endpoint.

use crate::error::{Error, Result};
use crate::linalg::sum::CompensatedSum;

const MAX_DEPTH: u32 = 50;
const MAX_DYADIC_PIECES: usize = 1000;

/// ∫_a^b f by adaptive Simpson with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::Quadrature(format!("bad interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let v = recurse(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)?;
    if !v.is_finite() {
        return Err(Error::Quadrature(format!("non-finite value on [{a}, {b}]")));
    }
    Ok(v)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &dyn Fn(f64) -> f64,
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
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (m - a) <= f64::EPSILON * m.abs() {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!(
            "no convergence on [{a:e}, {b:e}] (error estimate {:e})",
            delta.abs() / 15.0
        )));
    }
    Ok(recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
        + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}

/// ∫_0^b f for `f` possibly singular at 0.
///
/// Integrates the dyadic pieces `[b 2^{-k-1}, b 2^{-k}]` in turn. The
/// remaining tail `[0, b 2^{-k}]` is bounded by a geometric series once
/// consecutive pieces shrink by a factor of at most 3/4; integrands whose
/// pieces decay more slowly than that are reported as non-convergent.
pub fn integrate_from_zero(f: &dyn Fn(f64) -> f64, b: f64, tol: f64) -> Result<f64> {
    if b <= 0.0 {
        return Ok(0.0);
    }
    let piece_tol = tol / 4.0;
    let mut acc = CompensatedSum::default();
    let mut hi = b;
    let mut prev: Option<f64> = None;
    for _ in 0..MAX_DYADIC_PIECES {
        let lo = 0.5 * hi;
        let piece = adaptive_simpson(f, lo, hi, piece_tol)?;
        acc.add(piece);
        if let Some(p) = prev {
            let ratio = if p != 0.0 { (piece / p).abs() } else { 0.0 };
            if ratio <= 0.75 {
                let tail = piece.abs() * ratio / (1.0 - ratio);
                if tail <= tol / 2.0 {
                    return Ok(acc.value());
                }
            }
        }
        prev = Some(piece);
        hi = lo;
    }
    Err(Error::Quadrature(
        "tail near 0 does not decay geometrically; supply an antiderivative".into(),
    ))
}

/// ∫_a^b f for 0 ≤ a ≤ b, routing a left endpoint at 0 through
/// [`integrate_from_zero`].
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == 0.0 {
        integrate_from_zero(f, b, tol)
    } else {
        adaptive_simpson(f, a, b, tol)
    }
}
