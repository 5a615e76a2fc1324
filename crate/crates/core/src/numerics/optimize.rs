//! One-dimensional minimization.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of a unimodal `f` on `[a, b]`.
/// Returns `(x, f(x))` once the bracket is shorter than `tol`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    if !(a < b) || !(tol > 0.0) {
        return Err(Error::domain(format!("golden section needs a < b and tol > 0 (got [{a}, {b}], {tol})")));
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// Golden-section search started from the best point of a uniform scan,
/// for functions that are unimodal only near their minimum.
pub fn scan_then_golden(f: impl Fn(f64) -> f64, a: f64, b: f64, points: usize, tol: f64) -> Result<(f64, f64)> {
    if points < 3 {
        return Err(Error::domain("scan needs at least three points"));
    }
    let h = (b - a) / (points - 1) as f64;
    let best = (0..points)
        .map(|i| (i, f(a + h * i as f64)))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(i, _)| i)
        .unwrap();
    let lo = a + h * best.saturating_sub(1) as f64;
    let hi = a + h * (best + 1).min(points - 1) as f64;
    golden_section(f, lo, hi, tol)
}
