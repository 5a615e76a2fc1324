//! Pointwise Bogoliubov minimization, the constant `I₀` and the
//! semiclassical momentum integral.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::quadrature::{integrate, integrate_power_tail, Tolerance};
use crate::numerics::{gamma_fn, scan_then_golden};

/// Minimizer and minimum of `τ f + g (f − √(f(f+1)))` over `f ≥ 0`.
///
/// With `f = sinh² θ` the objective is `½S(cosh 2θ − 1) − ½g sinh 2θ`,
/// `S = τ + g`, so `tanh 2θ = g/S` and the minimum is
/// `½(√(τ(τ+2g)) − S) = −g² / (2(√(τ(τ+2g)) + S))`.
/// For `τ = 0 < g` the infimum `−g/2` is approached as `f → ∞`.
pub fn bogoliubov_dispersion_min(tau: f64, g: f64) -> Result<(f64, f64)> {
    if !(tau >= 0.0 && g >= 0.0) || !tau.is_finite() || !g.is_finite() {
        return Err(Error::domain("need finite tau >= 0 and g >= 0"));
    }
    if g == 0.0 {
        return Ok((0.0, 0.0));
    }
    if tau == 0.0 {
        return Ok((f64::INFINITY, -0.5 * g));
    }
    let s = tau + g;
    let root = (tau * (tau + 2.0 * g)).sqrt();
    let f_star = 0.5 * (s / root - 1.0);
    Ok((f_star, -g * g / (2.0 * (root + s))))
}

/// The objective itself, for scans.
pub fn dispersion_objective(tau: f64, g: f64, f: f64) -> f64 {
    // f − √(f(f+1)) = −f / (f + √(f(f+1)))
    tau * f - g * f / (f + (f * (f + 1.0)).sqrt()).max(f64::MIN_POSITIVE)
}

/// Scan-plus-golden-section minimum over `f ∈ [0, f_max]` in the variable
/// `θ = asinh √f`.
pub fn dispersion_min_scan(tau: f64, g: f64, f_max: f64) -> Result<(f64, f64)> {
    let theta_max = f_max.sqrt().asinh();
    let (theta, value) = scan_then_golden(|t| dispersion_objective(tau, g, t.sinh().powi(2)), 0.0, theta_max, 400, 1e-12)?;
    Ok((theta.sinh().powi(2), value))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct I0Values {
    pub quadrature: f64,
    pub closed_form: f64,
    pub rel_diff: f64,
}

/// `1 + x⁴ − x²√(x⁴+2)`, evaluated as `1 / (1 + x⁴ + x²√(x⁴+2))`.
pub fn i0_integrand(x: f64) -> f64 {
    let x2 = x * x;
    1.0 / (1.0 + x2 * x2 + x2 * (x2 * x2 + 2.0).sqrt())
}

/// `(2/π)^{3/4} ∫_0^∞ (1 + x⁴ − x²√(x⁴+2)) dx` by adaptive quadrature with
/// an `x⁻⁴` tail, next to `4^{5/4} Γ(3/4) / (5 π^{1/4} Γ(5/4))`.
pub fn compute_i0() -> Result<I0Values> {
    let tol = Tolerance::new(0.0, 1e-13);
    let head = integrate(i0_integrand, 0.0, 4.0, tol)?.value;
    let tail = integrate_power_tail(i0_integrand, 4.0, -4.0, tol)?.value;
    let quadrature = (2.0 / PI).powf(0.75) * (head + tail);
    let closed_form = 4f64.powf(1.25) * gamma_fn(0.75)? / (5.0 * PI.powf(0.25) * gamma_fn(1.25)?);
    Ok(I0Values { quadrature, closed_form, rel_diff: (quadrature - closed_form).abs() / closed_form })
}

/// `(2π)⁻³ ∫ e_min(p²/2, 4πN ρ / p²) d³p` by radial quadrature.
pub fn semiclassical_p_integral(density: f64, n: f64) -> Result<f64> {
    if !(density >= 0.0 && n > 0.0) {
        return Err(Error::domain("need density >= 0 and N > 0"));
    }
    let a = n * density;
    if a == 0.0 {
        return Ok(0.0);
    }
    let integrand = |p: f64| {
        if p == 0.0 {
            // p² e_min → −2πA as p → 0
            return 4.0 * PI * (-2.0 * PI * a);
        }
        let (_, e) = bogoliubov_dispersion_min(0.5 * p * p, 4.0 * PI * a / (p * p)).expect("valid arguments");
        4.0 * PI * p * p * e
    };
    let scale = a.powf(0.25);
    let tol = Tolerance::new(0.0, 1e-13);
    let head = integrate(integrand, 0.0, 8.0 * scale, tol)?.value;
    let tail = integrate_power_tail(integrand, 8.0 * scale, -4.0, tol)
        .map_err(|e| Error::Integrability(format!("momentum tail: {e}")))?
        .value;
    Ok((head + tail) / (2.0 * PI).powi(3))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dispersion_edge_cases() {
        assert_eq!(bogoliubov_dispersion_min(1.0, 0.0).unwrap(), (0.0, 0.0));
        assert_eq!(bogoliubov_dispersion_min(0.0, 0.0).unwrap(), (0.0, 0.0));
        let (f, e) = bogoliubov_dispersion_min(0.0, 2.0).unwrap();
        assert!(f.is_infinite() && e == -1.0);
        assert!(bogoliubov_dispersion_min(-1.0, 1.0).is_err());
    }

    #[test]
    fn dispersion_matches_scan() {
        let (f, e) = bogoliubov_dispersion_min(1.0, 1.0).unwrap();
        let (fs, es) = dispersion_min_scan(1.0, 1.0, 100.0).unwrap();
        assert!((e - es).abs() < 1e-10, "{e} vs {es}");
        assert!((f - fs).abs() < 1e-5);
        assert!((dispersion_objective(1.0, 1.0, f) - e).abs() < 1e-14);
    }

    #[test]
    fn dispersion_perturbative_regime() {
        for ratio in [1e2, 1e3] {
            let (_, e) = bogoliubov_dispersion_min(ratio, 1.0).unwrap();
            assert!((e / (-1.0 / (4.0 * ratio)) - 1.0).abs() < 2.0 / ratio);
        }
    }

    #[test]
    fn i0_integrand_shape() {
        assert_eq!(i0_integrand(0.0), 1.0);
        let x: f64 = 200.0;
        assert!((i0_integrand(x) * x.powi(4) - 0.5).abs() < 1e-8);
    }

    #[test]
    fn semiclassical_constant_equals_quadrature_i0() {
        let i0 = compute_i0().unwrap().quadrature;
        for a in [1e-2, 1.0, 1e2] {
            let v = semiclassical_p_integral(a, 1.0).unwrap();
            assert!((v / a.powf(1.25) + i0).abs() < 1e-8 * i0, "{}", v / a.powf(1.25));
        }
        assert_eq!(semiclassical_p_integral(0.0, 5.0).unwrap(), 0.0);
    }
}
