//! Lieb-Thirring bounds, the box kinetic-energy bound, the semiclassical
//! phase-space energy and the grand-canonical stability constant.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::optimize::golden_section;
use crate::numerics::quadrature::{integrate, integrate_power_tail, Tolerance};

/// Constant, mass and number of internal states entering
/// `−C m^{3/2} ν ∫ V^{5/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LtParameters {
    pub c_lt: f64,
    pub m: f64,
    pub nu: u32,
}

/// Phase-space coefficient `κ` in `∬ (p²/2m − V)_− dr dp = −κ m^{3/2} ∫ V^{5/2}`.
pub const PHASE_SPACE_KAPPA: f64 = 8.0 * PI / 15.0 * 2.828_427_124_746_190_1;

/// Semiclassical constant `κ / (2π)³ = 2^{3/2} / (15π²)`, the default `C`.
pub fn semiclassical_constant() -> f64 {
    PHASE_SPACE_KAPPA / (2.0 * PI).powi(3)
}

impl LtParameters {
    pub fn new(c_lt: f64, m: f64, nu: u32) -> Result<Self> {
        if !(c_lt > 0.0 && c_lt.is_finite()) || !(m > 0.0 && m.is_finite()) || nu == 0 {
            return Err(Error::domain(format!("LT parameters must be positive (C = {c_lt}, m = {m}, ν = {nu})")));
        }
        Ok(LtParameters { c_lt, m, nu })
    }

    /// Parameters with the semiclassical constant.
    pub fn semiclassical(m: f64, nu: u32) -> Result<Self> {
        Self::new(semiclassical_constant(), m, nu)
    }

    fn prefactor(&self) -> f64 {
        self.c_lt * self.m.powf(1.5) * self.nu as f64
    }
}

/// Masses, charge magnitudes and chemical potential of a two-species system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeciesSpec {
    pub m_plus: f64,
    pub m_minus: f64,
    pub q_plus: f64,
    pub q_minus: f64,
    pub mu: f64,
}

impl SpeciesSpec {
    pub fn new(m_plus: f64, m_minus: f64, q_plus: f64, q_minus: f64, mu: f64) -> Result<Self> {
        for (name, x) in [("m+", m_plus), ("m-", m_minus), ("Q+", q_plus), ("Q-", q_minus)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {x}")));
            }
        }
        if !mu.is_finite() {
            return Err(Error::domain("chemical potential must be finite"));
        }
        Ok(SpeciesSpec { m_plus, m_minus, q_plus, q_minus, mu })
    }
}

/// Cubic box `[0, side]³` divided into `n³` cells, sampled at cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeGrid {
    pub n: usize,
    pub side: f64,
    pub values: Vec<f64>,
}

impl CubeGrid {
    pub fn from_fn(n: usize, side: f64, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        if n == 0 || !(side > 0.0) {
            return Err(Error::domain("cube grid needs n >= 1 and side > 0"));
        }
        let h = side / n as f64;
        let mut values = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    values.push(f([(i as f64 + 0.5) * h, (j as f64 + 0.5) * h, (k as f64 + 0.5) * h]));
                }
            }
        }
        Ok(CubeGrid { n, side, values })
    }

    pub fn cell_volume(&self) -> f64 {
        (self.side / self.n as f64).powi(3)
    }

    fn check_nonnegative(&self) -> Result<()> {
        if self.values.len() != self.n.pow(3) {
            return Err(Error::Shape(format!("expected {} samples, got {}", self.n.pow(3), self.values.len())));
        }
        match self.values.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            Some(i) => Err(Error::domain(format!("potential sample {i} is {} (must be finite and >= 0)", self.values[i]))),
            None => Ok(()),
        }
    }
}

/// `−C m^{3/2} ν ∫ V^{5/2}` with the midpoint rule on the grid.
pub fn lt_rhs(v: &CubeGrid, p: &LtParameters) -> Result<f64> {
    v.check_nonnegative()?;
    let integral: f64 = v.values.iter().map(|x| x.powf(2.5)).sum::<f64>() * v.cell_volume();
    Ok(-p.prefactor() * integral)
}

/// `4π ∫_0^∞ r² V(r)^{5/2} dr` for a radial potential supported in
/// `[0, r_max]`, or continued beyond it when `tail_exponent` (the decay
/// exponent of `V^{5/2}`) is given.
///
/// The substitution `r = r_max t²` removes the usual `r^{-1}`-type
/// singularities at the origin.
pub fn radial_potential_integral(v: impl Fn(f64) -> f64, r_max: f64, tail_exponent: Option<f64>) -> Result<f64> {
    if !(r_max > 0.0) {
        return Err(Error::domain("radial potential needs r_max > 0"));
    }
    let tol = Tolerance::new(1e-14, 1e-12);
    let integrand = |t: f64| {
        let r = r_max * t * t;
        let x = v(r);
        2.0 * r_max * t * r * r * x.max(0.0).powf(2.5)
    };
    let to_integrability = |e: Error| match e {
        Error::Convergence { .. } => Error::Integrability("∫V^{5/2} does not converge".into()),
        other => other,
    };
    let head = integrate(integrand, 0.0, 1.0, tol).map_err(to_integrability)?.value;
    let tail = match tail_exponent {
        None => 0.0,
        Some(q) => {
            if !(q < -3.0) {
                return Err(Error::Integrability(format!("V^{{5/2}} ~ r^{q} is not integrable at infinity")));
            }
            integrate_power_tail(|r| r * r * v(r).max(0.0).powf(2.5), r_max, q + 2.0, tol)
                .map_err(to_integrability)?
                .value
        }
    };
    let total = 4.0 * PI * (head + tail);
    if !total.is_finite() {
        return Err(Error::Integrability("∫V^{5/2} is not finite".into()));
    }
    Ok(total)
}

/// Radial version of [`lt_rhs`].
pub fn lt_rhs_radial(v: impl Fn(f64) -> f64, r_max: f64, tail_exponent: Option<f64>, p: &LtParameters) -> Result<f64> {
    Ok(-p.prefactor() * radial_potential_integral(v, r_max, tail_exponent)?)
}

/// Classical energy of a filled phase-space region and its coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemiclassicalEnergy {
    pub value: f64,
    /// `∫ V^{5/2}`.
    pub potential_integral: f64,
    /// `κ` with `value = −κ m^{3/2} ∫ V^{5/2}`.
    pub kappa: f64,
    /// `κ / (8π/15)`.
    pub ratio_to_8pi_over_15: f64,
}

// 4π ∫_{p² ≤ 2mV} p² (p²/2m − V) dp by quadrature.
fn momentum_integral(v: f64, m: f64) -> Result<f64> {
    if v <= 0.0 {
        return Ok(0.0);
    }
    let p_max = (2.0 * m * v).sqrt();
    let inner = integrate(|p| p * p * (p * p / (2.0 * m) - v), 0.0, p_max, Tolerance::new(0.0, 1e-13))?;
    Ok(4.0 * PI * inner.value)
}

fn semiclassical_summary(value: f64, potential_integral: f64, m: f64) -> SemiclassicalEnergy {
    let kappa = if potential_integral > 0.0 { -value / (m.powf(1.5) * potential_integral) } else { f64::NAN };
    SemiclassicalEnergy { value, potential_integral, kappa, ratio_to_8pi_over_15: kappa / (8.0 * PI / 15.0) }
}

/// `∬_{p²/2m ≤ V(r)} (p²/2m − V(r)) dr dp` with the momentum integral done
/// by quadrature in every grid cell.
pub fn semiclassical_phase_space_energy(v: &CubeGrid, m: f64) -> Result<SemiclassicalEnergy> {
    v.check_nonnegative()?;
    if !(m > 0.0) {
        return Err(Error::domain("mass must be positive"));
    }
    let mut value = 0.0;
    for &x in &v.values {
        value += momentum_integral(x, m)?;
    }
    value *= v.cell_volume();
    let potential_integral = v.values.iter().map(|x| x.powf(2.5)).sum::<f64>() * v.cell_volume();
    Ok(semiclassical_summary(value, potential_integral, m))
}

/// Radial version of [`semiclassical_phase_space_energy`]; the outer
/// integral uses the same substitution as [`radial_potential_integral`].
pub fn semiclassical_phase_space_energy_radial(v: impl Fn(f64) -> f64, r_max: f64, m: f64) -> Result<SemiclassicalEnergy> {
    if !(m > 0.0) || !(r_max > 0.0) {
        return Err(Error::domain("mass and radius must be positive"));
    }
    let tol = Tolerance::new(1e-14, 1e-10);
    let outer = |t: f64| {
        let r = r_max * t * t;
        2.0 * r_max * t * r * r * momentum_integral(v(r), m).unwrap_or(f64::NAN)
    };
    let value = integrate(outer, 0.0, 1.0, tol)
        .map_err(|_| Error::Integrability("phase-space integral does not converge".into()))?
        .value
        * 4.0
        * PI;
    let potential_integral = radial_potential_integral(&v, r_max, None)?;
    if !value.is_finite() {
        return Err(Error::Integrability("phase-space integral is not finite".into()));
    }
    Ok(semiclassical_summary(value, potential_integral, m))
}

/// `max_v (N v − C m^{3/2} ν v^{5/2} |Ω|) = (3/5) N v*` with
/// `v* = (2N / (5 C m^{3/2} ν |Ω|))^{2/3}`.
pub fn box_kinetic_lower_bound(n: u64, volume: f64, p: &LtParameters) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("particle number must be at least 1"));
    }
    if !(volume > 0.0) {
        return Err(Error::domain("volume must be positive"));
    }
    let n = n as f64;
    let v_star = (2.0 * n / (5.0 * p.prefactor() * volume)).powf(2.0 / 3.0);
    Ok(0.6 * n * v_star)
}

/// Minimizer and value of `N R^{1/2} + |Ω| R^{-5/2}`.
pub fn optimal_split_radius(n_opposite: f64, volume: f64) -> (f64, f64) {
    let r = (5.0 * volume / n_opposite).powf(1.0 / 3.0);
    (r, n_opposite * r.sqrt() + volume * r.powf(-2.5))
}

/// Potential term `−C Q⁵ m^{3/2} ν (N R^{1/2} + |Ω| R^{-5/2})` at the
/// optimal `R`, returned as `(R*, bound)`.
pub fn opposite_charge_potential_bound(n_opposite: u64, volume: f64, q: f64, p: &LtParameters) -> Result<(f64, f64)> {
    if n_opposite == 0 || !(volume > 0.0) || !(q > 0.0) {
        return Err(Error::domain("opposite-charge bound needs N >= 1, volume > 0 and Q > 0"));
    }
    let (r, value) = optimal_split_radius(n_opposite as f64, volume);
    Ok((r, -p.prefactor() * q.powi(5) * value))
}

/// Integral of `|r|^{-5/2}` over the unit ball; the ball of radius `R` gives `8π√R`.
pub const BALL_WEIGHT: f64 = 8.0 * PI;

/// Full-constant version of the potential term: the Lieb-Thirring bound
/// for `V = (12/5) Q² / δ(r)` with half the kinetic energy (mass `2m`),
/// the inner region weighted by `8π√R` and `R` optimized.
/// Returns `(R*, bound)`.
pub fn smeared_potential_lt_bound(n_opposite: u64, volume: f64, q: f64, p: &LtParameters) -> Result<(f64, f64)> {
    if n_opposite == 0 || !(volume > 0.0) || !(q > 0.0) {
        return Err(Error::domain("opposite-charge bound needs N >= 1, volume > 0 and Q > 0"));
    }
    let weighted = BALL_WEIGHT * n_opposite as f64;
    let (r, value) = optimal_split_radius(weighted, volume);
    let prefactor = p.c_lt * (2.0 * p.m).powf(1.5) * p.nu as f64 * 2.4f64.powf(2.5) * q.powi(5);
    Ok((r, -prefactor * value))
}

/// Coefficients of the per-volume stability objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityCoefficients {
    /// Kinetic coefficient, `½ (3/5) (2/(5Cν))^{2/3}`.
    pub c1: f64,
    /// Potential coefficient, `C ν 2^{3/2} (12/5)^{5/2} · 6 · 5^{-5/6} (8π)^{5/6}`.
    pub c2: f64,
}

pub fn stability_coefficients(c_lt: f64, nu: u32) -> StabilityCoefficients {
    let c = c_lt * nu as f64;
    StabilityCoefficients {
        c1: 0.5 * 0.6 * (2.0 / (5.0 * c)).powf(2.0 / 3.0),
        c2: c * 2f64.powf(1.5) * 2.4f64.powf(2.5) * 6.0 * 5f64.powf(-5.0 / 6.0) * BALL_WEIGHT.powf(5.0 / 6.0),
    }
}

/// Per-volume lower bound as a function of the densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityObjective {
    pub spec: SpeciesSpec,
    pub coeffs: StabilityCoefficients,
}

impl StabilityObjective {
    pub fn new(spec: SpeciesSpec, p_plus: &LtParameters, p_minus: &LtParameters) -> Result<Self> {
        if p_plus.c_lt != p_minus.c_lt || p_plus.nu != p_minus.nu {
            return Err(Error::Unsupported("both species must share the LT constant and ν".into()));
        }
        Ok(StabilityObjective { spec, coeffs: stability_coefficients(p_plus.c_lt, p_plus.nu) })
    }

    // (a, b) in a n^{5/3} − b n^{5/6} for the + and − densities.
    fn terms(&self) -> [(f64, f64); 2] {
        let s = &self.spec;
        let StabilityCoefficients { c1, c2 } = self.coeffs;
        [
            (c1 / s.m_plus, c2 * s.q_minus.powi(5) * s.m_minus.powf(1.5)),
            (c1 / s.m_minus, c2 * s.q_plus.powi(5) * s.m_plus.powf(1.5)),
        ]
    }

    pub fn value(&self, n_plus: f64, n_minus: f64) -> f64 {
        let [(ap, bp), (am, bm)] = self.terms();
        ap * n_plus.powf(5.0 / 3.0) + am * n_minus.powf(5.0 / 3.0) - bp * n_plus.powf(5.0 / 6.0)
            - bm * n_minus.powf(5.0 / 6.0)
            + self.spec.mu * (n_plus + n_minus)
    }

    fn gradient_hessian(&self, n: [f64; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
        let t = self.terms();
        let mut g = [0.0; 2];
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            let (a, b) = t[i];
            g[i] = a * 5.0 / 3.0 * n[i].powf(2.0 / 3.0) - b * 5.0 / 6.0 * n[i].powf(-1.0 / 6.0) + self.spec.mu;
            h[i][i] = a * 10.0 / 9.0 * n[i].powf(-1.0 / 3.0) + b * 5.0 / 36.0 * n[i].powf(-7.0 / 6.0);
        }
        (g, h)
    }

    /// Log-scale window containing the minimizer in each density.
    fn window(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (a, b) in self.terms() {
            let balance = (b / a).powf(1.2);
            lo = lo.min(balance);
            hi = hi.max(balance);
            if self.spec.mu > 0.0 {
                lo = lo.min((b / self.spec.mu).powi(6));
            } else if self.spec.mu < 0.0 {
                hi = hi.max((-self.spec.mu / a).powf(1.5));
            }
        }
        (lo * 1e-3, hi * 1e3)
    }
}

/// Result of the density minimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityMinimum {
    pub n_plus: f64,
    pub n_minus: f64,
    /// Minimum of the objective, `−C(μ, m±, Q±)`.
    pub value: f64,
}

/// Dense logarithmic scan of both densities followed by damped 2-D Newton
/// refinement.
pub fn stability_constant_scan(obj: &StabilityObjective) -> Result<StabilityMinimum> {
    let (lo, hi) = obj.window();
    let steps = 240;
    let ratio = (hi / lo).ln() / steps as f64;
    let at = |i: usize| lo * (ratio * i as f64).exp();
    let mut best = (obj.value(0.0, 0.0), [0.0, 0.0]);
    for i in 0..=steps {
        for j in 0..=steps {
            let n = [at(i), at(j)];
            let v = obj.value(n[0], n[1]);
            if v < best.0 {
                best = (v, n);
            }
        }
    }
    let (mut value, mut n) = best;
    if n[0] == 0.0 || n[1] == 0.0 {
        return Err(Error::Internal("density scan found no interior minimum".into()));
    }
    for _ in 0..100 {
        let (g, h) = obj.gradient_hessian(n);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let step = [
            (h[1][1] * g[0] - h[0][1] * g[1]) / det,
            (h[0][0] * g[1] - h[1][0] * g[0]) / det,
        ];
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let trial = [n[0] - t * step[0], n[1] - t * step[1]];
            if trial[0] > 0.0 && trial[1] > 0.0 {
                let v = obj.value(trial[0], trial[1]);
                if v <= value {
                    n = trial;
                    value = v;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted || (step[0] / n[0]).abs().max((step[1] / n[1]).abs()) < 1e-14 {
            break;
        }
    }
    if !value.is_finite() {
        return Err(Error::Internal("density minimization diverged".into()));
    }
    Ok(StabilityMinimum { n_plus: n[0], n_minus: n[1], value })
}

/// Alternating 1-D golden-section minimization in `ln n₊` and `ln n₋`.
pub fn stability_constant_descent(obj: &StabilityObjective) -> Result<StabilityMinimum> {
    let (lo, hi) = obj.window();
    let (a, b) = (lo.ln(), hi.ln());
    let mut n = [(lo * hi).sqrt(); 2];
    let mut value = obj.value(n[0], n[1]);
    for _ in 0..50 {
        let (u, _) = golden_section(|u| obj.value(u.exp(), n[1]), a, b, 1e-12)?;
        n[0] = u.exp();
        let (u, v) = golden_section(|u| obj.value(n[0], u.exp()), a, b, 1e-12)?;
        n[1] = u.exp();
        let converged = (value - v).abs() <= 1e-15 * v.abs();
        value = v;
        if converged {
            break;
        }
    }
    if !value.is_finite() {
        return Err(Error::Internal("density minimization diverged".into()));
    }
    Ok(StabilityMinimum { n_plus: n[0], n_minus: n[1], value })
}

/// Minimum over densities of the per-volume lower bound; the grand
/// canonical energy then satisfies `E(μ, Ω) ≥ value · |Ω|`.
pub fn stability_constant(s: &SpeciesSpec, p_plus: &LtParameters, p_minus: &LtParameters) -> Result<StabilityMinimum> {
    stability_constant_scan(&StabilityObjective::new(*s, p_plus, p_minus)?)
}

/// Sum of the `N` lowest Dirichlet eigenvalues `π²|n|² / (2m L²)` of the cube.
pub fn dirichlet_cube_kinetic_sum(n: usize, side: f64, m: f64) -> Result<f64> {
    Ok(dirichlet_cube_levels(n)?.iter().sum::<u64>() as f64 * PI * PI / (2.0 * m * side * side))
}

/// `|n|²` of the `N` lowest modes, sorted, ties broken lexicographically.
pub fn dirichlet_cube_levels(n: usize) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::domain("need at least one eigenvalue"));
    }
    let mut cap: u64 = 2;
    loop {
        let mut modes = Vec::with_capacity((cap * cap * cap) as usize);
        for a in 1..=cap {
            for b in 1..=cap {
                for c in 1..=cap {
                    modes.push((a * a + b * b + c * c, a, b, c));
                }
            }
        }
        if modes.len() >= n {
            modes.sort_unstable();
            // Every mode outside the cap has |n|² >= (cap+1)² + 2.
            if modes[n - 1].0 < (cap + 1) * (cap + 1) + 2 {
                return Ok(modes[..n].iter().map(|m| m.0).collect());
            }
        }
        cap *= 2;
    }
}

/// Least-squares slope of `ln y` against `ln x`, with its standard error.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let resid: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let se = if n > 2.0 { (resid / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (slope, se)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> LtParameters {
        LtParameters::new(1.0, 1.0, 1).unwrap()
    }

    #[test]
    fn lt_rhs_cases() {
        let zero = CubeGrid::from_fn(4, 1.0, |_| 0.0).unwrap();
        assert_eq!(lt_rhs(&zero, &unit()).unwrap(), 0.0);
        let p = LtParameters::new(0.7, 2.0, 3).unwrap();
        let flat = CubeGrid::from_fn(5, 1.0, |_| 1.5).unwrap();
        let expected = -0.7 * 2f64.powf(1.5) * 3.0 * 1.5f64.powf(2.5);
        assert!((lt_rhs(&flat, &p).unwrap() - expected).abs() < 1e-12);
        let neg = CubeGrid::from_fn(2, 1.0, |r| r[0] - 0.5).unwrap();
        assert!(lt_rhs(&neg, &unit()).is_err());
    }

    #[test]
    fn coulomb_ball_integral() {
        for a in [0.25, 1.0, 4.0] {
            let got = lt_rhs_radial(|r| 1.0 / r, a, None, &unit()).unwrap();
            assert!((got + 8.0 * PI * a.sqrt()).abs() < 1e-10 * a.sqrt(), "a={a}: {got}");
        }
        assert!(matches!(radial_potential_integral(|r| r.powf(-1.3), 1.0, None), Err(Error::Integrability(_))));
        assert!(matches!(radial_potential_integral(|r| 1.0 / r, 1.0, Some(-2.5)), Err(Error::Integrability(_))));
        // V = (1 + r)^{-2}: V^{5/2} ~ r^{-5}.
        let with_tail = radial_potential_integral(|r| (1.0 + r).powi(-2), 2.0, Some(-5.0)).unwrap();
        let direct = 4.0 * PI * integrate(|r| r * r * (1.0 + r).powi(-5), 0.0, 1e5, Tolerance::default()).unwrap().value;
        assert!((with_tail - direct).abs() < 1e-8 * direct);
    }

    #[test]
    fn phase_space_energy_coefficient() {
        let flat = CubeGrid::from_fn(2, 1.0, |_| 1.0).unwrap();
        let e = semiclassical_phase_space_energy(&flat, 1.0).unwrap();
        // Independent closed form of the momentum integral: −(8π/15) (2mV)^{3/2} V.
        assert!((e.value + 8.0 * PI / 15.0 * 2f64.powf(1.5)).abs() < 1e-12);
        assert!((e.kappa - PHASE_SPACE_KAPPA).abs() < 1e-12);
        assert!((e.ratio_to_8pi_over_15 - 2f64.powf(1.5)).abs() < 1e-12);
        let heavy = semiclassical_phase_space_energy(&flat, 2.0).unwrap();
        assert!((heavy.value / e.value - 2f64.powf(1.5)).abs() < 1e-12);
        let zero = CubeGrid::from_fn(2, 1.0, |_| 0.0).unwrap();
        assert_eq!(semiclassical_phase_space_energy(&zero, 1.0).unwrap().value, 0.0);
        let radial = semiclassical_phase_space_energy_radial(|r| 1.0 - r * r, 1.0, 1.5).unwrap();
        assert!((radial.kappa - PHASE_SPACE_KAPPA).abs() < 1e-8 * PHASE_SPACE_KAPPA);
    }

    #[test]
    fn box_bound_closed_form_and_scaling() {
        let b = box_kinetic_lower_bound(1, 1.0, &unit()).unwrap();
        assert!((b - 0.6 * 0.4f64.powf(2.0 / 3.0)).abs() < 1e-15);
        // Scan of N v − v^{5/2}.
        let mut scan = f64::NEG_INFINITY;
        for i in 0..200_000 {
            let v = i as f64 * 5e-6;
            scan = scan.max(v - v.powf(2.5));
        }
        assert!((scan - b).abs() < 1e-9);
        let p = LtParameters::new(0.3, 1.7, 2).unwrap();
        let base = box_kinetic_lower_bound(5, 2.0, &p).unwrap();
        assert!((box_kinetic_lower_bound(40, 16.0, &p).unwrap() / base - 8.0).abs() < 1e-12);
        let p8 = LtParameters::new(0.3, 1.7, 16).unwrap();
        assert!((base / box_kinetic_lower_bound(5, 2.0, &p8).unwrap() - 4.0).abs() < 1e-12);
        assert!(box_kinetic_lower_bound(0, 1.0, &p).is_err());
    }

    #[test]
    fn optimal_radius() {
        let (r, v) = optimal_split_radius(1.0, 5.0);
        assert!((r - 25f64.powf(1.0 / 3.0)).abs() < 1e-14);
        // First-order condition ½ N R^{-1/2} = (5/2) |Ω| R^{-7/2}.
        let foc = 0.5 * r.powf(-0.5) - 2.5 * 5.0 * r.powf(-3.5);
        assert!(foc.abs() < 1e-10 * 0.5 * r.powf(-0.5));
        let (_, scan) = golden_section(|r| r.sqrt() + 5.0 * r.powf(-2.5), 0.1, 20.0, 1e-12).unwrap();
        assert!((scan - v).abs() < 1e-12);
        let (r1, _) = optimal_split_radius(15.0, 3.0);
        assert!((r1 - 1.0).abs() < 1e-14);
        let (_, a) = opposite_charge_potential_bound(3, 2.0, 1.0, &unit()).unwrap();
        let (_, b) = opposite_charge_potential_bound(3 * 64, 2.0 * 729.0, 1.0, &unit()).unwrap();
        assert!((b / a - 64f64.powf(5.0 / 6.0) * 729f64.powf(1.0 / 6.0)).abs() < 1e-9 * b.abs());
    }

    #[test]
    fn smeared_bound_matches_per_volume_coefficient() {
        let p = LtParameters::semiclassical(1.3, 1).unwrap();
        let (_, bound) = smeared_potential_lt_bound(40, 10.0, 1.1, &p).unwrap();
        let c = stability_coefficients(p.c_lt, 1);
        let per_volume = -c.c2 * 1.1f64.powi(5) * 1.3f64.powf(1.5) * 4f64.powf(5.0 / 6.0);
        assert!((bound / 10.0 - per_volume).abs() < 1e-12 * per_volume.abs());
    }

    #[test]
    fn stability_routes_agree() {
        let p = LtParameters::semiclassical(1.0, 1).unwrap();
        for (mp, mm, qp, qm, mu) in [(1.0, 1.0, 1.0, 1.0, 0.0), (1836.0, 1.0, 1.0, 1.0, -0.5), (2.0, 0.5, 3.0, 1.0, 4.0)] {
            let spec = SpeciesSpec::new(mp, mm, qp, qm, mu).unwrap();
            let obj = StabilityObjective::new(spec, &p, &p).unwrap();
            let a = stability_constant_scan(&obj).unwrap();
            let b = stability_constant_descent(&obj).unwrap();
            assert!(a.value < 0.0);
            assert!((a.value - b.value).abs() < 1e-8 * a.value.abs(), "{a:?} {b:?}");
        }
    }

    #[test]
    fn stability_symmetry_and_monotonicity() {
        let p = LtParameters::semiclassical(1.0, 1).unwrap();
        let sym = stability_constant(&SpeciesSpec::new(1.0, 1.0, 1.0, 1.0, 0.3).unwrap(), &p, &p).unwrap();
        assert!((sym.n_plus - sym.n_minus).abs() < 1e-8 * sym.n_plus);
        let big_mu = stability_constant(&SpeciesSpec::new(1.0, 1.0, 1.0, 1.0, 1e6).unwrap(), &p, &p).unwrap();
        assert!(big_mu.value <= 0.0 && big_mu.value > sym.value);
        let more_q = stability_constant(&SpeciesSpec::new(1.0, 1.0, 1.5, 1.0, 0.3).unwrap(), &p, &p).unwrap();
        assert!(more_q.value <= sym.value);
    }

    #[test]
    fn dirichlet_sums() {
        assert!((dirichlet_cube_kinetic_sum(1, 1.0, 1.0).unwrap() - 1.5 * PI * PI).abs() < 1e-12);
        let three = dirichlet_cube_kinetic_sum(3, 1.0, 1.0).unwrap();
        assert!((three - (1.5 * PI * PI + 6.0 * PI * PI)).abs() < 1e-12);
        // Brute-force comparison on a fixed large box.
        let mut all = Vec::new();
        for a in 1..=20u64 {
            for b in 1..=20u64 {
                for c in 1..=20u64 {
                    all.push(a * a + b * b + c * c);
                }
            }
        }
        all.sort_unstable();
        assert_eq!(dirichlet_cube_levels(500).unwrap(), all[..500].to_vec());
    }

    #[test]
    fn dirichlet_sum_exceeds_semiclassical_box_bound() {
        let p = LtParameters::semiclassical(1.0, 1).unwrap();
        for n in [1usize, 2, 7, 30, 100, 1000] {
            for side in [0.5, 1.0, 3.0] {
                let sum = dirichlet_cube_kinetic_sum(n, side, 1.0).unwrap();
                let bound = box_kinetic_lower_bound(n as u64, side.powi(3), &p).unwrap();
                assert!(sum >= bound, "N={n} side={side}: {sum} < {bound}");
            }
        }
    }
}
