//! Two collapse mechanisms: a relativistic pair whose energy can be driven
//! to `−∞` by shrinking a trial state, and fermions with an attractive pair
//! potential that lose stability of the second kind in three dimensions.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lieb_thirring::log_log_slope;
use crate::numerics::quadrature::{integrate_power_tail, Tolerance};
use crate::report::{fmt17, Check, EnergyReport};

const QUAD_TOL: Tolerance = Tolerance::new(1e-15, 1e-13);

/// Normalized Gaussian trial states for two particles in `ℝ³`.
///
/// `Correlated { a, b }` is `|ψ|² ∝ exp(−|R|²/a² − |ρ|²/b²)` with centre of
/// mass `R = (r₁ + r₂)/2` and relative coordinate `ρ = r₁ − r₂`.
/// `Separable { width }` is the product `g(r₁)g(r₂)` with
/// `|g|² ∝ exp(−|r|²/width²)`, which is the correlated state with
/// `a = width/√2`, `b = √2·width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TwoBodyTrialState {
    Separable { width: f64 },
    Correlated { a: f64, b: f64 },
}

impl TwoBodyTrialState {
    pub fn separable(width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::domain("trial width must be positive"));
        }
        Ok(TwoBodyTrialState::Separable { width })
    }

    pub fn correlated(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::domain("trial widths must be positive"));
        }
        Ok(TwoBodyTrialState::Correlated { a, b })
    }

    /// `(a, b)` in the correlated parametrization.
    pub fn widths(&self) -> (f64, f64) {
        match *self {
            TwoBodyTrialState::Separable { width } => (width / 2f64.sqrt(), width * 2f64.sqrt()),
            TwoBodyTrialState::Correlated { a, b } => (a, b),
        }
    }

    /// `ψ_ℓ(r₁, r₂) = ℓ^{-3} ψ(r₁/ℓ, r₂/ℓ)`.
    pub fn scaled(&self, ell: f64) -> Self {
        match *self {
            TwoBodyTrialState::Separable { width } => TwoBodyTrialState::Separable { width: width * ell },
            TwoBodyTrialState::Correlated { a, b } => TwoBodyTrialState::Correlated { a: a * ell, b: b * ell },
        }
    }

    /// Per-component standard deviation of one particle's momentum.
    pub fn momentum_sigma(&self) -> f64 {
        let (a, b) = self.widths();
        (1.0 / (8.0 * a * a) + 1.0 / (2.0 * b * b)).sqrt()
    }
}

/// `⟨√(p² + m²) − m⟩` for a centred isotropic Gaussian momentum density with
/// per-component deviation `sigma`, by radial quadrature.
pub fn gaussian_relativistic_kinetic(sigma: f64, m: f64) -> Result<f64> {
    if !(sigma > 0.0) || !(m >= 0.0) {
        return Err(Error::domain("need sigma > 0 and m >= 0"));
    }
    let norm = 4.0 * PI * (2.0 * PI).powf(-1.5);
    // In units of sigma, with the kinetic energy written as p²/(√(p²+m²)+m)
    // to avoid cancellation at large mass.
    let integrand = |u: f64| {
        let p = sigma * u;
        let t = if p == 0.0 { 0.0 } else { p * p / ((p * p + m * m).sqrt() + m) };
        norm * u * u * t * (-0.5 * u * u).exp()
    };
    // Gaussian decay beats any power; the declared exponent only seeds the
    // tail model, which the breakpoint doubling renders negligible.
    Ok(integrate_power_tail(integrand, 0.0, -20.0, QUAD_TOL)?.value)
}

/// `⟨1/|r₁ − r₂|⟩` by the relative-coordinate radial integral.
pub fn inverse_separation_expectation(t: &TwoBodyTrialState) -> Result<f64> {
    let (_, b) = t.widths();
    let norm = 4.0 * PI * PI.powf(-1.5);
    // r = b u
    Ok(integrate_power_tail(|u| norm * u * (-u * u).exp(), 0.0, -20.0, QUAD_TOL)?.value / b)
}

/// Energy of `ψ_ℓ` for `√(−Δ₁+m²) − m + √(−Δ₂+m²) − m − Q/|r₁ − r₂|`.
pub fn relativistic_two_body_energy(t: &TwoBodyTrialState, q: f64, m: f64, ell: f64) -> Result<EnergyReport> {
    if !(q >= 0.0) || !(m >= 0.0) || !(ell > 0.0) {
        return Err(Error::domain("need Q >= 0, m >= 0 and ell > 0"));
    }
    let state = t.scaled(ell);
    let one = gaussian_relativistic_kinetic(state.momentum_sigma(), m)?;
    let w = inverse_separation_expectation(&state)?;
    let (a, b) = state.widths();
    let mut report = EnergyReport::new("relativistic two-body")
        .term("kinetic", 2.0 * one)
        .term("attraction", -q * w)
        .with_provenance("a", a)
        .with_provenance("b", b)
        .with_provenance("Q", q)
        .with_provenance("m", m)
        .with_provenance("ell", ell);
    report.push_check(Check::ge("kinetic nonnegative", one, 0.0, 0.0));
    Ok(report)
}

/// Massless energy `K − Q W` split into its two `Q`-independent pieces.
fn massless_pieces(t: &TwoBodyTrialState) -> Result<(f64, f64)> {
    let r = relativistic_two_body_energy(t, 1.0, 0.0, 1.0)?;
    Ok((r.get("kinetic").unwrap_or(0.0), -r.get("attraction").unwrap_or(0.0)))
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalChargeBound {
    /// Midpoint of the final bracket.
    pub q_upper: f64,
    pub bracket: (f64, f64),
    /// Family minimum of the massless energy at the bracket ends.
    pub energy_at_lower: f64,
    pub energy_at_upper: f64,
    pub best_state: TwoBodyTrialState,
    pub bisection_steps: usize,
}

/// Smallest `Q` at which the massless energy minimized over `family` turns
/// negative, bracketed by bisection to width `tol`.
pub fn critical_charge_upper_bound(family: &[TwoBodyTrialState], tol: f64) -> Result<CriticalChargeBound> {
    if family.is_empty() {
        return Err(Error::domain("trial family is empty"));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("bisection tolerance must be positive"));
    }
    let pieces: Vec<(f64, f64)> = family.par_iter().map(massless_pieces).collect::<Result<_>>()?;
    let family_min = |q: f64| -> (f64, usize) {
        pieces
            .iter()
            .enumerate()
            .map(|(i, (k, w))| (k - q * w, i))
            .fold((f64::INFINITY, 0), |best, cur| if cur.0 < best.0 { cur } else { best })
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while family_min(hi).0 >= 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Convergence { iterations: 40, residual: family_min(hi).0 });
        }
    }
    let mut steps = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if family_min(mid).0 < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    let (e_hi, best) = family_min(hi);
    Ok(CriticalChargeBound {
        q_upper: 0.5 * (lo + hi),
        bracket: (lo, hi),
        energy_at_lower: family_min(lo).0,
        energy_at_upper: e_hi,
        best_state: family[best],
        bisection_steps: steps,
    })
}

/// Correlated states with `b = 1` and `a/b` on a log grid from `ratio_min`
/// to `ratio_max`.
pub fn correlated_family(ratio_min: f64, ratio_max: f64, count: usize) -> Result<Vec<TwoBodyTrialState>> {
    if count < 2 || !(ratio_min > 0.0 && ratio_max > ratio_min) {
        return Err(Error::domain("need count >= 2 and 0 < ratio_min < ratio_max"));
    }
    (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            TwoBodyTrialState::correlated(ratio_min * (ratio_max / ratio_min).powf(t), 1.0)
        })
        .collect()
}

/// `Σ |k|²` over the `N` lowest Dirichlet modes `k ∈ {1, 2, ...}^dim`.
pub fn dirichlet_level_sum(count: usize, dim: usize) -> Result<u64> {
    if !(1..=3).contains(&dim) {
        return Err(Error::Unsupported(format!("dimension {dim} (supported: 1, 2, 3)")));
    }
    if count == 0 {
        return Ok(0);
    }
    let mut cap: u64 = 2;
    loop {
        let mut levels = Vec::new();
        let mut idx = vec![1u64; dim];
        loop {
            levels.push(idx.iter().map(|k| k * k).sum::<u64>());
            let mut axis = 0;
            while axis < dim {
                idx[axis] += 1;
                if idx[axis] <= cap {
                    break;
                }
                idx[axis] = 1;
                axis += 1;
            }
            if axis == dim {
                break;
            }
        }
        if levels.len() >= count {
            levels.sort_unstable();
            // Modes outside the cap have |k|² >= (cap+1)² + dim − 1.
            if levels[count - 1] < (cap + 1) * (cap + 1) + dim as u64 - 1 {
                return Ok(levels[..count].iter().sum());
            }
        }
        cap *= 2;
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CollapseRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub kinetic: f64,
    /// `kinetic/N − ½(N−1)c`.
    pub estimate: f64,
    /// `C N^{p}` from the fitted power law.
    pub fit: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CollapseReport {
    pub dim: usize,
    pub radius: f64,
    pub c: f64,
    pub cube_side: f64,
    pub rows: Vec<CollapseRow>,
    pub kinetic_exponent: f64,
    pub kinetic_exponent_std_error: f64,
    pub target_exponent: f64,
    pub fit_prefactor: f64,
    /// First tested `N` from which every later estimate is negative and
    /// strictly decreasing.
    pub collapse_onset: Option<usize>,
}

/// Slater determinant of the lowest Dirichlet modes of the cube inscribed
/// in the ball of radius `radius / 2`, so that every pair separation lies in
/// the ball of radius `radius` where `W ≤ −c`.
pub fn attractive_collapse_experiment(n_list: &[usize], radius: f64, c: f64, dim: usize) -> Result<CollapseReport> {
    if !(1..=3).contains(&dim) {
        return Err(Error::Unsupported(format!("dimension {dim} (supported: 1, 2, 3)")));
    }
    if !(radius > 0.0 && c > 0.0) {
        return Err(Error::domain("need radius > 0 and c > 0"));
    }
    if n_list.len() < 2 || n_list.contains(&0) {
        return Err(Error::domain("need at least two positive particle numbers"));
    }
    let side = radius / (dim as f64).sqrt();
    let unit = PI * PI / (2.0 * side * side);
    let kinetic: Vec<f64> = n_list
        .par_iter()
        .map(|&n| dirichlet_level_sum(n, dim).map(|s| s as f64 * unit))
        .collect::<Result<_>>()?;
    let ns: Vec<f64> = n_list.iter().map(|&n| n as f64).collect();
    let (slope, se) = log_log_slope(&ns, &kinetic);
    let lx = ns.iter().map(|v| v.ln()).sum::<f64>() / ns.len() as f64;
    let ly = kinetic.iter().map(|v| v.ln()).sum::<f64>() / ns.len() as f64;
    let prefactor = (ly - slope * lx).exp();
    let rows: Vec<CollapseRow> = n_list
        .iter()
        .zip(&kinetic)
        .map(|(&n, &k)| CollapseRow {
            n,
            kinetic: k,
            estimate: k / n as f64 - 0.5 * (n as f64 - 1.0) * c,
            fit: prefactor * (n as f64).powf(slope),
        })
        .collect();
    let mut onset = None;
    for i in (0..rows.len()).rev() {
        let decreasing = i + 1 == rows.len() || rows[i + 1].estimate < rows[i].estimate;
        if rows[i].estimate < 0.0 && decreasing {
            onset = Some(rows[i].n);
        } else {
            break;
        }
    }
    Ok(CollapseReport {
        dim,
        radius,
        c,
        cube_side: side,
        rows,
        kinetic_exponent: slope,
        kinetic_exponent_std_error: se,
        target_exponent: (dim as f64 + 2.0) / dim as f64,
        fit_prefactor: prefactor,
        collapse_onset: onset,
    })
}

/// `# {json parameters}` line followed by `N,kinetic,estimate,fit` rows.
pub fn write_collapse_csv<W: Write>(out: W, report: &CollapseReport) -> Result<()> {
    let mut out = out;
    let header = serde_json::json!({
        "dim": report.dim,
        "radius": report.radius,
        "c": report.c,
        "cube_side": report.cube_side,
        "kinetic_exponent": report.kinetic_exponent,
        "kinetic_exponent_std_error": report.kinetic_exponent_std_error,
        "collapse_onset": report.collapse_onset,
    });
    writeln!(out, "# {header}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "kinetic", "estimate", "fit"])?;
    for row in &report.rows {
        w.write_record([row.n.to_string(), fmt17(row.kinetic), fmt17(row.estimate), fmt17(row.fit)])?;
    }
    w.flush()?;
    Ok(())
}
