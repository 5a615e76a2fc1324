//! The constrained variational problem `inf {½∫|∇Φ|² − I₀∫Φ^{5/2}}` over
//! normalized `Φ ≥ 0`, and the `N^{7/5}` rescaling of its minimizer.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{RadialGridFunction, Tail};

/// Uniform interior grid `r_i = i h`, `i = 1..=n`, `h = r_max/(n+1)`, with
/// Dirichlet values at `0` and `r_max` for `u = rΦ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DysonGrid {
    pub r_max: f64,
    pub n: usize,
}

impl Default for DysonGrid {
    fn default() -> Self {
        DysonGrid { r_max: 80.0, n: 2000 }
    }
}

impl DysonGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max > 0.0) || n < 16 {
            return Err(Error::domain("need r_max > 0 and at least 16 grid points"));
        }
        Ok(DysonGrid { r_max, n })
    }

    pub fn spacing(&self) -> f64 {
        self.r_max / (self.n + 1) as f64
    }

    pub fn radii(&self) -> Vec<f64> {
        let h = self.spacing();
        (1..=self.n).map(|i| i as f64 * h).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    pub initial_step: f64,
    /// Target for the Euler–Lagrange residual `‖HΦ − μΦ‖`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { initial_step: 2.0, tolerance: 1e-8, max_iterations: 20_000 }
    }
}

/// `(K, P) = (∫|∇Φ|², ∫Φ^{5/2})` for `u = rΦ` sampled with spacing `h`.
pub fn dyson_energy_terms(h: f64, u: &[f64]) -> (f64, f64) {
    let n = u.len();
    let mut k = 0.0;
    let mut p = 0.0;
    for i in 0..=n {
        let left = if i == 0 { 0.0 } else { u[i - 1] };
        let right = if i == n { 0.0 } else { u[i] };
        k += (right - left).powi(2);
    }
    for (i, v) in u.iter().enumerate() {
        let r = (i + 1) as f64 * h;
        p += v.max(0.0).powf(2.5) / r.sqrt();
    }
    (4.0 * PI * k / h, 4.0 * PI * h * p)
}

fn l2_norm_sq(h: f64, u: &[f64]) -> f64 {
    4.0 * PI * h * u.iter().map(|v| v * v).sum::<f64>()
}

// Solves the symmetric tridiagonal system with constant off-diagonal.
fn tridiagonal_solve(diag: &[f64], off: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - off * c[i - 1];
        c[i] = off / denom;
        d[i] = (rhs[i] - off * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// `(H u, μ, ‖Hu − μu‖)` with `H = −½Δ − (5/4) I₀ Φ^{1/2}`.
fn euler_lagrange(h: f64, u: &[f64], r: &[f64], i0: f64) -> (f64, f64) {
    let n = u.len();
    let hu: Vec<f64> = (0..n)
        .map(|i| {
            let left = if i == 0 { 0.0 } else { u[i - 1] };
            let right = if i + 1 == n { 0.0 } else { u[i + 1] };
            let lap = (left - 2.0 * u[i] + right) / (h * h);
            -0.5 * lap - 1.25 * i0 * (u[i] / r[i]).max(0.0).sqrt() * u[i]
        })
        .collect();
    let mu = 4.0 * PI * h * u.iter().zip(&hu).map(|(a, b)| a * b).sum::<f64>();
    let res = (4.0 * PI * h * u.iter().zip(&hu).map(|(a, b)| (b - mu * a).powi(2)).sum::<f64>()).sqrt();
    (mu, res)
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationalState {
    pub grid: DysonGrid,
    pub i0: f64,
    /// `Φ(r_i)` on the interior grid.
    pub phi: Vec<f64>,
    /// `∫|∇Φ|²`
    pub kinetic: f64,
    /// `∫Φ^{5/2}`
    pub potential: f64,
    /// `½K − I₀P`
    pub energy: f64,
    pub multiplier: f64,
    pub euler_lagrange_residual: f64,
    /// `|K − (3/4)I₀P| / K`
    pub virial_residual: f64,
    pub iterations: usize,
    pub step_reductions: usize,
}

impl VariationalState {
    pub fn radii(&self) -> Vec<f64> {
        self.grid.radii()
    }

    /// `Φ` as a radial grid function, including the origin value obtained by
    /// quadratic extrapolation.
    pub fn phi_function(&self) -> Result<RadialGridFunction> {
        let mut nodes = vec![0.0];
        nodes.extend(self.radii());
        nodes.push(self.grid.r_max);
        let origin = 3.0 * self.phi[0] - 3.0 * self.phi[1] + self.phi[2];
        let mut values = vec![origin.max(0.0)];
        values.extend_from_slice(&self.phi);
        values.push(0.0);
        RadialGridFunction::new(nodes, values, Tail::Zero)
    }

    /// `√⟨r²⟩` of `Φ²`.
    pub fn rms_radius(&self) -> f64 {
        let h = self.grid.spacing();
        let r = self.radii();
        (4.0 * PI * h * self.phi.iter().zip(&r).map(|(p, r)| p * p * r.powi(4)).sum::<f64>()).sqrt()
    }
}

/// Normalized gradient flow with a frozen-potential implicit step:
/// `(1 + τ(−½Δ − (5/4)I₀Φ_k^{1/2})) u_{k+1} = u_k`, followed by projection
/// onto `u ≥ 0` and renormalization. The step is halved whenever the
/// energy would rise. Fixed points solve the discrete Euler–Lagrange
/// equation exactly.
pub fn dyson_variational_solve(grid: DysonGrid, i0: f64, init: &RadialGridFunction, options: SolverOptions) -> Result<VariationalState> {
    if !(i0 > 0.0) {
        return Err(Error::domain("I0 must be positive"));
    }
    let h = grid.spacing();
    let r = grid.radii();
    let mut u: Vec<f64> = r.iter().map(|r| r * init.eval(*r)).collect();
    if u.iter().any(|v| *v < 0.0) {
        return Err(Error::domain("initial profile must be nonnegative"));
    }
    let norm = l2_norm_sq(h, &u);
    if (norm - 1.0).abs() > 1e-3 {
        return Err(Error::domain(format!("initial profile is not normalized on the grid: ∫Φ² = {norm}")));
    }
    u.iter_mut().for_each(|v| *v /= norm.sqrt());

    let energy = |u: &[f64]| {
        let (k, p) = dyson_energy_terms(h, u);
        0.5 * k - i0 * p
    };
    let mut tau = options.initial_step;
    let mut e = energy(&u);
    let mut reductions = 0;
    let off = -0.5 / (h * h);
    for iteration in 0..options.max_iterations {
        let (_, res) = euler_lagrange(h, &u, &r, i0);
        if res < options.tolerance {
            return Ok(finish(grid, i0, u, iteration, reductions));
        }
        loop {
            let diag: Vec<f64> = u.iter().zip(&r).map(|(v, r)| 1.0 + tau / (h * h) - tau * 1.25 * i0 * (v / r).max(0.0).sqrt()).collect();
            let mut next = tridiagonal_solve(&diag, tau * off, &u);
            next.iter_mut().for_each(|v| *v = v.max(0.0));
            let nrm = l2_norm_sq(h, &next);
            next.iter_mut().for_each(|v| *v /= nrm.sqrt());
            let e_next = energy(&next);
            if e_next <= e + 1e-14 * e.abs() || tau < 1e-8 {
                u = next;
                e = e_next;
                break;
            }
            tau *= 0.5;
            reductions += 1;
        }
    }
    let (_, res) = euler_lagrange(h, &u, &r, i0);
    Err(Error::Convergence { iterations: options.max_iterations, residual: res })
}

fn finish(grid: DysonGrid, i0: f64, u: Vec<f64>, iterations: usize, reductions: usize) -> VariationalState {
    let h = grid.spacing();
    let r = grid.radii();
    let (k, p) = dyson_energy_terms(h, &u);
    let (mu, res) = euler_lagrange(h, &u, &r, i0);
    VariationalState {
        grid,
        i0,
        phi: u.iter().zip(&r).map(|(u, r)| u / r).collect(),
        kinetic: k,
        potential: p,
        energy: 0.5 * k - i0 * p,
        multiplier: mu,
        euler_lagrange_residual: res,
        virial_residual: (k - 0.75 * i0 * p).abs() / k,
        iterations,
        step_reductions: reductions,
    }
}

/// Normalized Gaussian start `∝ exp(−r²/(2w²))`.
pub fn gaussian_initial_profile(width: f64) -> Result<RadialGridFunction> {
    let nodes = crate::numerics::uniform_nodes(0.0, 14.0 * width, 1400);
    let norm = (PI * width * width).powf(-0.75);
    RadialGridFunction::from_fn(nodes, |r| norm * (-r * r / (2.0 * width * width)).exp(), Tail::Zero)
}

/// `r,phi` rows.
pub fn write_dyson_csv<W: Write>(out: W, state: &VariationalState) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "phi"])?;
    for (r, p) in state.radii().iter().zip(&state.phi) {
        w.write_record([crate::report::fmt17(*r), crate::report::fmt17(*p)])?;
    }
    w.flush()?;
    Ok(())
}

/// Everything in the state except the profile itself.
pub fn dyson_sidecar(state: &VariationalState) -> serde_json::Value {
    serde_json::json!({
        "grid": state.grid,
        "I0": state.i0,
        "K": state.kinetic,
        "P": state.potential,
        "E_star": state.energy,
        "multiplier": state.multiplier,
        "euler_lagrange_residual": state.euler_lagrange_residual,
        "virial_residual": state.virial_residual,
        "iterations": state.iterations,
        "step_reductions": state.step_reductions,
        "rms_radius": state.rms_radius(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DysonRow {
    #[serde(rename = "N")]
    pub n: f64,
    /// `(N/2)∫|∇ξ₀|² − I₀ N^{5/4} ∫ξ₀^{5/2}`
    pub e_upper: f64,
    pub ratio: f64,
    pub rms_radius: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DysonPipelineReport {
    pub e_star: f64,
    pub rows: Vec<DysonRow>,
    /// `max |ratio − E*| / |E*|`
    pub max_ratio_deviation: f64,
}

/// Builds `ξ₀(r) = N^{3/10} Φ(N^{1/5} r)` on the correspondingly scaled grid
/// and evaluates the semiclassical upper bound.
pub fn dyson_pipeline(state: &VariationalState, n_list: &[f64]) -> Result<DysonPipelineReport> {
    if n_list.is_empty() || n_list.iter().any(|n| !(*n > 0.0)) {
        return Err(Error::domain("particle numbers must be positive"));
    }
    let r = state.radii();
    let rows: Vec<DysonRow> = n_list
        .iter()
        .map(|&n| {
            let shrink = n.powf(-0.2);
            let h = state.grid.spacing() * shrink;
            let xi: Vec<f64> = state.phi.iter().map(|p| n.powf(0.3) * p).collect();
            let u: Vec<f64> = xi.iter().zip(&r).map(|(x, r)| x * r * shrink).collect();
            let (k, p) = dyson_energy_terms(h, &u);
            let e_upper = 0.5 * n * k - state.i0 * n.powf(1.25) * p;
            let rms = (4.0 * PI * h * u.iter().zip(&r).map(|(u, r)| u * u * (r * shrink).powi(2)).sum::<f64>()).sqrt();
            DysonRow { n, e_upper, ratio: e_upper / n.powf(1.4), rms_radius: rms }
        })
        .collect();
    let max_dev = rows.iter().map(|row| (row.ratio - state.energy).abs() / state.energy.abs()).fold(0.0, f64::max);
    Ok(DysonPipelineReport { e_star: state.energy, rows, max_ratio_deviation: max_dev })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bogoliubov::semiclassical::compute_i0;

    fn solve(grid: DysonGrid) -> VariationalState {
        let i0 = compute_i0().unwrap().quadrature;
        dyson_variational_solve(grid, i0, &gaussian_initial_profile(4.0).unwrap(), SolverOptions::default()).unwrap()
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let diag = [4.0, 5.0, 6.0, 7.0];
        let x = tridiagonal_solve(&diag, -1.0, &[1.0, 2.0, 3.0, 4.0]);
        let back: Vec<f64> = (0..4)
            .map(|i| diag[i] * x[i] - if i > 0 { x[i - 1] } else { 0.0 } - if i < 3 { x[i + 1] } else { 0.0 })
            .collect();
        for (b, e) in back.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((b - e).abs() < 1e-14);
        }
    }

    #[test]
    fn scaling_identity() {
        let grid = DysonGrid::new(40.0, 400).unwrap();
        let h = grid.spacing();
        let u: Vec<f64> = grid.radii().iter().map(|r| r * (-r * r / 20.0).exp()).collect();
        let (k, p) = dyson_energy_terms(h, &u);
        let sigma: f64 = 1.7;
        // Φ_σ(r) = σ^{3/2} Φ(σ r) on the grid with spacing h/σ.
        let us: Vec<f64> = u.iter().map(|v| v * sigma.sqrt()).collect();
        let (ks, ps) = dyson_energy_terms(h / sigma, &us);
        assert!((ks - sigma * sigma * k).abs() < 1e-12 * ks);
        assert!((ps - sigma.powf(0.75) * p).abs() < 1e-12 * ps);
    }

    #[test]
    fn solver_postconditions() {
        let s = solve(DysonGrid::default());
        assert!(s.energy < 0.0);
        assert!(s.virial_residual < 1e-3, "{}", s.virial_residual);
        assert!((s.energy + 5.0 / 6.0 * s.kinetic).abs() < 1e-3 * s.energy.abs());
        assert!(s.phi.iter().all(|p| *p >= 0.0));
        let finer = solve(DysonGrid::new(80.0, 4000).unwrap());
        assert!((finer.energy - s.energy).abs() < 1e-3 * s.energy.abs());
    }

    #[test]
    fn pipeline_scaling() {
        let s = solve(DysonGrid::new(60.0, 1200).unwrap());
        let r = dyson_pipeline(&s, &[10.0, 1e3, 1e6]).unwrap();
        assert!(r.max_ratio_deviation < 1e-10);
        let shrink = r.rows[2].rms_radius / r.rows[1].rms_radius;
        assert!((shrink - 1e-3f64.powf(0.2)).abs() < 1e-12);
        let mut buf = Vec::new();
        write_dyson_csv(&mut buf, &s).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("r,phi\n"));
        assert!(dyson_sidecar(&s)["virial_residual"].as_f64().unwrap() < 1e-3);
    }

    #[test]
    fn rejects_bad_input() {
        let bad = gaussian_initial_profile(4.0).unwrap();
        let scaled = bad.with_values(bad.values().iter().map(|v| 2.0 * v).collect()).unwrap();
        assert!(dyson_variational_solve(DysonGrid::default(), 0.5, &scaled, SolverOptions::default()).is_err());
        let opts = SolverOptions { max_iterations: 3, ..Default::default() };
        assert!(matches!(dyson_variational_solve(DysonGrid::default(), 0.5, &bad, opts), Err(Error::Convergence { .. })));
    }
}
