//! Energy expectation of the trial state in a finite radial basis for the
//! charge-reduced pair operator `γ₀`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::quadrature::gauss_legendre;
use crate::numerics::{psd_sqrt, PsdMatrix, RadialGridFunction};
use crate::report::{Check, EnergyReport};

/// Normalized nonnegative condensate function `ξ₀` and the particle-number
/// scale `N`.
#[derive(Debug, Clone)]
pub struct CondensateProfile {
    xi0: RadialGridFunction,
    n: f64,
}

impl CondensateProfile {
    pub fn new(xi0: RadialGridFunction, n: f64) -> Result<Self> {
        if !(n > 0.0) {
            return Err(Error::domain("N must be positive"));
        }
        if xi0.values().iter().any(|v| *v < 0.0) {
            return Err(Error::domain("condensate function must be nonnegative"));
        }
        let norm = xi0.volume_integral(|_, f| f * f, Some(-4.0))?;
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::domain(format!("condensate function is not normalized: ∫ξ₀² = {norm}")));
        }
        Ok(CondensateProfile { xi0, n })
    }

    /// Rescales the samples so that `∫ξ₀² = 1`.
    pub fn normalized(xi0: RadialGridFunction, n: f64) -> Result<Self> {
        let norm = xi0.volume_integral(|_, f| f * f, Some(-4.0))?;
        if !(norm > 0.0) {
            return Err(Error::domain("condensate function vanishes"));
        }
        let scaled: Vec<f64> = xi0.values().iter().map(|v| v / norm.sqrt()).collect();
        Self::new(xi0.with_values(scaled)?, n)
    }

    /// Normalized Gaussian `∝ exp(−r²/(2w²))` sampled on a uniform grid.
    pub fn gaussian(width: f64, n: f64, nodes: usize) -> Result<Self> {
        if !(width > 0.0) || nodes < 8 {
            return Err(Error::domain("need width > 0 and at least 8 nodes"));
        }
        let r_max = 12.0 * width;
        let grid = crate::numerics::uniform_nodes(0.0, r_max, nodes);
        let f = RadialGridFunction::from_fn(grid, |r| (-r * r / (2.0 * width * width)).exp(), crate::numerics::Tail::Zero)?;
        Self::normalized(f, n)
    }

    pub fn xi0(&self) -> &RadialGridFunction {
        &self.xi0
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    /// `∫|∇ξ₀|²`.
    pub fn gradient_energy(&self) -> Result<f64> {
        self.xi0.volume_integral(|r, _| self.xi0.derivative(r).powi(2), Some(-4.0))
    }
}

/// Real radial (s-wave) functions tabulated on a composite Gauss–Legendre
/// rule, with their derivatives.
#[derive(Debug, Clone)]
pub struct RadialBasis {
    nodes: Vec<f64>,
    // Include the 4πr² volume factor.
    weights: Vec<f64>,
    values: Vec<Vec<f64>>,
    derivatives: Vec<Vec<f64>>,
    k_max: f64,
}

fn composite_rule(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

impl RadialBasis {
    /// Tabulated basis; `k_max` bounds the momentum range used for the
    /// Coulomb kernel.
    pub fn from_tables(nodes: Vec<f64>, weights: Vec<f64>, values: Vec<Vec<f64>>, derivatives: Vec<Vec<f64>>, k_max: f64) -> Result<Self> {
        let n = nodes.len();
        if weights.len() != n || values.is_empty() || values.len() != derivatives.len() {
            return Err(Error::Shape("inconsistent basis tables".into()));
        }
        if values.iter().chain(&derivatives).any(|v| v.len() != n) {
            return Err(Error::Shape("basis function tables must match the node count".into()));
        }
        if !(k_max > 0.0) {
            return Err(Error::domain("k_max must be positive"));
        }
        let basis = RadialBasis { nodes, weights, values, derivatives, k_max };
        let deviation = basis.gram_deviation();
        if deviation >= 1e-10 {
            return Err(Error::Basis { deviation });
        }
        Ok(basis)
    }

    /// Löwdin-orthonormalized Gaussians `exp(−r²/(2w²))`.
    pub fn gaussians(widths: &[f64]) -> Result<Self> {
        if widths.is_empty() || widths.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::domain("need positive Gaussian widths"));
        }
        let w_max = widths.iter().cloned().fold(0.0, f64::max);
        let w_min = widths.iter().cloned().fold(f64::INFINITY, f64::min);
        let r_max = 12.0 * w_max;
        let panels = ((r_max / w_min) * 2.0).ceil() as usize;
        let (nodes, gl) = composite_rule(0.0, r_max, panels.max(8), 16);
        let weights: Vec<f64> = nodes.iter().zip(&gl).map(|(r, w)| 4.0 * PI * r * r * w).collect();
        let prim: Vec<Vec<f64>> = widths.iter().map(|w| nodes.iter().map(|r| (-r * r / (2.0 * w * w)).exp()).collect()).collect();
        let dprim: Vec<Vec<f64>> = widths
            .iter()
            .zip(&prim)
            .map(|(w, g)| nodes.iter().zip(g).map(|(r, g)| -r / (w * w) * g).collect())
            .collect();
        let m = widths.len();
        let overlap = DMatrix::from_fn(m, m, |i, j| (0..nodes.len()).map(|k| weights[k] * prim[i][k] * prim[j][k]).sum());
        let inv_sqrt = PsdMatrix::new(overlap, None)?.map_spectrum(|s| 1.0 / s.sqrt());
        let combine = |table: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            (0..m).map(|i| (0..nodes.len()).map(|k| (0..m).map(|j| inv_sqrt[(j, i)] * table[j][k]).sum()).collect()).collect()
        };
        let values = combine(&prim);
        let derivatives = combine(&dprim);
        Self::from_tables(nodes, weights, values, derivatives, 14.0 / w_min)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn gram_deviation(&self) -> f64 {
        let m = self.len();
        let mut dev: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let g: f64 = (0..self.nodes.len()).map(|k| self.weights[k] * self.values[i][k] * self.values[j][k]).sum();
                dev = dev.max((g - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        dev
    }

    /// `T_ij = ∫ ∇u_i · ∇u_j`.
    pub fn kinetic_matrix(&self) -> DMatrix<f64> {
        let m = self.len();
        DMatrix::from_fn(m, m, |i, j| (0..self.nodes.len()).map(|k| self.weights[k] * self.derivatives[i][k] * self.derivatives[j][k]).sum())
    }

    /// `𝒦_ij = ∬ u_i(r) ξ₀(r) |r − r'|⁻¹ ξ₀(r') u_j(r')`, evaluated in
    /// momentum space as `(2/π) ∫_0^∞ ĥ_i(k) ĥ_j(k) dk` with `h_i = u_i ξ₀`.
    pub fn coulomb_kernel_matrix(&self, xi0: &CondensateProfile) -> DMatrix<f64> {
        let m = self.len();
        let xi: Vec<f64> = self.nodes.iter().map(|r| xi0.xi0().eval(*r)).collect();
        let (ks, kw) = composite_rule(0.0, self.k_max, 64, 16);
        let transforms: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                ks.iter()
                    .map(|k| {
                        (0..self.nodes.len())
                            .map(|q| {
                                let kr = k * self.nodes[q];
                                let sinc = if kr < 1e-8 { 1.0 - kr * kr / 6.0 } else { kr.sin() / kr };
                                self.weights[q] * self.values[i][q] * xi[q] * sinc
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let kernel = DMatrix::from_fn(m, m, |i, j| 2.0 / PI * (0..ks.len()).map(|q| kw[q] * transforms[i][q] * transforms[j][q]).sum::<f64>());
        (&kernel + kernel.transpose()) * 0.5
    }
}

fn check_dims(gamma0: &PsdMatrix, basis: &RadialBasis) -> Result<()> {
    if gamma0.dim() != basis.len() {
        return Err(Error::Shape(format!("γ₀ is {0}x{0} but the basis has {1} functions", gamma0.dim(), basis.len())));
    }
    let deviation = basis.gram_deviation();
    if deviation >= 1e-10 {
        return Err(Error::Basis { deviation });
    }
    Ok(())
}

/// `N Tr(𝒦(γ₀ − √(γ₀(γ₀+1))))` with the square root taken of the assembled
/// matrix `γ₀² + γ₀`.
pub fn coulomb_expectation_finite_basis(xi0: &CondensateProfile, gamma0: &PsdMatrix, basis: &RadialBasis) -> Result<f64> {
    check_dims(gamma0, basis)?;
    let g = gamma0.entries();
    let product = PsdMatrix::new(g * g + g, None)?;
    let m = g - psd_sqrt(&product).entries();
    Ok(xi0.n() * (basis.coulomb_kernel_matrix(xi0) * m).trace())
}

/// Same trace with `t − √(t(t+1))` applied to the eigenvalues of `γ₀`.
pub fn coulomb_expectation_spectral(xi0: &CondensateProfile, gamma0: &PsdMatrix, basis: &RadialBasis) -> Result<f64> {
    check_dims(gamma0, basis)?;
    let m = gamma0.map_spectrum(|t| t - (t * (t + 1.0)).sqrt());
    Ok(xi0.n() * (basis.coulomb_kernel_matrix(xi0) * m).trace())
}

/// `(N/2)∫|∇ξ₀|² + ½Tr(−Δγ₀) + N Tr(𝒦(γ₀ − √(γ₀(γ₀+1))))`.
pub fn total_energy_expectation(xi0: &CondensateProfile, gamma0: &PsdMatrix, basis: &RadialBasis) -> Result<EnergyReport> {
    check_dims(gamma0, basis)?;
    let condensate = 0.5 * xi0.n() * xi0.gradient_energy()?;
    let pair_kinetic = 0.5 * (basis.kinetic_matrix() * gamma0.entries()).trace();
    let coulomb = coulomb_expectation_finite_basis(xi0, gamma0, basis)?;
    let mut report = EnergyReport::new("bogoliubov trial energy")
        .term("condensate_kinetic", condensate)
        .term("pair_kinetic", pair_kinetic)
        .term("coulomb", coulomb)
        .with_provenance("N", xi0.n())
        .with_provenance("basis_size", basis.len() as u64);
    let scale = 1e-12 * (condensate.abs() + pair_kinetic.abs() + coulomb.abs()).max(1.0);
    report.push_check(Check::ge("pair kinetic nonnegative", pair_kinetic, 0.0, scale));
    report.push_check(Check::ge("coulomb term nonpositive", 0.0, coulomb, scale));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn basis_is_orthonormal() {
        let b = RadialBasis::gaussians(&[0.5, 1.0, 2.0]).unwrap();
        assert!(b.gram_deviation() < 1e-12);
        let bad = RadialBasis::from_tables(vec![1.0], vec![1.0], vec![vec![2.0]], vec![vec![0.0]], 1.0);
        assert!(matches!(bad, Err(Error::Basis { .. })));
    }

    #[test]
    fn gaussian_kernel_oracle() {
        // One Gaussian basis function times a Gaussian ξ₀ is a Gaussian
        // charge density with a closed-form self-energy.
        let (w, v) = (1.0, 1.5);
        let xi0 = CondensateProfile::gaussian(v, 1.0, 3000).unwrap();
        let b = RadialBasis::gaussians(&[w]).unwrap();
        let k = b.coulomb_kernel_matrix(&xi0)[(0, 0)];
        let a2 = 1.0 / (1.0 / (w * w) + 1.0 / (v * v));
        let nu = (PI * w * w).powf(-0.75);
        let nx = (PI * v * v).powf(-0.75);
        let q = nu * nx * (2.0 * PI * a2).powf(1.5);
        let exact = q * q / (PI.sqrt() * a2.sqrt());
        assert!((k - exact).abs() < 1e-7 * exact, "{k} vs {exact}");
    }

    #[test]
    fn condensate_gradient_term() {
        let w = 0.8;
        let xi0 = CondensateProfile::gaussian(w, 10.0, 4000).unwrap();
        let b = RadialBasis::gaussians(&[1.0]).unwrap();
        let zero = PsdMatrix::from_diagonal(&[0.0]).unwrap();
        let r = total_energy_expectation(&xi0, &zero, &b).unwrap();
        let expected = 0.5 * 10.0 * 3.0 / (2.0 * w * w);
        assert!((r.get("condensate_kinetic").unwrap() - expected).abs() < 1e-6 * expected);
        assert_eq!(r.get("coulomb").unwrap(), 0.0);
        assert_eq!(r.get("pair_kinetic").unwrap(), 0.0);
    }

    #[test]
    fn rank_one_and_routes() {
        let xi0 = CondensateProfile::gaussian(1.0, 3.0, 3000).unwrap();
        let b = RadialBasis::gaussians(&[0.4, 0.7, 1.0, 1.5, 2.2, 3.0]).unwrap();
        let k = b.coulomb_kernel_matrix(&xi0);
        let t = 0.7;
        let mut u = DMatrix::zeros(6, 6);
        u[(2, 2)] = t;
        let g = PsdMatrix::new(u, None).unwrap();
        let e = coulomb_expectation_finite_basis(&xi0, &g, &b).unwrap();
        let expected = 3.0 * (t - (t * (t + 1.0)).sqrt()) * k[(2, 2)];
        assert!((e - expected).abs() < 1e-12 * expected.abs() && e < 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
        let g = PsdMatrix::new(&a * a.transpose() * 0.3, None).unwrap();
        let r1 = coulomb_expectation_finite_basis(&xi0, &g, &b).unwrap();
        let r2 = coulomb_expectation_spectral(&xi0, &g, &b).unwrap();
        assert!((r1 - r2).abs() < 1e-10 * r1.abs(), "{r1} vs {r2}");
        let report = total_energy_expectation(&xi0, &g, &b).unwrap();
        assert!(report.checks.iter().all(|c| c.passed));
    }
}
