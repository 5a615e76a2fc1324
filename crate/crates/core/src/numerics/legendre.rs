//! Kinetic-energy profiles and their Legendre transforms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kinetic energy as a function of momentum magnitude, units with c = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KineticProfile {
    /// `p² / 2m`
    Nonrelativistic { m: f64 },
    /// `√(p² + m²) − m`
    Relativistic { m: f64 },
}

impl KineticProfile {
    pub fn nonrelativistic(m: f64) -> Result<Self> {
        check_mass(m)?;
        Ok(KineticProfile::Nonrelativistic { m })
    }

    pub fn relativistic(m: f64) -> Result<Self> {
        check_mass(m)?;
        Ok(KineticProfile::Relativistic { m })
    }

    pub fn mass(&self) -> f64 {
        match *self {
            KineticProfile::Nonrelativistic { m } | KineticProfile::Relativistic { m } => m,
        }
    }

    pub fn energy(&self, p: f64) -> f64 {
        match *self {
            KineticProfile::Nonrelativistic { m } => p * p / (2.0 * m),
            // Written to avoid cancellation for p << m.
            KineticProfile::Relativistic { m } => p * p / ((p * p + m * m).sqrt() + m),
        }
    }

    /// Closed-form Legendre transform in the velocity variable.
    pub fn conjugate(&self, v: f64) -> f64 {
        match *self {
            KineticProfile::Nonrelativistic { m } => 0.5 * m * v * v,
            KineticProfile::Relativistic { m } => {
                if v.abs() >= 1.0 {
                    f64::INFINITY
                } else {
                    m * v * v / (1.0 + (1.0 - v * v).sqrt())
                }
            }
        }
    }

    pub fn sample(&self, grid: &[f64]) -> SampledConvex {
        SampledConvex {
            grid: grid.to_vec(),
            values: grid.iter().map(|&p| self.energy(p)).collect(),
        }
    }
}

fn check_mass(m: f64) -> Result<()> {
    if m > 0.0 && m.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("mass must be positive, got {m}")))
    }
}

/// A convex function sampled on a strictly increasing 1-D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledConvex {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl SampledConvex {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 3 || grid.len() != values.len() {
            return Err(Error::Shape("Legendre transform needs >= 3 matching samples".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("sample grid must be strictly increasing"));
        }
        Ok(SampledConvex { grid, values })
    }

    fn slope(&self, i: usize) -> f64 {
        (self.values[i + 1] - self.values[i]) / (self.grid[i + 1] - self.grid[i])
    }

    /// Range of slopes attained by the piecewise-linear interpolant.
    pub fn slope_range(&self) -> (f64, f64) {
        (self.slope(0), self.slope(self.grid.len() - 2))
    }

    /// Fails on the first slope decrease larger than `tol`.
    pub fn check_convex(&self, tol: f64) -> Result<()> {
        for i in 0..self.grid.len() - 2 {
            let d = self.slope(i + 1) - self.slope(i);
            if d < -tol {
                return Err(Error::ConvexityViolation { index: i + 1, value: d });
            }
        }
        Ok(())
    }
}

/// `sup_p (v p − T(p))` over the sampled function, refined by the vertex of
/// the parabola through the best grid point and its neighbours.
pub fn legendre_transform(t: &SampledConvex, v: f64) -> Result<f64> {
    let scale = t.values.iter().fold(0.0_f64, |a, x| a.max(x.abs())).max(1.0);
    t.check_convex(1e-9 * scale)?;
    let (lo, hi) = t.slope_range();
    if !(v >= lo && v <= hi) {
        return Err(Error::domain(format!("v = {v} outside the attained slope range [{lo}, {hi}]")));
    }
    let objective = |i: usize| v * t.grid[i] - t.values[i];
    let n = t.grid.len();
    let best = (0..n).max_by(|&a, &b| objective(a).total_cmp(&objective(b))).unwrap();
    let grid_max = objective(best);
    if best == 0 || best == n - 1 {
        return Ok(grid_max);
    }
    let (x0, x1, x2) = (t.grid[best - 1], t.grid[best], t.grid[best + 1]);
    let (y0, y1, y2) = (objective(best - 1), grid_max, objective(best + 1));
    // Newton divided differences of the interpolating parabola.
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    if curv >= 0.0 {
        return Ok(grid_max);
    }
    let xv = 0.5 * (x0 + x1) - d01 / (2.0 * curv);
    let xv = xv.clamp(x0, x2);
    let refined = y0 + d01 * (xv - x0) + curv * (xv - x0) * (xv - x1);
    Ok(refined.max(grid_max))
}

/// Samples the Legendre transform of `t` on `v_grid`.
pub fn legendre_transform_sampled(t: &SampledConvex, v_grid: &[f64]) -> Result<SampledConvex> {
    let values = v_grid.iter().map(|&v| legendre_transform(t, v)).collect::<Result<Vec<_>>>()?;
    SampledConvex::new(v_grid.to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn nonrelativistic_transform() {
        let t = KineticProfile::nonrelativistic(1.0).unwrap().sample(&grid(-5.0, 5.0, 1001));
        assert!((legendre_transform(&t, 0.6).unwrap() - 0.18).abs() < 1e-12);
    }

    #[test]
    fn relativistic_transform() {
        let t = KineticProfile::relativistic(1.0).unwrap().sample(&grid(-20.0, 20.0, 4001));
        let got = legendre_transform(&t, 0.6).unwrap();
        assert!((got - 0.2).abs() < 1e-7, "{got}");
        assert!((KineticProfile::Relativistic { m: 1.0 }.conjugate(0.6) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn double_transform_recovers_function() {
        let profile = KineticProfile::relativistic(1.0).unwrap();
        let t = profile.sample(&grid(-30.0, 30.0, 6001));
        let (lo, hi) = t.slope_range();
        let v = grid(lo * 0.999, hi * 0.999, 4001);
        let t_star = legendre_transform_sampled(&t, &v).unwrap();
        for &p in &[-2.0, -0.5, 0.0, 0.3, 1.0, 2.5] {
            let back = legendre_transform(&t_star, p).unwrap();
            assert!((back - profile.energy(p)).abs() < 1e-4, "p={p}: {back}");
        }
    }

    #[test]
    fn rejects_nonconvex_and_out_of_range() {
        let g = grid(-1.0, 1.0, 21);
        let bad = SampledConvex::new(g.clone(), g.iter().map(|p| -p * p).collect()).unwrap();
        assert!(matches!(legendre_transform(&bad, 0.0), Err(Error::ConvexityViolation { .. })));
        let t = KineticProfile::nonrelativistic(1.0).unwrap().sample(&g);
        assert!(matches!(legendre_transform(&t, 5.0), Err(Error::Domain(_))));
        assert!(KineticProfile::nonrelativistic(0.0).is_err());
    }

    #[test]
    fn transform_is_convex_in_v() {
        let t = KineticProfile::relativistic(2.0).unwrap().sample(&grid(-40.0, 40.0, 8001));
        let v = grid(-0.95, 0.95, 191);
        let t_star = legendre_transform_sampled(&t, &v).unwrap();
        t_star.check_convex(1e-9).unwrap();
    }
}
