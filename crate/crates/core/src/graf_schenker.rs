//! Monte-Carlo averaging of Coulomb sums over rotated and translated copies
//! of a scaled simplex.
//!
//! For a simplex `△` and the isometry group with Lebesgue measure on
//! translations and unit-mass Haar measure on rotations,
//! `F(r, r') / |ℓ△|` is the probability-normalized measure of placements
//! containing both points. Writing a placement containing `r` as
//! `t = r − R x` with `x` uniform in `ℓ△` turns this into the probability that
//! `x + Rᵀ(r' − r)` stays in `ℓ△`, which only depends on `|r − r'|` and
//! equals the survival function `g(d) = P(ℓ s ≥ d)` of the exit distance
//! `s` of a random ray from a uniform point of `△`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::coulomb::ChargeConfiguration;
use crate::error::{Error, Result};
use crate::numerics::radial::{radial_fourier_transform, RadialGridFunction, Tail};
use crate::rng::stream;

const SHARD: usize = 4096;

/// Tetrahedron given by its four vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    vertices: [Vector3<f64>; 4],
    // Barycentric map: λ_{1..3} = inv (p − v0).
    inv: Matrix3<f64>,
    // Outward unit normals and offsets, n·p ≤ b inside.
    faces: [(Vector3<f64>, f64); 4],
    volume: f64,
}

impl Simplex {
    pub fn new(vertices: [[f64; 3]; 4]) -> Result<Self> {
        let v = vertices.map(Vector3::from);
        let edges = Matrix3::from_columns(&[v[1] - v[0], v[2] - v[0], v[3] - v[0]]);
        let volume = edges.determinant().abs() / 6.0;
        let scale = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| (v[i] - v[j]).norm())
            .fold(0.0, f64::max);
        if !(volume > 1e-12 * scale.powi(3)) {
            return Err(Error::Degenerate(format!("simplex volume {volume:e} is zero")));
        }
        let inv = edges.try_inverse().ok_or_else(|| Error::Degenerate("singular simplex".into()))?;
        let faces = [0usize, 1, 2, 3].map(|skip| {
            let idx: Vec<usize> = (0..4).filter(|&i| i != skip).collect();
            let (a, b, c) = (v[idx[0]], v[idx[1]], v[idx[2]]);
            let mut n = (b - a).cross(&(c - a)).normalize();
            if n.dot(&(v[skip] - a)) > 0.0 {
                n = -n;
            }
            (n, n.dot(&a))
        });
        Ok(Simplex { vertices: v, inv, faces, volume })
    }

    /// Regular tetrahedron of the given edge length, centred at the origin.
    pub fn regular(edge: f64) -> Result<Self> {
        let s = edge / (2.0 * 2f64.sqrt());
        Self::new([[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]])
    }

    pub fn vertices(&self) -> [[f64; 3]; 4] {
        self.vertices.map(|v| [v.x, v.y, v.z])
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn surface_area(&self) -> f64 {
        let v = &self.vertices;
        [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]
            .iter()
            .map(|f| 0.5 * (v[f[1]] - v[f[0]]).cross(&(v[f[2]] - v[f[0]])).norm())
            .sum()
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                d = d.max((self.vertices[i] - self.vertices[j]).norm());
            }
        }
        d
    }

    fn max_vertex_norm(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Barycentric containment with `1e-12` slack.
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let l = self.inv * (p - self.vertices[0]);
        l.x >= -1e-12 && l.y >= -1e-12 && l.z >= -1e-12 && l.x + l.y + l.z <= 1.0 + 1e-12
    }

    /// Uniform point (flat Dirichlet weights on the vertices).
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector3<f64> {
        let w: [f64; 4] = std::array::from_fn(|_| -(1.0 - rng.random::<f64>()).ln());
        let total: f64 = w.iter().sum();
        (0..4).map(|i| self.vertices[i] * (w[i] / total)).sum()
    }

    /// Distance from an interior point to the boundary along unit direction `u`.
    pub fn exit_distance(&self, x: &Vector3<f64>, u: &Vector3<f64>) -> f64 {
        self.faces
            .iter()
            .filter_map(|(n, b)| {
                let speed = n.dot(u);
                (speed > 0.0).then(|| ((b - n.dot(x)) / speed).max(0.0))
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `ℓ · lim_{d→0} (1 − g(d)) / d = |∂△| / (4|△|)` for the unit-scale simplex.
    pub fn boundary_slope(&self) -> f64 {
        self.surface_area() / (4.0 * self.volume)
    }

    /// `|∂△| / (8|△|)`, the bound on `D(ℓ)` that follows from the positive
    /// type of `(1 − g)/|x|` with the diagonal weight `½ Σ Q_j² h(0)`.
    pub fn sliding_constant(&self) -> f64 {
        0.5 * self.boundary_slope()
    }
}

/// Axis-aligned box of translations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBox {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl AxisBox {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Result<Self> {
        if (0..3).any(|i| !(hi[i] > lo[i])) {
            return Err(Error::Degenerate("translation cell must have positive volume".into()));
        }
        Ok(AxisBox { lo, hi })
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|i| self.hi[i] - self.lo[i]).product()
    }

    /// Bounding box of `points` grown by `margin` on every side.
    pub fn around(points: &[[f64; 3]], margin: f64) -> Result<Self> {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in points {
            for i in 0..3 {
                lo[i] = lo[i].min(p[i] - margin);
                hi[i] = hi[i].max(p[i] + margin);
            }
        }
        Self::new(lo, hi)
    }
}

/// Rotation and translation acting as `x ↦ R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsometrySample {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl IsometrySample {
    /// Whether `p` lies in the image of `scale · simplex`.
    pub fn image_contains(&self, simplex: &Simplex, scale: f64, p: &Vector3<f64>) -> bool {
        simplex.contains(&(self.rotation.transpose() * (p - self.translation) / scale))
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        ((self.rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }
}

/// Haar-uniform rotation from a normalized Gaussian quaternion.
pub fn sample_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3])).to_rotation_matrix().into_inner()
}

pub fn sample_direction<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v: Vector3<f64> = Vector3::from_fn(|_, _| rng.sample(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

pub fn sample_isometry<R: Rng + ?Sized>(rng: &mut R, cell: &AxisBox) -> IsometrySample {
    let rotation = sample_rotation(rng);
    let translation = Vector3::from_fn(|i, _| rng.random_range(cell.lo[i]..cell.hi[i]));
    IsometrySample { rotation, translation }
}

/// Mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn merge(self, o: Moments) -> Moments {
        Moments { n: self.n + o.n, sum: self.sum + o.sum, sum_sq: self.sum_sq + o.sum_sq }
    }

    fn estimate(&self) -> Estimate {
        let mean = self.sum / self.n;
        let var = ((self.sum_sq / self.n - mean * mean) * self.n / (self.n - 1.0)).max(0.0);
        Estimate { estimate: mean, std_error: (var / self.n).sqrt() }
    }
}

// Sums `f` over `samples` draws split into fixed-size seeded shards.
fn sharded_moments<F>(samples: usize, seed: u64, f: F) -> Moments
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
{
    let shards = samples.div_ceil(SHARD);
    (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream(seed, s as u64);
            let count = SHARD.min(samples - s * SHARD);
            let mut m = Moments::default();
            for _ in 0..count {
                m.push(f(&mut rng));
            }
            m
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Moments::default(), Moments::merge)
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < 1000 {
        return Err(Error::domain(format!("Monte-Carlo estimates need >= 1000 samples, got {samples}")));
    }
    Ok(())
}

/// `F(r, r') / |ℓ△|`, sampling placements through the point `r`.
pub fn overlap_kernel(r: [f64; 3], r_prime: [f64; 3], simplex: &Simplex, ell: f64, samples: usize, seed: u64) -> Result<Estimate> {
    check_samples(samples)?;
    if !(ell > 0.0) {
        return Err(Error::domain("ℓ must be positive"));
    }
    let sep = Vector3::from(r_prime) - Vector3::from(r);
    let m = sharded_moments(samples, seed, |rng| {
        let rot = sample_rotation(rng);
        let x = simplex.sample_point(rng);
        simplex.contains(&(x + rot.transpose() * sep / ell)) as u8 as f64
    });
    Ok(m.estimate())
}

/// `F(r, r') / |ℓ△|` by uniform placements in the bounding box of the two
/// points grown by the reach of `ℓ△`; placements outside it contain neither.
pub fn overlap_kernel_cell(r: [f64; 3], r_prime: [f64; 3], simplex: &Simplex, ell: f64, samples: usize, seed: u64) -> Result<Estimate> {
    check_samples(samples)?;
    let cell = AxisBox::around(&[r, r_prime], ell * simplex.max_vertex_norm())?;
    let weight = cell.volume() / (ell.powi(3) * simplex.volume());
    let (a, b) = (Vector3::from(r), Vector3::from(r_prime));
    let m = sharded_moments(samples, seed, |rng| {
        let g = sample_isometry(rng, &cell);
        (g.image_contains(simplex, ell, &a) && g.image_contains(simplex, ell, &b)) as u8 as f64 * weight
    });
    Ok(m.estimate())
}

/// Sampled exit distances of random rays from uniform points of the
/// unit-scale simplex; `g_ℓ(d) = P(ℓ s ≥ d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    exits: Vec<f64>,
}

impl RadialProfile {
    pub fn sample(simplex: &Simplex, samples: usize, seed: u64) -> Result<Self> {
        check_samples(samples)?;
        let shards = samples.div_ceil(SHARD);
        let mut exits: Vec<f64> = (0..shards)
            .into_par_iter()
            .flat_map_iter(|s| {
                let mut rng = stream(seed, s as u64);
                let count = SHARD.min(samples - s * SHARD);
                (0..count)
                    .map(|_| {
                        let x = simplex.sample_point(&mut rng);
                        let u = sample_direction(&mut rng);
                        simplex.exit_distance(&x, &u)
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        exits.sort_by(f64::total_cmp);
        Ok(RadialProfile { exits })
    }

    pub fn exits(&self) -> &[f64] {
        &self.exits
    }

    pub fn samples(&self) -> usize {
        self.exits.len()
    }

    /// `g(d)` for the simplex scaled by `ell`, with its binomial error.
    pub fn g(&self, d: f64, ell: f64) -> Estimate {
        let n = self.exits.len() as f64;
        let below = self.exits.partition_point(|&s| ell * s < d) as f64;
        let p = 1.0 - below / n;
        Estimate { estimate: p, std_error: (p * (1.0 - p) / n).sqrt() }
    }

    /// `(4π/k²) E[cos(k ℓ s)]`, the Fourier transform of `(1 − g(x))/x`.
    pub fn fourier_h(&self, k: f64, ell: f64) -> Estimate {
        let mut m = Moments::default();
        for &s in &self.exits {
            m.push((k * ell * s).cos());
        }
        let e = m.estimate();
        let scale = 4.0 * PI / (k * k);
        Estimate { estimate: scale * e.estimate, std_error: scale * e.std_error }
    }
}

/// Fourier transform of `h = (1 − g)/x` at one wave number by two routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourierPoint {
    pub k: f64,
    /// Spline of `h` on a radial grid through the radial transform.
    pub grid: f64,
    /// Exact per-sample form `(4π/k²) cos(k ℓ s)`.
    pub sampled: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PositivityStatus {
    Positive,
    Negative,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositiveTypeReport {
    pub ell: f64,
    pub samples: usize,
    pub points: Vec<FourierPoint>,
    pub min_over_sigma: f64,
    /// `h(0⁺)` estimated from the smallest radial node.
    pub h_at_origin: f64,
    pub status: PositivityStatus,
}

/// Estimates `g` on a radial grid, forms `h = (1 − g)/x` and transforms it.
/// A value below `−3σ` is a failure; a transform whose error bar is larger
/// than its magnitude everywhere is inconclusive.
pub fn gs_positive_type_check(simplex: &Simplex, ell: f64, radial_samples: usize, k_grid: &[f64], seed: u64) -> Result<PositiveTypeReport> {
    let profile = RadialProfile::sample(simplex, radial_samples, seed)?;
    let reach = ell * simplex.diameter();
    let n = 801;
    let nodes: Vec<f64> = (0..n).map(|i| reach * (i as f64 + 0.5) / (n as f64 - 0.5)).collect();
    let h: Vec<f64> = nodes.iter().map(|&x| (1.0 - profile.g(x, ell).estimate) / x).collect();
    let h_at_origin = h[0];
    let h_fn = RadialGridFunction::new(nodes, h, Tail::PowerLaw(-1.0))?;
    let mut points = Vec::with_capacity(k_grid.len());
    let mut min_over_sigma = f64::INFINITY;
    let mut resolved = false;
    for &k in k_grid {
        let grid = radial_fourier_transform(&h_fn, k)?;
        let sampled = profile.fourier_h(k, ell);
        let sigma = sampled.std_error.max(1e-300);
        min_over_sigma = min_over_sigma.min(grid.min(sampled.estimate) / sigma);
        resolved |= sampled.estimate.abs() > 3.0 * sigma;
        points.push(FourierPoint { k, grid, sampled: sampled.estimate, std_error: sampled.std_error });
    }
    let status = if min_over_sigma < -3.0 {
        PositivityStatus::Negative
    } else if resolved {
        PositivityStatus::Positive
    } else {
        PositivityStatus::Inconclusive
    };
    Ok(PositiveTypeReport { ell, samples: radial_samples, points, min_over_sigma, h_at_origin, status })
}

/// One row of the sliding-inequality report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlidingRow {
    pub ell: f64,
    /// Averaged restricted Coulomb sum.
    pub estimate: f64,
    pub std_error: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "D_std_error")]
    pub d_std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlidingReport {
    pub exact: f64,
    pub charge_square_sum: f64,
    pub rows: Vec<SlidingRow>,
    /// `|∂△| / (8|△|)`.
    pub bound: f64,
    /// Fitted `a` and its error in `D(ℓ) ≈ a + b/ℓ`.
    pub asymptote: f64,
    pub asymptote_std_error: f64,
    pub max_excess_over_sigma: f64,
    pub passed: bool,
}

struct PairTable {
    // Pair separations sorted increasingly and the suffix sums of Q_i Q_j / d.
    dist: Vec<f64>,
    suffix: Vec<f64>,
}

impl PairTable {
    fn new(c: &ChargeConfiguration) -> Self {
        let ps = c.particles();
        let mut pairs = Vec::new();
        for i in 0..ps.len() {
            for j in i + 1..ps.len() {
                let d = crate::coulomb::distance(&ps[i].position, &ps[j].position);
                pairs.push((d, ps[i].charge * ps[j].charge / d));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut suffix = vec![0.0; pairs.len() + 1];
        for k in (0..pairs.len()).rev() {
            suffix[k] = suffix[k + 1] + pairs[k].1;
        }
        PairTable { dist: pairs.iter().map(|p| p.0).collect(), suffix }
    }

    fn total(&self) -> f64 {
        self.suffix[0]
    }

    // Σ Q_i Q_j / d over pairs with d > reach.
    fn beyond(&self, reach: f64) -> f64 {
        self.suffix[self.dist.partition_point(|&d| d <= reach)]
    }
}

/// Weighted least squares of `y = a + b x` returning `(a, σ_a)`.
fn fit_intercept(x: &[f64], y: &[f64], sigma: &[f64]) -> (f64, f64) {
    let (mut s, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..x.len() {
        let w = 1.0 / sigma[i].max(1e-300).powi(2);
        s += w;
        sx += w * x[i];
        sxx += w * x[i] * x[i];
        sy += w * y[i];
        sxy += w * x[i] * y[i];
    }
    let det = s * sxx - sx * sx;
    ((sxx * sy - sx * sxy) / det, (sxx / det).sqrt())
}

/// Averaged restricted Coulomb sums and `D(ℓ) = (average − exact) ℓ / Σ Q_j²`.
///
/// Each pair contributes `g(d_ij)` times its energy, so one sample of the
/// exit distance `s` estimates every pair at once: pairs further apart than
/// `ℓ s` drop out. The same exit samples serve every `ℓ`.
pub fn sliding_inequality_experiment(c: &ChargeConfiguration, simplex: &Simplex, ell_list: &[f64], samples: usize, seed: u64) -> Result<SlidingReport> {
    if ell_list.is_empty() || ell_list.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::domain("ℓ values must be positive"));
    }
    let profile = RadialProfile::sample(simplex, samples, seed)?;
    let table = PairTable::new(c);
    let exact = table.total();
    let q2 = c.charge_square_sum();
    let bound = simplex.sliding_constant();
    let mut rows = Vec::with_capacity(ell_list.len());
    for &ell in ell_list {
        let mut m = Moments::default();
        for &s in profile.exits() {
            m.push(exact - table.beyond(ell * s));
        }
        let e = m.estimate();
        rows.push(SlidingRow {
            ell,
            estimate: e.estimate,
            std_error: e.std_error,
            d: (e.estimate - exact) * ell / q2,
            d_std_error: e.std_error * ell / q2,
        });
    }
    let inv: Vec<f64> = rows.iter().map(|r| 1.0 / r.ell).collect();
    let ds: Vec<f64> = rows.iter().map(|r| r.d).collect();
    let sig: Vec<f64> = rows.iter().map(|r| r.d_std_error).collect();
    let (asymptote, asymptote_std_error) = if rows.len() >= 3 { fit_intercept(&inv, &ds, &sig) } else { (f64::NAN, f64::NAN) };
    let max_excess_over_sigma = rows
        .iter()
        .map(|r| (r.d - bound) / r.d_std_error.max(1e-12 * bound))
        .fold(f64::NEG_INFINITY, f64::max);
    let asymptote_ok = asymptote.is_nan() || asymptote <= bound + 3.0 * asymptote_std_error;
    Ok(SlidingReport {
        exact,
        charge_square_sum: q2,
        rows,
        bound,
        asymptote,
        asymptote_std_error,
        max_excess_over_sigma,
        passed: max_excess_over_sigma <= 3.0 && asymptote_ok,
    })
}

/// Averaged restricted Coulomb sum by uniform placements in the bounding
/// box of the configuration grown by the reach of `ℓ△`.
pub fn sliding_average_cell(c: &ChargeConfiguration, simplex: &Simplex, ell: f64, samples: usize, seed: u64) -> Result<Estimate> {
    check_samples(samples)?;
    let positions: Vec<[f64; 3]> = c.particles().iter().map(|p| p.position).collect();
    let cell = AxisBox::around(&positions, ell * simplex.max_vertex_norm())?;
    let weight = cell.volume() / (ell.powi(3) * simplex.volume());
    let ps = c.particles();
    let m = sharded_moments(samples, seed, |rng| {
        let g = sample_isometry(rng, &cell);
        let inside: Vec<usize> = (0..ps.len())
            .filter(|&i| g.image_contains(simplex, ell, &Vector3::from(ps[i].position)))
            .collect();
        let mut e = 0.0;
        for (a, &i) in inside.iter().enumerate() {
            for &j in &inside[a + 1..] {
                e += ps[i].charge * ps[j].charge / crate::coulomb::distance(&ps[i].position, &ps[j].position);
            }
        }
        e * weight
    });
    Ok(m.estimate())
}

/// Kolmogorov-Smirnov distance between sampled rotation angles and the Haar
/// angle law `P(θ ≤ t) = (t − sin t)/π`.
pub fn haar_angle_ks(samples: usize, seed: u64) -> f64 {
    let mut rng = stream(seed, 0);
    let mut angles: Vec<f64> = (0..samples)
        .map(|_| IsometrySample { rotation: sample_rotation(&mut rng), translation: Vector3::zeros() }.angle())
        .collect();
    angles.sort_by(f64::total_cmp);
    let n = samples as f64;
    angles
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let cdf = (t - t.sin()) / PI;
            (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn regular_simplex_geometry() {
        let s = Simplex::regular(1.0).unwrap();
        assert!((s.volume() - 1.0 / (6.0 * 2f64.sqrt())).abs() < 1e-14);
        assert!((s.surface_area() - 3f64.sqrt()).abs() < 1e-14);
        assert!((s.diameter() - 1.0).abs() < 1e-14);
        assert!(s.contains(&Vector3::zeros()));
        assert!(!s.contains(&Vector3::new(1.0, 1.0, 1.0)));
        assert!(Simplex::new([[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).is_err());
    }

    #[test]
    fn exit_distance_reaches_boundary() {
        let s = Simplex::regular(2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let x = s.sample_point(&mut rng);
            assert!(s.contains(&x));
            let u = sample_direction(&mut rng);
            let t = s.exit_distance(&x, &u);
            assert!(s.contains(&(x + u * (t * (1.0 - 1e-9)))));
            assert!(!s.contains(&(x + u * (t + 1e-6))));
        }
    }

    #[test]
    fn isometry_reproducible_and_orthogonal() {
        let cell = AxisBox::new([0.0; 3], [1.0, 2.0, 3.0]).unwrap();
        let a = sample_isometry(&mut ChaCha8Rng::seed_from_u64(9), &cell);
        let b = sample_isometry(&mut ChaCha8Rng::seed_from_u64(9), &cell);
        assert_eq!(a, b);
        assert!((a.rotation.transpose() * a.rotation - Matrix3::identity()).norm() < 1e-12);
        assert!((a.rotation.determinant() - 1.0).abs() < 1e-12);
        assert!(AxisBox::new([0.0; 3], [1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn haar_mean_and_angle_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let mut mean = Matrix3::zeros();
        for _ in 0..n {
            mean += sample_rotation(&mut rng);
        }
        mean /= n as f64;
        assert!(mean.iter().all(|x| x.abs() < 0.01), "{mean}");
        assert!(haar_angle_ks(n, 2) < 0.01);
    }

    #[test]
    fn kernel_normalization_and_support() {
        let s = Simplex::regular(1.0).unwrap();
        let same = overlap_kernel([0.3, 0.1, 0.0], [0.3, 0.1, 0.0], &s, 2.0, 2000, 1).unwrap();
        assert_eq!(same.estimate, 1.0);
        let far = overlap_kernel([0.0; 3], [2.0, 0.0, 0.0], &s, 2.0, 2000, 1).unwrap();
        assert_eq!(far.estimate, 0.0);
        let cell_same = overlap_kernel_cell([0.0; 3], [0.0; 3], &s, 1.0, 200_000, 3).unwrap();
        assert!((cell_same.estimate - 1.0).abs() < 3.0 * cell_same.std_error);
        assert!(overlap_kernel([0.0; 3], [0.0; 3], &s, 1.0, 10, 1).is_err());
    }

    #[test]
    fn kernel_routes_agree_with_profile() {
        let s = Simplex::regular(1.0).unwrap();
        let profile = RadialProfile::sample(&s, 200_000, 5).unwrap();
        let d = 0.4;
        let via_profile = profile.g(d, 1.5);
        let direct = overlap_kernel([0.0; 3], [0.0, d, 0.0], &s, 1.5, 200_000, 6).unwrap();
        let cell = overlap_kernel_cell([0.0; 3], [0.0, 0.0, d], &s, 1.5, 400_000, 7).unwrap();
        for other in [direct, cell] {
            let sigma = (via_profile.std_error.powi(2) + other.std_error.powi(2)).sqrt();
            assert!((via_profile.estimate - other.estimate).abs() < 4.0 * sigma, "{via_profile:?} {other:?}");
        }
    }

    #[test]
    fn profile_slope_at_origin() {
        let s = Simplex::regular(1.0).unwrap();
        let profile = RadialProfile::sample(&s, 400_000, 8).unwrap();
        let u = 0.01;
        let slope = (1.0 - profile.g(u, 1.0).estimate) / u;
        let expected = s.boundary_slope();
        // Second-order term of 1 − g at u = 0.01 is a few percent.
        assert!((slope - expected).abs() < 0.05 * expected, "{slope} vs {expected}");
    }

    #[test]
    fn dipole_reduction() {
        let s = Simplex::regular(1.0).unwrap();
        let c = ChargeConfiguration::from_charges(&[[0.0; 3], [0.5, 0.0, 0.0]], &[1.0, -1.0]).unwrap();
        let report = sliding_inequality_experiment(&c, &s, &[1.0, 2.0, 4.0], 50_000, 11).unwrap();
        let profile = RadialProfile::sample(&s, 50_000, 11).unwrap();
        for row in &report.rows {
            let g = profile.g(0.5, row.ell).estimate;
            let expected = row.ell * (1.0 - g) / (2.0 * 0.5);
            assert!((row.d - expected).abs() < 1e-12, "{row:?} vs {expected}");
            assert!(row.d >= 0.0);
        }
    }

    #[test]
    fn d_is_scale_invariant() {
        let s = Simplex::regular(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let c = ChargeConfiguration::random_neutral(&mut rng, 8).unwrap();
        let a = sliding_inequality_experiment(&c, &s, &[2.0, 5.0], 20_000, 3).unwrap();
        let b = sliding_inequality_experiment(&c.scaled(3.0).unwrap(), &s, &[6.0, 15.0], 20_000, 3).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((x.d - y.d).abs() < 1e-10 * x.d.abs().max(1.0));
        }
    }

    #[test]
    fn cell_route_matches_pair_reduction() {
        let s = Simplex::regular(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let c = ChargeConfiguration::random_neutral(&mut rng, 6).unwrap();
        let ell = 2.0 * c.diameter();
        let report = sliding_inequality_experiment(&c, &s, &[ell], 200_000, 14).unwrap();
        let cell = sliding_average_cell(&c, &s, ell, 400_000, 15).unwrap();
        let row = report.rows[0];
        let sigma = (row.std_error.powi(2) + cell.std_error.powi(2)).sqrt();
        assert!((row.estimate - cell.estimate).abs() < 4.0 * sigma, "{row:?} {cell:?}");
    }

    #[test]
    fn fourier_of_h_small_k_limit() {
        let s = Simplex::regular(1.0).unwrap();
        let report = gs_positive_type_check(&s, 1.0, 50_000, &[0.01, 0.5, 3.0, 10.0], 21).unwrap();
        let first = report.points[0];
        assert!((first.sampled / (4.0 * PI / 1e-4) - 1.0).abs() < 1e-3);
        assert!(report.h_at_origin.is_finite());
        for p in &report.points {
            assert!((p.grid - p.sampled).abs() < 5.0 * p.std_error + 1e-3 * p.sampled.abs(), "{p:?}");
        }
        assert_ne!(report.status, PositivityStatus::Negative);
    }
}
