//! Spectral checks of operator facts on a periodic 3-D grid: the
//! diamagnetic and Sobolev inequalities, the Schrödinger lower bound with
//! the Coulomb `L^{5/2} + L^∞` split, gauge covariance and the
//! Lichnerowicz formula for the Pauli operator.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::quadrature::{integrate_power_tail, Tolerance};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Samples of `components` complex fields on an `n³` periodic grid of
/// period `box_len`, stored component after component, each in row-major
/// `(i, j, k)` order with `x = i · box_len / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    grid_n: usize,
    box_len: f64,
    components: usize,
    data: Vec<Complex64>,
}

impl PeriodicField {
    pub fn new(grid_n: usize, box_len: f64, components: usize, data: Vec<Complex64>) -> Result<Self> {
        if grid_n < 16 || !grid_n.is_multiple_of(2) {
            return Err(Error::Shape(format!("grid_n must be even and >= 16, got {grid_n}")));
        }
        if !(box_len > 0.0) {
            return Err(Error::domain("box length must be positive"));
        }
        if !(1..=3).contains(&components) {
            return Err(Error::Shape(format!("components must be 1, 2 or 3, got {components}")));
        }
        if data.len() != components * grid_n.pow(3) {
            return Err(Error::Shape(format!("expected {} samples, got {}", components * grid_n.pow(3), data.len())));
        }
        Ok(PeriodicField { grid_n, box_len, components, data })
    }

    pub fn zeros(grid_n: usize, box_len: f64, components: usize) -> Result<Self> {
        Self::new(grid_n, box_len, components, vec![Complex64::new(0.0, 0.0); components * grid_n.pow(3)])
    }

    /// Field sampled from `f(x) -> [value per component]`.
    pub fn from_fn(grid_n: usize, box_len: f64, components: usize, f: impl Fn([f64; 3]) -> Vec<Complex64>) -> Result<Self> {
        let mut field = Self::zeros(grid_n, box_len, components)?;
        let n3 = grid_n.pow(3);
        for idx in 0..n3 {
            let v = f(field.point(idx));
            if v.len() != components {
                return Err(Error::Shape("component count mismatch".into()));
            }
            for (c, value) in v.into_iter().enumerate() {
                field.data[c * n3 + idx] = value;
            }
        }
        Ok(field)
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn box_len(&self) -> f64 {
        self.box_len
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    fn n3(&self) -> usize {
        self.grid_n.pow(3)
    }

    pub fn spacing(&self) -> f64 {
        self.box_len / self.grid_n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let n = self.grid_n;
        let h = self.spacing();
        [(idx / (n * n)) as f64 * h, ((idx / n) % n) as f64 * h, (idx % n) as f64 * h]
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.data[c * self.n3()..(c + 1) * self.n3()]
    }

    fn require(&self, components: usize, role: &str) -> Result<()> {
        if self.components != components {
            return Err(Error::Shape(format!("{role} needs {components} components, got {}", self.components)));
        }
        Ok(())
    }

    fn require_real(&self, role: &str) -> Result<()> {
        let scale = self.max_abs().max(1.0);
        if self.data.iter().any(|z| z.im.abs() > 1e-14 * scale) {
            return Err(Error::domain(format!("{role} must be real-valued")));
        }
        Ok(())
    }

    fn same_grid(&self, other: &PeriodicField) -> Result<()> {
        if self.grid_n != other.grid_n || self.box_len != other.box_len {
            return Err(Error::Shape(format!(
                "grid mismatch: ({}, {}) vs ({}, {})",
                self.grid_n, self.box_len, other.grid_n, other.box_len
            )));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `∫ |f|²` summed over components.
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.cell_volume()
    }

    /// Largest modulus on the faces of the periodic cell relative to the
    /// overall maximum.
    pub fn boundary_ratio(&self) -> f64 {
        let n = self.grid_n;
        let mut edge: f64 = 0.0;
        for c in 0..self.components {
            let comp = self.component(c);
            for (idx, z) in comp.iter().enumerate() {
                let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
                if i == 0 || j == 0 || k == 0 {
                    edge = edge.max(z.norm());
                }
            }
        }
        edge / self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Little-endian layout: `u64 grid_n`, `f64 box_len`, `u64 components`,
    /// then `(re, im)` pairs of `f64` in storage order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.grid_n as u64).to_le_bytes())?;
        w.write_all(&self.box_len.to_le_bytes())?;
        w.write_all(&(self.components as u64).to_le_bytes())?;
        for z in &self.data {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut word)?;
            Ok(word)
        };
        let grid_n = u64::from_le_bytes(next(&mut r)?) as usize;
        let box_len = f64::from_le_bytes(next(&mut r)?);
        let components = u64::from_le_bytes(next(&mut r)?) as usize;
        if grid_n > 4096 || components > 3 {
            return Err(Error::Shape(format!("implausible header: grid_n {grid_n}, components {components}")));
        }
        let count = components * grid_n.pow(3);
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            let re = f64::from_le_bytes(next(&mut r)?);
            let im = f64::from_le_bytes(next(&mut r)?);
            data.push(Complex64::new(re, im));
        }
        Self::new(grid_n, box_len, components, data)
    }
}

/// Cached FFT plans for one grid size.
struct Spectral {
    n: usize,
    box_len: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Spectral {
    fn new(n: usize, box_len: f64) -> Self {
        let mut planner = FftPlanner::new();
        Spectral { n, box_len, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let plan = if inverse { &self.inverse } else { &self.forward };
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for stride in [1, n, n * n] {
            for base in 0..n * n {
                // Lines along the axis with the given stride.
                let start = match stride {
                    1 => base * n,
                    s if s == n => (base / n) * n * n + base % n,
                    _ => base,
                };
                for t in 0..n {
                    line[t] = data[start + t * stride];
                }
                plan.process(&mut line);
                for t in 0..n {
                    data[start + t * stride] = line[t];
                }
            }
        }
        if inverse {
            let scale = 1.0 / (n * n * n) as f64;
            data.iter_mut().for_each(|z| *z *= scale);
        }
    }

    // Signed index of a frequency, `None` for the Nyquist mode.
    fn signed(&self, m: usize) -> Option<i64> {
        let n = self.n;
        if m < n / 2 {
            Some(m as i64)
        } else if m == n / 2 {
            None
        } else {
            Some(m as i64 - n as i64)
        }
    }

    fn wavenumber(&self, m: usize) -> f64 {
        self.signed(m).map_or(0.0, |s| 2.0 * PI * s as f64 / self.box_len)
    }

    fn derivative(&self, f: &[Complex64], axis: usize) -> Vec<Complex64> {
        let n = self.n;
        let mut g = f.to_vec();
        self.transform(&mut g, false);
        for (idx, z) in g.iter_mut().enumerate() {
            let m = match axis {
                0 => idx / (n * n),
                1 => (idx / n) % n,
                _ => idx % n,
            };
            *z *= I * self.wavenumber(m);
        }
        self.transform(&mut g, true);
        g
    }

    fn gradient(&self, f: &[Complex64]) -> [Vec<Complex64>; 3] {
        [self.derivative(f, 0), self.derivative(f, 1), self.derivative(f, 2)]
    }

    /// Share of the spectral energy with max-norm frequency index above `n/3`.
    fn top_third_fraction(&self, f: &[Complex64]) -> f64 {
        let n = self.n;
        let mut g = f.to_vec();
        self.transform(&mut g, false);
        let cut = n as i64 / 3;
        let mut total = 0.0;
        let mut high = 0.0;
        for (idx, z) in g.iter().enumerate() {
            let e = z.norm_sqr();
            total += e;
            let kmax = [idx / (n * n), (idx / n) % n, idx % n]
                .iter()
                .map(|&m| self.signed(m).map_or(n as i64 / 2, |s| s.abs()))
                .max()
                .unwrap();
            if kmax > cut {
                high += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            high / total
        }
    }
}

fn spectral_for(f: &PeriodicField) -> Spectral {
    Spectral::new(f.grid_n, f.box_len)
}

// Π_a f = −i ∂_a f + Q A_a f.
fn covariant(sp: &Spectral, f: &[Complex64], a: &PeriodicField, q: f64, axis: usize) -> Vec<Complex64> {
    let d = sp.derivative(f, axis);
    d.iter().zip(f).zip(a.component(axis)).map(|((d, f), a)| -I * d + q * a.re * f).collect()
}

/// `(2m)^{-1} ∫ |(−i∇ + Q A) f|²`.
pub fn magnetic_kinetic_quadratic_form(f: &PeriodicField, a: &PeriodicField, q: f64, m: f64) -> Result<f64> {
    f.require(1, "scalar field")?;
    a.require(3, "vector potential")?;
    a.require_real("vector potential")?;
    f.same_grid(a)?;
    if !(m > 0.0) {
        return Err(Error::domain("mass must be positive"));
    }
    let sp = spectral_for(f);
    let mut total = 0.0;
    for axis in 0..3 {
        total += covariant(&sp, f.component(0), a, q, axis).iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    Ok(total * f.cell_volume() / (2.0 * m))
}

/// The three terms of the diamagnetic Sobolev chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiamagneticTriple {
    /// `∫ |(−i∇ + Q A) f|²`
    pub lhs: f64,
    /// `∫ |∇|f||²`
    pub mid: f64,
    /// `(∫ |f|⁶)^{1/3}`
    pub sobolev_term: f64,
    pub sobolev_constant: f64,
    pub lhs_ge_mid: bool,
    pub mid_ge_sobolev: bool,
}

/// `∫ |∇|f||²` with `|f|` regularized as `√(|f|² + ε²)`, `ε = 1e-10 max|f|`.
pub fn modulus_gradient_energy(f: &PeriodicField) -> Result<f64> {
    f.require(1, "scalar field")?;
    let eps = 1e-10 * f.max_abs();
    let modulus: Vec<Complex64> = f.component(0).iter().map(|z| Complex64::new((z.norm_sqr() + eps * eps).sqrt(), 0.0)).collect();
    let sp = spectral_for(f);
    let grad = sp.gradient(&modulus);
    Ok(grad.iter().flat_map(|g| g.iter()).map(|z| z.norm_sqr()).sum::<f64>() * f.cell_volume())
}

/// Evaluates the chain `lhs ≥ mid ≥ C_test · sobolev_term` on a field
/// concentrated well inside the cell.
pub fn diamagnetic_sobolev_check(f: &PeriodicField, a: &PeriodicField, q: f64, sobolev_constant: f64) -> Result<DiamagneticTriple> {
    f.require(1, "scalar field")?;
    let ratio = f.boundary_ratio();
    if ratio >= 1e-8 {
        return Err(Error::Support { ratio });
    }
    let lhs = 2.0 * magnetic_kinetic_quadratic_form(f, a, q, 1.0)?;
    let mid = modulus_gradient_energy(f)?;
    let sobolev_term = (f.component(0).iter().map(|z| z.norm_sqr().powi(3)).sum::<f64>() * f.cell_volume()).powf(1.0 / 3.0);
    let tol = 1e-10 * lhs.abs().max(mid.abs());
    Ok(DiamagneticTriple {
        lhs,
        mid,
        sobolev_term,
        sobolev_constant,
        lhs_ge_mid: lhs >= mid - tol,
        mid_ge_sobolev: mid >= sobolev_constant * sobolev_term - tol,
    })
}

/// Sharp Sobolev ratio `∫|∇u|² / (∫u⁶)^{1/3}` evaluated by radial quadrature
/// on the profile `u = (1 + r²)^{-1/2}`.
pub fn sobolev_test_constant() -> Result<f64> {
    let tol = Tolerance::new(1e-15, 1e-13);
    let grad = integrate_power_tail(|r| 4.0 * PI * r.powi(4) * (1.0 + r * r).powi(-3), 0.0, -2.0, tol)?.value;
    let sixth = integrate_power_tail(|r| 4.0 * PI * r * r * (1.0 + r * r).powi(-3), 0.0, -4.0, tol)?.value;
    Ok(grad / sixth.powf(1.0 / 3.0))
}

/// `(∫ V₁^{5/2}, ‖V₂‖_∞)` for `1/|r|` split at radius `a`, with the first
/// entry by radial quadrature.
pub fn coulomb_split(a: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) {
        return Err(Error::domain("split radius must be positive"));
    }
    let integral = crate::lieb_thirring::radial_potential_integral(|r| 1.0 / r, a, None)?;
    Ok((integral, 1.0 / a))
}

/// Constant `C` in `⟨f, ((−i∇+A)² − V₁ − V₂) f⟩ ≥ −C (∫V₁^{5/2} + ‖V₂‖_∞) ‖f‖²`
/// obtained from the Sobolev constant `S` by Hölder and optimization:
/// `max((2/3)(3/5)^{5/2} S^{-3/2}, 1)`.
pub fn schroedinger_constant(sobolev_constant: f64) -> f64 {
    (2.0 / 3.0 * 0.6f64.powf(2.5) * sobolev_constant.powf(-1.5)).max(1.0)
}

/// Nonnegative potential split into an `L^{5/2}` part and a bounded part,
/// with the norms entering the bound.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPotential {
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub v1_integral: f64,
    pub v2_sup: f64,
}

impl SplitPotential {
    /// Norms taken from the grid samples.
    pub fn from_samples(v1: Vec<f64>, v2: Vec<f64>, cell_volume: f64) -> Result<Self> {
        if v1.iter().chain(&v2).any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::domain("potentials must be finite and nonnegative"));
        }
        let v1_integral = v1.iter().map(|v| v.powf(2.5)).sum::<f64>() * cell_volume;
        let v2_sup = v2.iter().fold(0.0, |a: f64, b| a.max(*b));
        Ok(SplitPotential { v1, v2, v1_integral, v2_sup })
    }

    /// `Z / |r − c|` split at radius `a`; the norms are the exact continuum
    /// values `Z^{5/2} 8π√a` and `Z / a`.
    pub fn coulomb(like: &PeriodicField, center: [f64; 3], z: f64, a: f64) -> Result<Self> {
        let (integral, sup) = coulomb_split(a)?;
        let n3 = like.n3();
        let mut v1 = vec![0.0; n3];
        let mut v2 = vec![0.0; n3];
        for idx in 0..n3 {
            let p = like.point(idx);
            let r = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2) + (p[2] - center[2]).powi(2)).sqrt();
            if r == 0.0 {
                return Err(Error::Singularity { i: idx, j: idx, separation: 0.0 });
            }
            if r < a {
                v1[idx] = z / r;
            } else {
                v2[idx] = z / r;
            }
        }
        Ok(SplitPotential { v1, v2, v1_integral: z.powf(2.5) * integral, v2_sup: z * sup })
    }
}

/// `(⟨f, ((−i∇+A)² − V₁ − V₂) f⟩, −C (∫V₁^{5/2} + ‖V₂‖_∞) ‖f‖²)`.
pub fn schroedinger_lower_bound_eval(f: &PeriodicField, a: &PeriodicField, v: &SplitPotential, c: f64) -> Result<(f64, f64)> {
    if v.v1.len() != f.n3() || v.v2.len() != f.n3() {
        return Err(Error::Shape("potential grid does not match the field".into()));
    }
    let kinetic = 2.0 * magnetic_kinetic_quadratic_form(f, a, 1.0, 1.0)?;
    let potential: f64 = f
        .component(0)
        .iter()
        .zip(v.v1.iter().zip(&v.v2))
        .map(|(z, (a, b))| (a + b) * z.norm_sqr())
        .sum::<f64>()
        * f.cell_volume();
    Ok((kinetic - potential, -c * (v.v1_integral + v.v2_sup) * f.norm_sq()))
}

fn pauli(axis: usize, s: [Complex64; 2]) -> [Complex64; 2] {
    match axis {
        0 => [s[1], s[0]],
        1 => [-I * s[1], I * s[0]],
        _ => [s[0], -s[1]],
    }
}

/// `B = ∇ × A` by spectral derivatives.
pub fn curl(a: &PeriodicField) -> Result<PeriodicField> {
    a.require(3, "vector potential")?;
    let sp = spectral_for(a);
    let d = |comp: usize, axis: usize| sp.derivative(a.component(comp), axis);
    let bx: Vec<Complex64> = d(2, 1).iter().zip(d(1, 2)).map(|(x, y)| x - y).collect();
    let by: Vec<Complex64> = d(0, 2).iter().zip(d(2, 0)).map(|(x, y)| x - y).collect();
    let bz: Vec<Complex64> = d(1, 0).iter().zip(d(0, 1)).map(|(x, y)| x - y).collect();
    PeriodicField::new(a.grid_n, a.box_len, 3, [bx, by, bz].concat())
}

/// Both sides of the Lichnerowicz formula applied to a spinor.
pub struct LichnerowiczSides {
    pub pauli_squared: PeriodicField,
    pub magnetic_plus_spin: PeriodicField,
}

pub fn lichnerowicz_sides(psi: &PeriodicField, a: &PeriodicField, q: f64) -> Result<LichnerowiczSides> {
    psi.require(2, "spinor")?;
    a.require(3, "vector potential")?;
    a.require_real("vector potential")?;
    psi.same_grid(a)?;
    let sp = spectral_for(psi);
    let n3 = psi.n3();
    let pi = |f: &[Complex64], axis: usize| covariant(&sp, f, a, q, axis);
    let sigma_dot_pi = |s: [&[Complex64]; 2]| -> [Vec<Complex64>; 2] {
        let mut out = [vec![Complex64::new(0.0, 0.0); n3], vec![Complex64::new(0.0, 0.0); n3]];
        for axis in 0..3 {
            let p = [pi(s[0], axis), pi(s[1], axis)];
            for idx in 0..n3 {
                let v = pauli(axis, [p[0][idx], p[1][idx]]);
                out[0][idx] += v[0];
                out[1][idx] += v[1];
            }
        }
        out
    };
    let chi = sigma_dot_pi([psi.component(0), psi.component(1)]);
    let lhs = sigma_dot_pi([&chi[0], &chi[1]]);

    let b = curl(a)?;
    let mut rhs = [vec![Complex64::new(0.0, 0.0); n3], vec![Complex64::new(0.0, 0.0); n3]];
    for s in 0..2 {
        for axis in 0..3 {
            let twice = pi(&pi(psi.component(s), axis), axis);
            rhs[s].iter_mut().zip(twice).for_each(|(r, t)| *r += t);
        }
    }
    for idx in 0..n3 {
        let spinor = [psi.component(0)[idx], psi.component(1)[idx]];
        for axis in 0..3 {
            let v = pauli(axis, spinor);
            let field = q * b.component(axis)[idx].re;
            rhs[0][idx] += field * v[0];
            rhs[1][idx] += field * v[1];
        }
    }
    Ok(LichnerowiczSides {
        pauli_squared: PeriodicField::new(psi.grid_n, psi.box_len, 2, lhs.concat())?,
        magnetic_plus_spin: PeriodicField::new(psi.grid_n, psi.box_len, 2, rhs.concat())?,
    })
}

/// Maximum pointwise spinor norm of the difference of the two sides, and
/// the largest pointwise norm of either side.
pub fn lichnerowicz_residual(psi: &PeriodicField, a: &PeriodicField, q: f64) -> Result<(f64, f64)> {
    let sides = lichnerowicz_sides(psi, a, q)?;
    let n3 = psi.n3();
    let l = &sides.pauli_squared;
    let r = &sides.magnetic_plus_spin;
    let mut residual: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for idx in 0..n3 {
        let diff = (0..2).map(|s| (l.component(s)[idx] - r.component(s)[idx]).norm_sqr()).sum::<f64>().sqrt();
        let size = (0..2).map(|s| l.component(s)[idx].norm_sqr()).sum::<f64>().sqrt();
        residual = residual.max(diff);
        scale = scale.max(size);
    }
    Ok((residual, scale))
}

/// Lichnerowicz residual after checking that `A` is spectrally resolved.
pub fn lichnerowicz_check(psi: &PeriodicField, a: &PeriodicField, q: f64) -> Result<f64> {
    a.require(3, "vector potential")?;
    let sp = spectral_for(a);
    let mut high = 0.0;
    let mut total = 0.0;
    for c in 0..3 {
        let comp = a.component(c);
        let e: f64 = comp.iter().map(|z| z.norm_sqr()).sum();
        high += sp.top_third_fraction(comp) * e;
        total += e;
    }
    let fraction = if total > 0.0 { high / total } else { 0.0 };
    if fraction >= 1e-10 {
        return Err(Error::Resolution { fraction });
    }
    Ok(lichnerowicz_residual(psi, a, q)?.0)
}

/// Random real trigonometric polynomial with integer frequencies up to
/// `kmax` per axis and coefficients decaying like `1/(1 + |k|²)`.
pub fn random_band_limited<R: Rng + ?Sized>(rng: &mut R, grid_n: usize, box_len: f64, kmax: i64, amplitude: f64) -> Result<Vec<f64>> {
    if 2 * kmax >= grid_n as i64 {
        return Err(Error::Shape(format!("band limit {kmax} needs more than {grid_n} points per axis")));
    }
    let n = grid_n;
    let wrap = |k: i64| k.rem_euclid(n as i64) as usize;
    let index = |k: [i64; 3]| (wrap(k[0]) * n + wrap(k[1])) * n + wrap(k[2]);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n.pow(3)];
    let scale = (n * n * n) as f64;
    for a in -kmax..=kmax {
        for b in -kmax..=kmax {
            for c in 0..=kmax {
                let weight = amplitude / (1.0 + (a * a + b * b + c * c) as f64);
                let amp = weight * rng.random_range(-1.0..1.0);
                let z = 0.5 * amp * scale * (I * rng.random_range(0.0..2.0 * PI)).exp();
                coeffs[index([a, b, c])] += z;
                coeffs[index([-a, -b, -c])] += z.conj();
            }
        }
    }
    Spectral::new(n, box_len).transform(&mut coeffs, true);
    Ok(coeffs.into_iter().map(|z| z.re).collect())
}

/// Random vector potential with band limit `kmax`.
pub fn random_vector_potential<R: Rng + ?Sized>(rng: &mut R, grid_n: usize, box_len: f64, kmax: i64, amplitude: f64) -> Result<PeriodicField> {
    let mut data = Vec::with_capacity(3 * grid_n.pow(3));
    for _ in 0..3 {
        data.extend(random_band_limited(rng, grid_n, box_len, kmax, amplitude)?.into_iter().map(|x| Complex64::new(x, 0.0)));
    }
    PeriodicField::new(grid_n, box_len, 3, data)
}

/// Gaussian envelope of width `box_len / 14` at the cell centre, with a
/// positive random modulation and a random phase; vanishes to below `1e-10`
/// of its maximum on the cell faces.
pub fn random_concentrated_scalar<R: Rng + ?Sized>(rng: &mut R, grid_n: usize, box_len: f64) -> Result<PeriodicField> {
    let modulation = random_band_limited(rng, grid_n, box_len, 2, 1.0)?;
    let max_mod = modulation.iter().fold(0.0_f64, |a, b| a.max(b.abs())).max(1e-300);
    let phase = random_band_limited(rng, grid_n, box_len, 2, 3.0)?;
    let width = box_len / 14.0;
    let centre = 0.5 * box_len;
    let mut field = PeriodicField::zeros(grid_n, box_len, 1)?;
    for idx in 0..field.n3() {
        let p = field.point(idx);
        let r2: f64 = p.iter().map(|x| (x - centre).powi(2)).sum();
        let amp = (-r2 / (2.0 * width * width)).exp() * (1.0 + 0.4 * modulation[idx] / max_mod);
        field.data[idx] = amp * (I * phase[idx]).exp();
    }
    Ok(field)
}

/// `(e^{−iqθ} f, A + ∇θ)` for a real band-limited `θ` sampled on the grid.
pub fn gauge_transform(f: &PeriodicField, a: &PeriodicField, theta: &[f64], q: f64) -> Result<(PeriodicField, PeriodicField)> {
    f.require(1, "scalar field")?;
    a.require(3, "vector potential")?;
    f.same_grid(a)?;
    if theta.len() != f.n3() {
        return Err(Error::Shape(format!("gauge function has {} samples, grid has {}", theta.len(), f.n3())));
    }
    let sp = spectral_for(f);
    let th: Vec<Complex64> = theta.iter().map(|t| Complex64::new(*t, 0.0)).collect();
    let grad = sp.gradient(&th);
    let mut a2 = a.clone();
    for (c, g) in grad.iter().enumerate() {
        for idx in 0..f.n3() {
            a2.data[c * f.n3() + idx] += Complex64::new(g[idx].re, 0.0);
        }
    }
    let mut f2 = f.clone();
    for (v, t) in f2.data.iter_mut().zip(theta) {
        *v *= (-I * q * t).exp();
    }
    Ok((f2, a2))
}

/// One grid of a Lichnerowicz refinement study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LichnerowiczLevel {
    pub grid_n: usize,
    pub residual: f64,
    pub scale: f64,
}

/// Raw residuals for a Gaussian spinor in the Gaussian-bump potential
/// `A = (−y', x', z') e^{−|x'|²/(2w²)}` (`x'` measured from the box centre)
/// on each grid. These inputs are not band-limited, so the residual falls
/// with resolution until it reaches rounding level.
pub fn lichnerowicz_refinement(grids: &[usize], box_len: f64, width: f64, q: f64) -> Result<Vec<LichnerowiczLevel>> {
    if !(width > 0.0) {
        return Err(Error::domain("bump width must be positive"));
    }
    let c = 0.5 * box_len;
    grids
        .iter()
        .map(|&n| {
            let bump = |x: [f64; 3]| {
                let d = [x[0] - c, x[1] - c, x[2] - c];
                (d, (-(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / (2.0 * width * width)).exp())
            };
            let psi = PeriodicField::from_fn(n, box_len, 2, |x| {
                let (d, g) = bump(x);
                vec![Complex64::new(g, 0.0), Complex64::new(0.3 * d[0] * g, 0.2 * d[1] * g)]
            })?;
            let a = PeriodicField::from_fn(n, box_len, 3, |x| {
                let (d, g) = bump(x);
                vec![Complex64::new(-d[1] * g, 0.0), Complex64::new(d[0] * g, 0.0), Complex64::new(d[2] * g, 0.0)]
            })?;
            let (residual, scale) = lichnerowicz_residual(&psi, &a, q)?;
            Ok(LichnerowiczLevel { grid_n: n, residual, scale })
        })
        .collect()
}
