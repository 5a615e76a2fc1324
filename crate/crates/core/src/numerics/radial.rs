//! Scalar functions of the radius sampled on a 1-D grid, with cubic-spline
//! interpolation, a declared tail model, 3-D volume integrals and the radial
//! Fourier transform.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::quadrature::{fixed_rule, gauss_legendre, integrate, integrate_breakpoints, Tolerance};
use crate::error::{Error, Result};

/// Behaviour of the function beyond the last node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Tail {
    Zero,
    /// `f(r) = f(r_last) (r / r_last)^exponent` for `r > r_last`.
    PowerLaw(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGridFunction {
    nodes: Vec<f64>,
    values: Vec<f64>,
    tail: Tail,
    // Second derivatives of the natural cubic spline at the nodes.
    curvature: Vec<f64>,
}

/// Geometric grid on `[r_min, r_max]`, optionally with a leading node at 0.
pub fn geometric_nodes(r_min: f64, r_max: f64, n: usize, include_origin: bool) -> Vec<f64> {
    assert!(r_min > 0.0 && r_max > r_min && n >= 2, "invalid geometric grid");
    let ratio = (r_max / r_min).powf(1.0 / (n - 1) as f64);
    let mut nodes = Vec::with_capacity(n + include_origin as usize);
    if include_origin {
        nodes.push(0.0);
    }
    let mut r = r_min;
    for i in 0..n {
        nodes.push(if i == n - 1 { r_max } else { r });
        r *= ratio;
    }
    nodes
}

pub fn uniform_nodes(r_min: f64, r_max: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && r_max > r_min, "invalid uniform grid");
    let h = (r_max - r_min) / (n - 1) as f64;
    (0..n).map(|i| r_min + h * i as f64).collect()
}

impl RadialGridFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>, tail: Tail) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != values.len() {
            return Err(Error::Shape(format!(
                "radial grid needs >= 2 nodes and matching values (got {} nodes, {} values)",
                nodes.len(),
                values.len()
            )));
        }
        if nodes[0] < 0.0 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("radial nodes must be nonnegative and strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("radial samples must be finite"));
        }
        let curvature = natural_spline_curvature(&nodes, &values);
        Ok(RadialGridFunction { nodes, values, tail, curvature })
    }

    pub fn from_fn(nodes: Vec<f64>, f: impl Fn(f64) -> f64, tail: Tail) -> Result<Self> {
        let values = nodes.iter().map(|&r| f(r)).collect();
        Self::new(nodes, values, tail)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Same nodes, new values (the tail model is kept).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.nodes.clone(), values, self.tail)
    }

    fn segment(&self, r: f64) -> usize {
        match self.nodes.binary_search_by(|n| n.total_cmp(&r)) {
            Ok(i) => i.min(self.nodes.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.nodes.len() - 2),
        }
    }

    /// Spline value inside the grid (extrapolated cubically below the first
    /// node), tail model beyond the last.
    pub fn eval(&self, r: f64) -> f64 {
        let last = self.nodes.len() - 1;
        if r > self.nodes[last] {
            return match self.tail {
                Tail::Zero => 0.0,
                Tail::PowerLaw(p) => self.values[last] * (r / self.nodes[last]).powf(p),
            };
        }
        let i = self.segment(r);
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let h = x1 - x0;
        let a = (x1 - r) / h;
        let b = (r - x0) / h;
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.curvature[i] + (b * b * b - b) * self.curvature[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let last = self.nodes.len() - 1;
        if r > self.nodes[last] {
            return match self.tail {
                Tail::Zero => 0.0,
                Tail::PowerLaw(p) => p * self.eval(r) / r,
            };
        }
        let i = self.segment(r);
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let h = x1 - x0;
        let a = (x1 - r) / h;
        let b = (r - x0) / h;
        (self.values[i + 1] - self.values[i]) / h
            + (-(3.0 * a * a - 1.0) * self.curvature[i] + (3.0 * b * b - 1.0) * self.curvature[i + 1]) * h / 6.0
    }

    /// `4π ∫_0^∞ r² g(r, f(r)) dr` with `g` applied to the interpolated values.
    ///
    /// The tail contributes through the declared model; a power-law tail must
    /// make `r² g` integrable, which the caller asserts by `tail_exponent`
    /// (the decay exponent of `g(r, f(r))`, required `< -3`).
    pub fn volume_integral(&self, g: impl Fn(f64, f64) -> f64, tail_exponent: Option<f64>) -> Result<f64> {
        let mut points = Vec::with_capacity(self.nodes.len() + 1);
        if self.nodes[0] > 0.0 {
            points.push(0.0);
        }
        points.extend_from_slice(&self.nodes);
        let tol = Tolerance::new(1e-14, 1e-11);
        let integrand = |r: f64| r * r * g(r, self.eval(r));
        let inner = integrate_breakpoints(integrand, &points, tol)?.value;
        let tail = match (self.tail, tail_exponent) {
            (Tail::Zero, _) => 0.0,
            (Tail::PowerLaw(_), Some(q)) => {
                if !(q < -3.0) {
                    return Err(Error::Integrability(format!(
                        "tail decays like r^{q}; 3-D volume integral needs exponent < -3"
                    )));
                }
                let r_last = self.r_max();
                let head = integrate(integrand, r_last, 2.0 * r_last, tol)?.value;
                let g_far = (2.0 * r_last).powi(2) * g(2.0 * r_last, self.eval(2.0 * r_last));
                head - g_far * 2.0 * r_last / (q + 3.0)
            }
            (Tail::PowerLaw(_), None) => {
                return Err(Error::Integrability("power-law tail without a declared integrand exponent".into()))
            }
        };
        Ok(4.0 * PI * (inner + tail))
    }
}

fn natural_spline_curvature(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior equations.
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        let a = h0 / 6.0;
        let b = (h0 + h1) / 3.0;
        let c = h1 / 6.0;
        let d = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        let denom = b - a * c_prime[i - 1];
        c_prime[i] = c / denom;
        d_prime[i] = (d - a * d_prime[i - 1]) / denom;
    }
    for i in (1..n - 1).rev() {
        m[i] = d_prime[i] - c_prime[i] * m[i + 1];
    }
    m
}

/// `∫_R^∞ r^q sin(k r) dr` for `q <= 0`, summed over half periods with
/// repeated averaging of the alternating partial sums (Abel value for `q = 0`).
fn oscillatory_power_tail(q: f64, k: f64, r0: f64) -> f64 {
    let rule = gauss_legendre(24);
    let f = |r: f64| r.powf(q) * (k * r).sin();
    let period = PI / k;
    let first_zero = (r0 / period).ceil() * period;
    let mut total = 0.0;
    let mut start = r0;
    if first_zero > r0 {
        total += fixed_rule(&rule, f, r0, first_zero);
        start = first_zero;
    }
    const TERMS: usize = 40;
    let mut partial = Vec::with_capacity(TERMS);
    let mut acc = 0.0;
    for j in 0..TERMS {
        let a = start + j as f64 * period;
        acc += fixed_rule(&rule, f, a, a + period);
        partial.push(acc);
    }
    for level in 1..TERMS {
        for i in 0..TERMS - level {
            partial[i] = 0.5 * (partial[i] + partial[i + 1]);
        }
    }
    total + partial[0]
}

/// Three-dimensional Fourier transform of a radial function,
/// `(4π/k) ∫_0^∞ r sin(k r) f(r) dr`.
pub fn radial_fourier_transform(f: &RadialGridFunction, k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::domain("radial Fourier transform needs k > 0"));
    }
    let nodes = f.nodes();
    let mut sum = 0.0;
    let mut lo = 0.0;
    for &hi in nodes.iter() {
        if hi > lo {
            sum += spline_segment_sine(f, k, lo, hi);
        }
        lo = hi;
    }
    let tail = match f.tail() {
        Tail::Zero => 0.0,
        Tail::PowerLaw(p) => {
            if !(p <= -1.0) {
                return Err(Error::Tail(format!(
                    "power-law tail r^{p} has no radial Fourier transform (need exponent <= -1)"
                )));
            }
            let r_last = f.r_max();
            let scale = f.values()[nodes.len() - 1] * r_last.powf(-p);
            if scale == 0.0 {
                0.0
            } else {
                scale * oscillatory_power_tail(p + 1.0, k, r_last)
            }
        }
    };
    Ok(4.0 * PI / k * (sum + tail))
}

fn spline_segment_sine(f: &RadialGridFunction, k: f64, a: f64, b: f64) -> f64 {
    // Enough nodes to resolve both the cubic and the oscillation.
    let waves = k * (b - a) / (2.0 * PI);
    let pieces = waves.ceil().max(1.0) as usize;
    let rule = gauss_legendre(16);
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|j| {
            let lo = a + j as f64 * h;
            fixed_rule(&rule, |r| r * (k * r).sin() * f.eval(r), lo, lo + h)
        })
        .sum()
}
