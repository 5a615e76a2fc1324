//! Displaced squeezed states built explicitly in a truncated occupation
//! basis, used as an oracle for the closed-form moment formulas.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::PsdMatrix;

/// Largest admissible squeezing parameter.
pub const LAMBDA_MAX: f64 = 1.0 - 1e-6;

/// Pair-excitation data in a finite real mode frame `f_0, ..., f_{M-1}`.
///
/// `xi` holds the coefficients of the condensate function in that frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairExcitationSpec {
    pub lambdas: Vec<f64>,
    /// `√N`.
    pub condensate_amplitude: f64,
    pub xi: Vec<f64>,
}

impl PairExcitationSpec {
    pub fn new(lambdas: Vec<f64>, condensate_amplitude: f64, xi: Vec<f64>) -> Result<Self> {
        let spec = PairExcitationSpec { lambdas, condensate_amplitude, xi };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(Error::domain("need at least one mode"));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(**l >= 0.0 && **l <= LAMBDA_MAX)) {
            return Err(Error::domain(format!("squeezing parameter {l} outside [0, 1 − 1e−6]")));
        }
        if !(self.condensate_amplitude >= 0.0) || !self.condensate_amplitude.is_finite() {
            return Err(Error::domain("condensate amplitude must be finite and nonnegative"));
        }
        if self.xi.len() != self.lambdas.len() {
            return Err(Error::Shape(format!("xi has {} coefficients for {} modes", self.xi.len(), self.lambdas.len())));
        }
        let norm: f64 = self.xi.iter().map(|x| x * x).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::domain(format!("xi must be normalized, |xi|² = {norm}")));
        }
        Ok(())
    }

    pub fn n_modes(&self) -> usize {
        self.lambdas.len()
    }

    pub fn particle_number(&self) -> f64 {
        self.condensate_amplitude.powi(2)
    }

    /// Displacement `√N ξ_α` of each mode.
    pub fn displacements(&self) -> Vec<f64> {
        self.xi.iter().map(|x| self.condensate_amplitude * x).collect()
    }

    /// Random spec with `λ ∈ [0.05, lambda_max]`, `N ∈ [0, n_max]` and a
    /// random unit `ξ`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, modes: usize, lambda_max: f64, n_max: f64) -> Result<Self> {
        let lambdas = (0..modes).map(|_| rng.random_range(0.05..lambda_max)).collect();
        let mut xi: Vec<f64> = (0..modes).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        xi.iter_mut().for_each(|x| *x /= norm);
        Self::new(lambdas, rng.random_range(0.0..n_max).sqrt(), xi)
    }
}

/// `γ = Σ λ²/(1−λ²) |f_α⟩⟨f_α|` in the mode frame.
pub fn gamma_from_spec(s: &PairExcitationSpec) -> Result<PsdMatrix> {
    s.validate()?;
    let diag: Vec<f64> = s.lambdas.iter().map(|l| l * l / (1.0 - l * l)).collect();
    PsdMatrix::from_diagonal(&diag)
}

/// `√(γ(γ+1))` in the mode frame.
pub fn pairing_from_spec(s: &PairExcitationSpec) -> Result<DMatrix<f64>> {
    Ok(gamma_from_spec(s)?.map_spectrum(|g| (g * (g + 1.0)).sqrt()))
}

/// Creation or annihilation of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Create(usize),
    Annihilate(usize),
}

/// Product state `⊗_α D(β_α) S(λ_α)|0⟩` in the truncated tensor basis.
pub struct FockState {
    truncation: usize,
    // Levels per mode in the operator space; four above the state's support
    // so that no ladder product of length four is clipped.
    levels: usize,
    modes: usize,
    amplitudes: DVector<f64>,
    norm_deficit: f64,
}

// Extra levels carried while displacing, so the truncated generator's edge
// does not reach the retained levels.
const PAD: usize = 60;

fn single_mode(lambda: f64, beta: f64, truncation: usize) -> (Vec<f64>, f64) {
    let dim = truncation + 1 + PAD;
    let mut squeezed = DVector::zeros(dim);
    let mut c = (1.0 - lambda * lambda).powf(0.25);
    let mut k = 0;
    while 2 * k < dim {
        squeezed[2 * k] = c;
        let n = 2 * k;
        c *= -0.5 * lambda * (((n + 1) * (n + 2)) as f64).sqrt() / (k + 1) as f64;
        k += 1;
    }
    let mut generator = DMatrix::zeros(dim, dim);
    for n in 0..dim - 1 {
        let s = ((n + 1) as f64).sqrt();
        generator[(n + 1, n)] = beta * s;
        generator[(n, n + 1)] = -beta * s;
    }
    let state = generator.exp() * squeezed;
    let kept: Vec<f64> = state.iter().take(truncation + 1).copied().collect();
    let deficit = 1.0 - kept.iter().map(|x| x * x).sum::<f64>();
    (kept, deficit)
}

impl FockState {
    pub fn build(s: &PairExcitationSpec, truncation: usize) -> Result<Self> {
        s.validate()?;
        if s.n_modes() > 3 {
            return Err(Error::Unsupported(format!("{} modes (oracle supports at most 3)", s.n_modes())));
        }
        if truncation < 2 {
            return Err(Error::domain("truncation must be at least 2"));
        }
        let levels = truncation + 5;
        let mut amplitudes = DVector::from_element(1, 1.0);
        let mut kept = 1.0;
        for (lambda, beta) in s.lambdas.iter().zip(s.displacements()) {
            let (mut mode, deficit) = single_mode(*lambda, beta, truncation);
            mode.resize(levels, 0.0);
            kept *= 1.0 - deficit;
            amplitudes = amplitudes.kronecker(&DVector::from_vec(mode));
        }
        let norm_deficit = 1.0 - kept;
        if norm_deficit > 1e-8 {
            return Err(Error::Truncation { deficit: norm_deficit });
        }
        Ok(FockState { truncation, levels, modes: s.n_modes(), amplitudes, norm_deficit })
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn norm_deficit(&self) -> f64 {
        self.norm_deficit
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    fn stride(&self, mode: usize) -> usize {
        self.levels.pow((self.modes - 1 - mode) as u32)
    }

    fn occupation(&self, idx: usize, mode: usize) -> usize {
        (idx / self.stride(mode)) % self.levels
    }

    /// Applies one ladder operator; creation beyond the operator space is dropped.
    pub fn apply(&self, op: Ladder, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        match op {
            Ladder::Annihilate(m) => {
                let st = self.stride(m);
                for idx in 0..v.len() {
                    let n = self.occupation(idx, m);
                    if n > 0 {
                        out[idx - st] = (n as f64).sqrt() * v[idx];
                    }
                }
            }
            Ladder::Create(m) => {
                let st = self.stride(m);
                for idx in 0..v.len() {
                    let n = self.occupation(idx, m);
                    if n + 1 < self.levels {
                        out[idx + st] = ((n + 1) as f64).sqrt() * v[idx];
                    }
                }
            }
        }
        out
    }

    /// `⟨Ψ, X₁ ⋯ X_k Ψ⟩` where each factor is a ladder operator shifted by
    /// the scalar `shift` (applied rightmost first).
    pub fn expectation(&self, factors: &[(Ladder, f64)]) -> f64 {
        let mut v = self.amplitudes.clone();
        for (op, shift) in factors.iter().rev() {
            let applied = self.apply(*op, &v);
            v = applied - &v * *shift;
        }
        self.amplitudes.dot(&v)
    }

    /// Mean and variance of the total number operator.
    pub fn number_statistics(&self) -> (f64, f64) {
        let counts: Vec<f64> = (0..self.dim()).map(|idx| (0..self.modes).map(|m| self.occupation(idx, m)).sum::<usize>() as f64).collect();
        let p: Vec<f64> = self.amplitudes.iter().map(|a| a * a).collect();
        let mean: f64 = counts.iter().zip(&p).map(|(n, p)| n * p).sum();
        let second: f64 = counts.iter().zip(&p).map(|(n, p)| n * n * p).sum();
        (mean, second - mean * mean)
    }
}

/// Truncated-basis moments next to their closed forms.
#[derive(Debug, Clone, Serialize)]
pub struct FockMoments {
    pub truncation: usize,
    pub norm_deficit: f64,
    /// `⟨a*_α a_β⟩`
    pub one_body: Vec<Vec<f64>>,
    /// `⟨a*_α a*_β⟩`
    pub pairing: Vec<Vec<f64>>,
    pub one_body_error: f64,
    pub pairing_error: f64,
    /// Largest deviation of a centred 4-point function from Wick's expansion,
    /// over every ordered product of four centred ladder operators.
    pub wick_error: f64,
    /// Largest deviation of `⟨b*_α b*_β b_β b_α⟩` from `s² + γ² + γ_αα γ_ββ`.
    pub density_four_point_error: f64,
    pub number_mean: f64,
    pub number_variance: f64,
    pub number_mean_expected: f64,
    pub number_variance_expected: f64,
}

impl FockMoments {
    pub fn max_error(&self) -> f64 {
        [
            self.one_body_error,
            self.pairing_error,
            self.wick_error,
            self.density_four_point_error,
            (self.number_mean - self.number_mean_expected).abs(),
            (self.number_variance - self.number_variance_expected).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Builds `Ψ` and compares its moments with `Nξξ + γ`, `Nξξ − √(γ(γ+1))`,
/// Wick's formula and the number mean `N + Tr γ` and variance
/// `Σ_α β_α²(2γ_α + 1 − 2s_α) + 2γ_α(γ_α + 1)`.
pub fn fock_oracle(s: &PairExcitationSpec, truncation: usize) -> Result<FockMoments> {
    let psi = FockState::build(s, truncation)?;
    let m = s.n_modes();
    let beta = s.displacements();
    let gamma = gamma_from_spec(s)?.entries().clone();
    let pair = pairing_from_spec(s)?;

    let mut one_body = vec![vec![0.0; m]; m];
    let mut pairing = vec![vec![0.0; m]; m];
    let mut one_body_error: f64 = 0.0;
    let mut pairing_error: f64 = 0.0;
    let mut density_error: f64 = 0.0;
    for a in 0..m {
        for b in 0..m {
            let ob = psi.expectation(&[(Ladder::Create(a), 0.0), (Ladder::Annihilate(b), 0.0)]);
            let pr = psi.expectation(&[(Ladder::Create(a), 0.0), (Ladder::Create(b), 0.0)]);
            one_body[a][b] = ob;
            pairing[a][b] = pr;
            one_body_error = one_body_error.max((ob - beta[a] * beta[b] - gamma[(b, a)]).abs());
            pairing_error = pairing_error.max((pr - beta[a] * beta[b] + pair[(a, b)]).abs());
            let four = psi.expectation(&[
                (Ladder::Create(a), beta[a]),
                (Ladder::Create(b), beta[b]),
                (Ladder::Annihilate(b), beta[b]),
                (Ladder::Annihilate(a), beta[a]),
            ]);
            let closed = pair[(a, b)].powi(2) + gamma[(a, b)].powi(2) + gamma[(a, a)] * gamma[(b, b)];
            density_error = density_error.max((four - closed).abs());
        }
    }

    // Closed-form centred two-point functions.
    let two_point = |x: Ladder, y: Ladder| -> f64 {
        match (x, y) {
            (Ladder::Create(a), Ladder::Annihilate(b)) => gamma[(b, a)],
            (Ladder::Annihilate(a), Ladder::Create(b)) => gamma[(a, b)] + if a == b { 1.0 } else { 0.0 },
            (Ladder::Create(a), Ladder::Create(b)) | (Ladder::Annihilate(a), Ladder::Annihilate(b)) => -pair[(a, b)],
        }
    };
    let ops: Vec<Ladder> = (0..m).flat_map(|a| [Ladder::Create(a), Ladder::Annihilate(a)]).collect();
    let shift = |op: Ladder| match op {
        Ladder::Create(a) | Ladder::Annihilate(a) => beta[a],
    };
    let mut wick_error: f64 = 0.0;
    for &x1 in &ops {
        for &x2 in &ops {
            for &x3 in &ops {
                for &x4 in &ops {
                    let lhs = psi.expectation(&[(x1, shift(x1)), (x2, shift(x2)), (x3, shift(x3)), (x4, shift(x4))]);
                    let rhs = two_point(x1, x2) * two_point(x3, x4)
                        + two_point(x1, x3) * two_point(x2, x4)
                        + two_point(x1, x4) * two_point(x2, x3);
                    wick_error = wick_error.max((lhs - rhs).abs());
                }
            }
        }
    }

    let (number_mean, number_variance) = psi.number_statistics();
    let mut mean_expected = 0.0;
    let mut var_expected = 0.0;
    for a in 0..m {
        let (g, p) = (gamma[(a, a)], pair[(a, a)]);
        mean_expected += beta[a] * beta[a] + g;
        var_expected += beta[a] * beta[a] * (2.0 * g + 1.0 - 2.0 * p) + 2.0 * g * (g + 1.0);
    }
    Ok(FockMoments {
        truncation,
        norm_deficit: psi.norm_deficit(),
        one_body,
        pairing,
        one_body_error,
        pairing_error,
        wick_error,
        density_four_point_error: density_error,
        number_mean,
        number_variance,
        number_mean_expected: mean_expected,
        number_variance_expected: var_expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gamma_entries() {
        let zero = PairExcitationSpec::new(vec![0.0, 0.0], 1.0, vec![1.0, 0.0]).unwrap();
        assert_eq!(gamma_from_spec(&zero).unwrap().entries().norm(), 0.0);
        let half = PairExcitationSpec::new(vec![0.5], 0.0, vec![1.0]).unwrap();
        assert!((gamma_from_spec(&half).unwrap().entries()[(0, 0)] - 1.0 / 3.0).abs() < 1e-15);
        assert!(PairExcitationSpec::new(vec![1.0], 0.0, vec![1.0]).is_err());
        assert!(PairExcitationSpec::new(vec![-0.1], 0.0, vec![1.0]).is_err());
        let near = PairExcitationSpec::new(vec![LAMBDA_MAX], 0.0, vec![1.0]).unwrap();
        assert!(gamma_from_spec(&near).unwrap().entries()[(0, 0)] > 4e5);
    }

    #[test]
    fn coherent_number_statistics() {
        let s = PairExcitationSpec::new(vec![0.0], 2.0, vec![1.0]).unwrap();
        let m = fock_oracle(&s, 40).unwrap();
        assert!((m.number_mean - 4.0).abs() < 1e-9);
        assert!((m.number_variance - 4.0).abs() < 1e-9);
    }

    #[test]
    fn squeezed_vacuum_moments() {
        let s = PairExcitationSpec::new(vec![0.5], 0.0, vec![1.0]).unwrap();
        let m = fock_oracle(&s, 40).unwrap();
        assert!((m.one_body[0][0] - 1.0 / 3.0).abs() < 1e-9);
        assert!((m.pairing[0][0] + 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn four_point_single_mode() {
        let s = PairExcitationSpec::new(vec![0.3], 2f64.sqrt(), vec![1.0]).unwrap();
        let m = fock_oracle(&s, 40).unwrap();
        assert!(m.density_four_point_error < 1e-8);
        assert!(m.wick_error < 1e-8);
    }

    #[test]
    fn random_two_mode_specs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            let s = PairExcitationSpec::random(&mut rng, 2, 0.5, 6.0).unwrap();
            let m = fock_oracle(&s, 40).unwrap();
            assert!(m.max_error() < 1e-7, "{s:?}: {m:?}");
        }
    }

    #[test]
    fn truncation_too_small() {
        let s = PairExcitationSpec::new(vec![0.9], 3.0, vec![1.0]).unwrap();
        assert!(matches!(fock_oracle(&s, 10), Err(Error::Truncation { .. })));
    }
}
