use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Real symmetric positive-semidefinite matrix.
///
/// Matrix functions are evaluated exclusively through the symmetric
/// eigendecomposition; eigenvalues in `[-tol, 0)` are clamped to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdMatrix {
    entries: DMatrix<f64>,
    min_eig_tolerance: f64,
}

impl PsdMatrix {
    /// Validates symmetry and semidefiniteness. A `None` tolerance selects
    /// the default `1e-10 ‖M‖`.
    pub fn new(entries: DMatrix<f64>, min_eig_tolerance: Option<f64>) -> Result<Self> {
        if entries.nrows() == 0 || !entries.is_square() {
            return Err(Error::Shape(format!("PSD matrix must be square and nonempty, got {}x{}", entries.nrows(), entries.ncols())));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("matrix entries must be finite"));
        }
        let norm = entries.norm();
        let asym = (&entries - entries.transpose()).norm();
        if asym > 1e-12 * norm.max(1.0) {
            return Err(Error::domain(format!("matrix is not symmetric (‖M − Mᵀ‖ = {asym:e})")));
        }
        let tol = min_eig_tolerance.unwrap_or(1e-10 * norm);
        if !(tol >= 0.0) {
            return Err(Error::domain("eigenvalue tolerance must be nonnegative"));
        }
        // Symmetrise exactly so the eigensolver sees a symmetric input.
        let entries = (&entries + entries.transpose()) * 0.5;
        let min_eig = entries.clone().symmetric_eigenvalues().min();
        if min_eig < -tol {
            return Err(Error::NotPsd { min_eig, tolerance: tol });
        }
        Ok(PsdMatrix { entries, min_eig_tolerance: tol })
    }

    pub fn identity(dim: usize) -> Self {
        PsdMatrix { entries: DMatrix::identity(dim, dim), min_eig_tolerance: 1e-10 }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)), None)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn min_eig_tolerance(&self) -> f64 {
        self.min_eig_tolerance
    }

    /// Eigenvalues (clamped at zero) and orthonormal eigenvectors.
    pub fn eigen(&self) -> (DVector<f64>, DMatrix<f64>) {
        let eig = SymmetricEigen::new(self.entries.clone());
        (eig.eigenvalues.map(|x| x.max(0.0)), eig.eigenvectors)
    }

    /// `V f(Λ) Vᵀ`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let (values, vectors) = self.eigen();
        let scaled = DMatrix::from_diagonal(&values.map(f));
        &vectors * scaled * vectors.transpose()
    }

    pub fn sqrt(&self) -> PsdMatrix {
        let s = self.map_spectrum(f64::sqrt);
        let s = (&s + s.transpose()) * 0.5;
        PsdMatrix { entries: s, min_eig_tolerance: self.min_eig_tolerance.sqrt() }
    }
}

pub fn psd_sqrt(m: &PsdMatrix) -> PsdMatrix {
    m.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_diagonal() {
        let id = PsdMatrix::identity(4);
        assert!((psd_sqrt(&id).entries() - DMatrix::<f64>::identity(4, 4)).norm() < 1e-14);
        let d = PsdMatrix::from_diagonal(&[4.0, 9.0]).unwrap();
        let s = psd_sqrt(&d);
        assert!((s.entries()[(0, 0)] - 2.0).abs() < 1e-14);
        assert!((s.entries()[(1, 1)] - 3.0).abs() < 1e-14);
        assert!(s.entries()[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn random_gram_reconstruction_and_commutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = DMatrix::from_fn(8, 8, |_, _| rng.random_range(-1.0..1.0));
        let m = PsdMatrix::new(a.transpose() * &a, None).unwrap();
        let s = psd_sqrt(&m);
        let norm = m.entries().norm();
        assert!((s.entries() * s.entries() - m.entries()).norm() < 1e-10);
        let comm = s.entries() * m.entries() - m.entries() * s.entries();
        assert!(comm.norm() < 8.0 * f64::EPSILON * norm * norm);
    }

    #[test]
    fn clamps_tiny_negative_but_rejects_large() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-13]);
        let p = PsdMatrix::new(m, None).unwrap();
        assert!(psd_sqrt(&p).entries()[(1, 1)] == 0.0);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-3]);
        assert!(matches!(PsdMatrix::new(bad, None), Err(Error::NotPsd { .. })));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(PsdMatrix::new(asym, None).is_err());
    }
}
