//! Hermitian generators and the unitaries they produce.
//!
//! Every propagator in the crate goes through a [`Spectrum`]: the generator is
//! diagonalised once and `exp(-i H t)` is applied as `V diag(e^{-i λ t}) V†`.
//! Sweeps that reuse one generator at many times pay the `O(dim³)`
//! decomposition only once.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Absolute Hermiticity tolerance, scaled by the largest matrix element when that exceeds one.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Largest elementwise deviation `|A - A†|`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            dev = dev.max(d);
        }
    }
    dev
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub(crate) fn check_hermitian(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let dev = hermitian_deviation(m);
    if dev > HERMITIAN_TOL * max_abs(m).max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(())
}

/// Eigen-decomposition `H = V diag(λ) V†` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    values: DVector<f64>,
    vectors: CMatrix,
}

impl Spectrum {
    /// Diagonalises `h`. The caller is responsible for Hermiticity; see [`Hamiltonian::new`].
    pub fn of(h: &CMatrix) -> Self {
        // Symmetrise so round-off in the input cannot leak into the eigenvectors.
        let sym = (h + h.adjoint()).scale(0.5);
        let eig = SymmetricEigen::new(sym);
        Spectrum {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.vectors
    }

    /// `exp(-i H t) ψ`.
    pub fn propagate(&self, psi: &CVector, t: f64) -> CVector {
        let mut coeffs = self.vectors.ad_mul(psi);
        for (c, &lambda) in coeffs.iter_mut().zip(self.values.iter()) {
            *c *= Complex64::from_polar(1.0, -lambda * t);
        }
        &self.vectors * coeffs
    }

    /// Dense `exp(-i H t)`.
    pub fn unitary(&self, t: f64) -> CMatrix {
        let phases = DVector::from_iterator(
            self.dim(),
            self.values
                .iter()
                .map(|&lambda| Complex64::from_polar(1.0, -lambda * t)),
        );
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        scaled * self.vectors.adjoint()
    }
}

/// A validated Hermitian generator with a lazily computed, shareable spectrum.
#[derive(Debug)]
pub struct Hamiltonian {
    matrix: CMatrix,
    spectrum: OnceLock<Spectrum>,
}

impl Clone for Hamiltonian {
    fn clone(&self) -> Self {
        let spectrum = OnceLock::new();
        if let Some(s) = self.spectrum.get() {
            let _ = spectrum.set(s.clone());
        }
        Hamiltonian {
            matrix: self.matrix.clone(),
            spectrum,
        }
    }
}

impl Hamiltonian {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_hermitian(&matrix)?;
        Ok(Hamiltonian {
            matrix,
            spectrum: OnceLock::new(),
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| Spectrum::of(&self.matrix))
    }

    /// `exp(-i H t) ψ`.
    pub fn propagate(&self, psi: &CVector, t: f64) -> Result<CVector> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.len(),
            });
        }
        Ok(self.spectrum().propagate(psi, t))
    }

    pub fn unitary(&self, t: f64) -> CMatrix {
        self.spectrum().unitary(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(Hamiltonian::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn pauli_x_half_period() {
        // exp(-i σx π/2) = -i σx
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let h = Hamiltonian::new(m).unwrap();
        let u = h.unitary(std::f64::consts::FRAC_PI_2);
        assert!((u[(0, 1)] - c(0.0, -1.0)).norm() < 1e-14);
        assert!(u[(0, 0)].norm() < 1e-14);
    }

    #[test]
    fn propagate_matches_dense_unitary() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.0),
                c(0.5, 0.25),
                c(0.0, 0.0),
                c(0.5, -0.25),
                c(-0.3, 0.0),
                c(0.1, 0.0),
                c(0.0, 0.0),
                c(0.1, 0.0),
                c(2.0, 0.0),
            ],
        );
        let h = Hamiltonian::new(m).unwrap();
        let psi = CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)]);
        let a = h.propagate(&psi, 0.7).unwrap();
        let b = h.unitary(0.7) * &psi;
        assert!((a - b).norm() < 1e-13);
    }
}
