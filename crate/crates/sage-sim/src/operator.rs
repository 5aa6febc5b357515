//! Dense Hermitian operators in frequency units and the eigendecomposition
//! propagator built from them.
//!
//! Time evolution uses the phase convention exp(-i 2 pi H t) with H in MHz
//! and t in microseconds, so a two-level splitting of J MHz completes one
//! oscillation in 1/J us.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const NS_PER_US: f64 = 1e3;

/// A dense complex Hermitian matrix with entries in MHz.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    dim: usize,
    entries: DMatrix<C64>,
}

impl HermitianOperator {
    /// Validates Hermiticity to 1e-12 relative to the largest entry.
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::Dimension {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        let scale = entries
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()))
            .max(1e-300);
        let mut max_dev = 0.0f64;
        for i in 0..entries.nrows() {
            for j in i..entries.ncols() {
                let dev = (entries[(i, j)] - entries[(j, i)].conj()).norm();
                max_dev = max_dev.max(dev);
            }
        }
        if max_dev > 1e-12 * scale {
            return Err(Error::NotHermitian {
                max_dev: max_dev / scale,
            });
        }
        Ok(HermitianOperator {
            dim: entries.nrows(),
            entries,
        })
    }

    /// Builds from a real symmetric matrix given as the upper triangle filled
    /// both ways already.
    pub fn from_real(entries: DMatrix<f64>) -> Result<Self> {
        Self::new(entries.map(|x| C64::new(x, 0.0)))
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianOperator {
            dim,
            entries: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    /// Conjugation U^dag H U by a (not necessarily square) column matrix.
    pub fn conjugate_by(&self, columns: &DMatrix<C64>) -> Result<Self> {
        if columns.nrows() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: columns.nrows(),
            });
        }
        HermitianOperator::new(columns.adjoint() * &self.entries * columns)
    }

    pub fn eigendecompose(&self) -> Propagator {
        let eig = self.entries.clone().symmetric_eigen();
        Propagator {
            eigvals_mhz: eig.eigenvalues,
            eigvecs: eig.eigenvectors,
        }
    }
}

/// Eigendecomposition of a Hermitian operator, reusable across times.
#[derive(Clone, Debug)]
pub struct Propagator {
    eigvals_mhz: DVector<f64>,
    eigvecs: DMatrix<C64>,
}

impl Propagator {
    pub fn dim(&self) -> usize {
        self.eigvals_mhz.len()
    }

    pub fn eigenvalues_mhz(&self) -> &DVector<f64> {
        &self.eigvals_mhz
    }

    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.eigvecs
    }

    fn phases(&self, t_ns: f64) -> DVector<C64> {
        let t_us = t_ns / NS_PER_US;
        self.eigvals_mhz
            .map(|e| C64::from_polar(1.0, -2.0 * std::f64::consts::PI * e * t_us))
    }

    /// exp(-i 2 pi H t) applied to a state vector.
    pub fn apply(&self, t_ns: f64, state: &DVector<C64>) -> DVector<C64> {
        let mut coeffs = self.eigvecs.adjoint() * state;
        let ph = self.phases(t_ns);
        for (c, p) in coeffs.iter_mut().zip(ph.iter()) {
            *c *= *p;
        }
        &self.eigvecs * coeffs
    }

    /// exp(-i 2 pi H t) applied to each column of a matrix.
    pub fn apply_columns(&self, t_ns: f64, columns: &DMatrix<C64>) -> DMatrix<C64> {
        let mut coeffs = self.eigvecs.adjoint() * columns;
        let ph = self.phases(t_ns);
        for j in 0..coeffs.ncols() {
            for i in 0..coeffs.nrows() {
                coeffs[(i, j)] *= ph[i];
            }
        }
        &self.eigvecs * coeffs
    }

    /// The full unitary exp(-i 2 pi H t).
    pub fn matrix(&self, t_ns: f64) -> DMatrix<C64> {
        self.apply_columns(t_ns, &DMatrix::identity(self.dim(), self.dim()))
    }
}
