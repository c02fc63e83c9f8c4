use nalgebra::{DMatrix, DVectorView, DVectorViewMut};

use super::{LinearOperator, PsdClaim};
use crate::error::{Error, Result};

/// Relative tolerance on `max |A - A^T|` accepted by [`dense_operator`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Explicit dense symmetric matrix.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    matrix: DMatrix<f64>,
    psd: PsdClaim,
}

/// Wraps a dense symmetric matrix, rejecting non-square or asymmetric input.
pub fn dense_operator(matrix: DMatrix<f64>) -> Result<DenseOperator> {
    if !matrix.is_square() {
        return Err(Error::NotSquare {
            rows: matrix.nrows(),
            cols: matrix.ncols(),
        });
    }
    let scale = matrix.amax();
    let deviation = (&matrix - matrix.transpose()).amax();
    let tolerance = SYMMETRY_TOLERANCE * scale;
    if deviation > tolerance {
        return Err(Error::Asymmetric {
            deviation,
            tolerance,
        });
    }
    Ok(DenseOperator {
        matrix,
        psd: PsdClaim::Unknown,
    })
}

impl DenseOperator {
    /// Records the caller's claim about the spectrum. Not verified.
    pub fn with_psd_claim(mut self, claim: PsdClaim) -> Self {
        self.psd = claim;
        self
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply_column(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let n = self.dim();
        let x = DVectorView::from_slice(x, n);
        let mut y = DVectorViewMut::from_slice(y, n);
        y.gemv(1.0, &self.matrix, &x, 0.0);
        Ok(())
    }

    fn psd_claim(&self) -> PsdClaim {
        self.psd
    }
}

/// Diagonal matrix stored as its diagonal.
#[derive(Debug, Clone)]
pub struct DiagonalOperator {
    diag: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(diag: Vec<f64>) -> Self {
        Self { diag }
    }

    /// `diag(1, 1/4, 1/9, ..., 1/n^2)`.
    pub fn inverse_square_spectrum(n: usize) -> Self {
        Self::new((1..=n).map(|i| 1.0 / (i as f64 * i as f64)).collect())
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }
}

impl LinearOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply_column(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        for ((yi, &xi), &di) in y.iter_mut().zip(x).zip(&self.diag) {
            *yi = di * xi;
        }
        Ok(())
    }

    fn psd_claim(&self) -> PsdClaim {
        if self.diag.iter().all(|&d| d >= 0.0) {
            PsdClaim::Psd
        } else {
            PsdClaim::NotPsd
        }
    }
}

/// `c I_n`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledIdentity {
    n: usize,
    scale: f64,
}

impl ScaledIdentity {
    pub fn new(n: usize, scale: f64) -> Self {
        Self { n, scale }
    }
}

impl LinearOperator for ScaledIdentity {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_column(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        for (yi, &xi) in y.iter_mut().zip(x) {
            *yi = self.scale * xi;
        }
        Ok(())
    }

    fn psd_claim(&self) -> PsdClaim {
        if self.scale >= 0.0 {
            PsdClaim::Psd
        } else {
            PsdClaim::NotPsd
        }
    }
}
