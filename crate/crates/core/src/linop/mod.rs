//! The matrix-vector product oracle and its implementations.
//!
//! Estimators never see matrix entries. They submit blocks of query vectors
//! through [`LinearOperator::apply`] and read back the products. Every
//! shipped operator computes a block one column at a time through
//! [`LinearOperator::apply_column`], so a block product is bit-identical to
//! the concatenation of single-column products no matter how the columns are
//! scheduled.

mod dense;
mod lanczos;
mod mtx;
mod parallel;
mod power;
mod sparse;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng;

pub use dense::{dense_operator, DenseOperator, DiagonalOperator, ScaledIdentity};
pub use lanczos::{
    lanczos_factorize, lanczos_function_operator, LanczosFactorization, LanczosFunctionOperator,
    MatrixFunction,
};
pub use mtx::read_matrix_market;
pub use parallel::ColumnParallel;
pub use power::{power_operator, PowerOperator};
pub use sparse::SparseSymmetricMatrix;

/// What the constructor of an operator asserts about its spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsdClaim {
    Psd,
    NotPsd,
    Unknown,
}

/// An implicit square matrix observable only through matrix-vector products.
///
/// Implementations must be deterministic: all randomness lives in the query
/// vectors the caller supplies.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// `y = A x` for one column. Both slices have length [`dim`](Self::dim).
    fn apply_column(&self, x: &[f64], y: &mut [f64]) -> Result<()>;

    fn is_symmetric(&self) -> bool {
        true
    }

    fn psd_claim(&self) -> PsdClaim {
        PsdClaim::Unknown
    }

    /// `A Q` for an n x b block of queries. One call is one round of queries.
    fn apply(&self, block: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        check_rows(n, block)?;
        let mut out = DMatrix::zeros(n, block.ncols());
        if n == 0 {
            return Ok(out);
        }
        for (x, y) in block
            .as_slice()
            .chunks_exact(n)
            .zip(out.as_mut_slice().chunks_exact_mut(n))
        {
            self.apply_column(x, y)?;
        }
        Ok(out)
    }
}

pub(crate) fn check_rows(n: usize, block: &DMatrix<f64>) -> Result<()> {
    if block.nrows() != n {
        return Err(Error::Dimension {
            expected: n,
            found: block.nrows(),
        });
    }
    Ok(())
}

macro_rules! forward_operator {
    ($($ty:ty),*) => {$(
        impl<T: LinearOperator + ?Sized> LinearOperator for $ty {
            fn dim(&self) -> usize {
                (**self).dim()
            }
            fn apply_column(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
                (**self).apply_column(x, y)
            }
            fn is_symmetric(&self) -> bool {
                (**self).is_symmetric()
            }
            fn psd_claim(&self) -> PsdClaim {
                (**self).psd_claim()
            }
            fn apply(&self, block: &DMatrix<f64>) -> Result<DMatrix<f64>> {
                (**self).apply(block)
            }
        }
    )*};
}

forward_operator!(&T, Box<T>, Arc<T>);

/// Applies `op` to a single vector.
pub fn apply_vector<O: LinearOperator + ?Sized>(op: &O, x: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() != op.dim() {
        return Err(Error::Dimension {
            expected: op.dim(),
            found: x.len(),
        });
    }
    let mut y = DVector::zeros(x.len());
    op.apply_column(x.as_slice(), y.as_mut_slice())?;
    Ok(y)
}

/// Diagonal of `A` from `n` standard-basis queries.
pub fn exact_diagonal<O: LinearOperator + ?Sized>(op: &O) -> Result<Vec<f64>> {
    let n = op.dim();
    let mut e = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        e[i] = 1.0;
        op.apply_column(&e, &mut y)?;
        diag.push(y[i]);
        e[i] = 0.0;
    }
    Ok(diag)
}

/// `tr(A)` from `n` standard-basis queries.
pub fn exact_trace<O: LinearOperator + ?Sized>(op: &O) -> Result<f64> {
    Ok(exact_diagonal(op)?.iter().sum())
}

/// Materializes `A` column by column.
pub fn to_dense<O: LinearOperator + ?Sized>(op: &O) -> Result<DMatrix<f64>> {
    op.apply(&DMatrix::identity(op.dim(), op.dim()))
}

/// Largest value of `|u^T A v - v^T A u| / (|u| |v| |A|_est)` over `pairs`
/// random Gaussian probe pairs, where `|A|_est` is the largest `|A x| / |x|`
/// seen among the probes. Symmetric operators should stay below `1e-8`.
pub fn symmetry_probe<O: LinearOperator + ?Sized>(op: &O, pairs: usize, seed: u64) -> Result<f64> {
    let n = op.dim();
    let mut stream = rng::stream(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let u = DVector::from_column_slice(rng::gaussian_block(&mut stream, n, 1).as_slice());
        let v = DVector::from_column_slice(rng::gaussian_block(&mut stream, n, 1).as_slice());
        let au = apply_vector(op, &u)?;
        let av = apply_vector(op, &v)?;
        let (nu, nv) = (u.norm(), v.norm());
        let norm_est = (au.norm() / nu).max(av.norm() / nv);
        if norm_est == 0.0 {
            continue;
        }
        let gap = (u.dot(&av) - v.dot(&au)).abs();
        worst = worst.max(gap / (nu * nv * norm_est));
    }
    Ok(worst)
}

/// Wraps an operator and counts the query columns and rounds it serves.
pub struct QueryCounter<O> {
    inner: O,
    columns: AtomicUsize,
    rounds: AtomicUsize,
}

impl<O: LinearOperator> QueryCounter<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            columns: AtomicUsize::new(0),
            rounds: AtomicUsize::new(0),
        }
    }

    pub fn columns(&self) -> usize {
        self.columns.load(Ordering::Relaxed)
    }

    pub fn rounds(&self) -> usize {
        self.rounds.load(Ordering::Relaxed)
    }
}

impl<O: LinearOperator> LinearOperator for QueryCounter<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply_column(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.columns.fetch_add(1, Ordering::Relaxed);
        self.rounds.fetch_add(1, Ordering::Relaxed);
        self.inner.apply_column(x, y)
    }

    fn is_symmetric(&self) -> bool {
        self.inner.is_symmetric()
    }

    fn psd_claim(&self) -> PsdClaim {
        self.inner.psd_claim()
    }

    fn apply(&self, block: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.columns.fetch_add(block.ncols(), Ordering::Relaxed);
        self.rounds.fetch_add(1, Ordering::Relaxed);
        self.inner.apply(block)
    }
}
