use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rayon::ThreadPool;

use super::{check_rows, LinearOperator, PsdClaim};
use crate::error::Result;

/// Fans the columns of every submitted block out over a thread pool.
///
/// Each column still goes through the inner operator's `apply_column`, so
/// results are bit-identical to sequential application.
pub struct ColumnParallel<O> {
    inner: O,
    pool: Arc<ThreadPool>,
}

impl<O: LinearOperator> ColumnParallel<O> {
    pub fn new(inner: O, pool: Arc<ThreadPool>) -> Self {
        Self { inner, pool }
    }
}

impl<O: LinearOperator> LinearOperator for ColumnParallel<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply_column(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.inner.apply_column(x, y)
    }

    fn is_symmetric(&self) -> bool {
        self.inner.is_symmetric()
    }

    fn psd_claim(&self) -> PsdClaim {
        self.inner.psd_claim()
    }

    fn apply(&self, block: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        check_rows(n, block)?;
        let mut out = DMatrix::zeros(n, block.ncols());
        if n == 0 {
            return Ok(out);
        }
        let inner = &self.inner;
        self.pool.install(|| {
            block
                .as_slice()
                .par_chunks_exact(n)
                .zip(out.as_mut_slice().par_chunks_exact_mut(n))
                .with_max_len(1)
                .try_for_each(|(x, y)| inner.apply_column(x, y))
        })?;
        Ok(out)
    }
}
