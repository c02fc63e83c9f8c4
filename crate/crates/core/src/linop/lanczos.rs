//! Lanczos factorization and `f(A) v` oracles.
//!
//! `f(A) v ~= |v| V_k U f(Theta) U^T e_1` where `A V_k = V_k T_k + ...` and
//! `T_k = U Theta U^T`. The basis is fully reorthogonalized at every step.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, DVectorView, SymmetricEigen};

use super::{LinearOperator, PsdClaim};
use crate::error::{Error, Result};

/// Ritz values at or below this fraction of the largest one are rejected by
/// `log` and `inverse`.
pub const RITZ_FLOOR: f64 = 1e-12;

/// The recurrence stops once `beta_j <= BREAKDOWN_TOL * |A q_j|`.
pub const BREAKDOWN_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct LanczosFactorization {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// n x k, orthonormal columns.
    pub basis: DMatrix<f64>,
    pub start_norm: f64,
}

impl LanczosFactorization {
    pub fn steps(&self) -> usize {
        self.alpha.len()
    }

    pub fn tridiagonal(&self) -> DMatrix<f64> {
        let k = self.steps();
        let mut t = DMatrix::from_diagonal(&DVector::from_column_slice(&self.alpha));
        for (j, &b) in self.beta.iter().enumerate() {
            t[(j, j + 1)] = b;
            t[(j + 1, j)] = b;
        }
        debug_assert_eq!(t.nrows(), k);
        t
    }

    /// Eigenvalues of the tridiagonal matrix, ascending.
    pub fn ritz_values(&self) -> Vec<f64> {
        let mut theta: Vec<f64> = SymmetricEigen::new(self.tridiagonal()).eigenvalues.iter().copied().collect();
        theta.sort_by(f64::total_cmp);
        theta
    }

    /// `start_norm * basis * U f(Theta) U^T e_1`.
    pub fn apply_function(&self, f: &MatrixFunction) -> Result<DVector<f64>> {
        let eig = SymmetricEigen::new(self.tridiagonal());
        f.check_spectrum(eig.eigenvalues.as_slice())?;
        let u = &eig.eigenvectors;
        let weights = DVector::from_fn(self.steps(), |i, _| f.eval(eig.eigenvalues[i]) * u[(0, i)]);
        let coeffs = u * weights;
        Ok(&self.basis * coeffs * self.start_norm)
    }
}

/// Runs `steps` Lanczos iterations on `base` from `v`, stopping early on
/// breakdown (an invariant subspace was found, so truncation is exact).
pub fn lanczos_factorize<O: LinearOperator + ?Sized>(
    base: &O,
    v: &[f64],
    steps: usize,
) -> Result<LanczosFactorization> {
    let n = base.dim();
    if v.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: v.len(),
        });
    }
    if steps == 0 {
        return Err(Error::param("Lanczos needs at least one step"));
    }
    let start_norm = DVectorView::from_slice(v, n).norm();
    if start_norm == 0.0 {
        return Err(Error::param("Lanczos start vector is zero"));
    }

    let steps = steps.min(n);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta = Vec::with_capacity(steps.saturating_sub(1));
    basis.push(DVector::from_column_slice(v) / start_norm);
    let mut w = DVector::zeros(n);

    loop {
        let j = basis.len() - 1;
        base.apply_column(basis[j].as_slice(), w.as_mut_slice())?;
        let aq_norm = w.norm();

        // Two passes of classical Gram-Schmidt against the whole basis; the
        // coefficient on q_j is alpha_j.
        let mut a_j = 0.0;
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let h = q.dot(&w);
                w.axpy(-h, q, 1.0);
                if i == j {
                    a_j += h;
                }
            }
        }
        alpha.push(a_j);

        if basis.len() == steps {
            break;
        }
        let b = w.norm();
        if b <= BREAKDOWN_TOL * aq_norm {
            break;
        }
        beta.push(b);
        basis.push(&w / b);
    }

    let k = basis.len();
    Ok(LanczosFactorization {
        alpha,
        beta,
        basis: DMatrix::from_columns(&basis[..k]),
        start_norm,
    })
}

/// Scalar function applied to the spectrum.
#[derive(Clone)]
pub enum MatrixFunction {
    Exp,
    Log,
    Inverse,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for MatrixFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatrixFunction::Exp => "Exp",
            MatrixFunction::Log => "Log",
            MatrixFunction::Inverse => "Inverse",
            MatrixFunction::Custom(_) => "Custom",
        })
    }
}

impl MatrixFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            MatrixFunction::Exp => x.exp(),
            MatrixFunction::Log => x.ln(),
            MatrixFunction::Inverse => x.recip(),
            MatrixFunction::Custom(f) => f(x),
        }
    }

    fn needs_positive_spectrum(&self) -> bool {
        matches!(self, MatrixFunction::Log | MatrixFunction::Inverse)
    }

    fn check_spectrum(&self, ritz: &[f64]) -> Result<()> {
        if !self.needs_positive_spectrum() {
            return Ok(());
        }
        let top = ritz.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let floor = RITZ_FLOOR * top;
        match ritz.iter().copied().find(|&theta| theta <= floor || top <= 0.0) {
            Some(value) => Err(Error::SpectrumFloor { value, floor }),
            None => Ok(()),
        }
    }
}

/// `f(A)` as an oracle: each column is its own Lanczos run started from the
/// query vector.
#[derive(Debug, Clone)]
pub struct LanczosFunctionOperator<O> {
    base: O,
    function: MatrixFunction,
    steps: usize,
}

pub fn lanczos_function_operator<O: LinearOperator>(
    base: O,
    function: MatrixFunction,
    steps: usize,
) -> Result<LanczosFunctionOperator<O>> {
    if !base.is_symmetric() {
        return Err(Error::param("Lanczos requires a symmetric operator"));
    }
    if steps == 0 || steps > base.dim() {
        return Err(Error::param(format!(
            "Lanczos steps must lie in 1..={}, got {steps}",
            base.dim()
        )));
    }
    if function.needs_positive_spectrum() && base.psd_claim() != PsdClaim::Psd {
        return Err(Error::param(format!(
            "{function:?} of an operator requires a PSD claim on the base"
        )));
    }
    Ok(LanczosFunctionOperator { base, function, steps })
}

impl<O> LanczosFunctionOperator<O> {
    pub fn base(&self) -> &O {
        &self.base
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

impl<O: LinearOperator> LinearOperator for LanczosFunctionOperator<O> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply_column(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.iter().all(|&v| v == 0.0) {
            y.fill(0.0);
            return Ok(());
        }
        let fac = lanczos_factorize(&self.base, x, self.steps)?;
        y.copy_from_slice(fac.apply_function(&self.function)?.as_slice());
        Ok(())
    }

    fn psd_claim(&self) -> PsdClaim {
        match self.function {
            MatrixFunction::Exp => PsdClaim::Psd,
            MatrixFunction::Inverse => PsdClaim::Psd,
            _ => PsdClaim::Unknown,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{dense_operator, exact_trace, DiagonalOperator, ScaledIdentity};
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    #[test]
    fn one_step_on_identity() {
        let fac = lanczos_factorize(&ScaledIdentity::new(3, 1.0), &[1.0, 0.0, 0.0], 1).unwrap();
        assert_eq!(fac.alpha, vec![1.0]);
        assert!(fac.beta.is_empty());
        assert_eq!(fac.basis, DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]));
        assert_eq!(fac.start_norm, 1.0);
    }

    #[test]
    fn two_by_two_ritz_values_are_exact() {
        let s = 0.5f64.sqrt();
        let fac = lanczos_factorize(&DiagonalOperator::new(vec![1.0, 2.0]), &[s, s], 2).unwrap();
        let theta = fac.ritz_values();
        assert_relative_eq!(theta[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(theta[1], 2.0, epsilon = 1e-14);
        assert!(fac.beta.iter().all(|&b| b >= 0.0));
    }

    #[test]
    fn basis_is_orthonormal() {
        let a = DMatrix::from_fn(60, 60, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let op = dense_operator(a).unwrap();
        let v: Vec<f64> = (0..60).map(|i| (i as f64).cos()).collect();
        let fac = lanczos_factorize(&op, &v, 40).unwrap();
        let gram = fac.basis.transpose() * &fac.basis;
        let dev = (gram - DMatrix::identity(fac.steps(), fac.steps())).amax();
        assert!(dev <= 1e-8, "deviation {dev}");
    }

    #[test]
    fn breakdown_truncates() {
        // v lies in a two-dimensional invariant subspace
        let op = DiagonalOperator::new(vec![1.0, 1.0, 3.0, 3.0]);
        let fac = lanczos_factorize(&op, &[1.0, 1.0, 1.0, 1.0], 4).unwrap();
        assert_eq!(fac.steps(), 2);
        assert_eq!(fac.beta.len(), 1);
    }

    #[test]
    fn zero_start_vector_is_an_error() {
        let op = ScaledIdentity::new(3, 1.0);
        assert!(matches!(lanczos_factorize(&op, &[0.0; 3], 2), Err(Error::Parameter(_))));
    }

    #[test]
    fn exp_of_scaled_identity() {
        let op = lanczos_function_operator(ScaledIdentity::new(5, 0.7), MatrixFunction::Exp, 1).unwrap();
        let v = dvector![0.6, 0.0, 0.8, 0.0, 0.0];
        let y = crate::linop::apply_vector(&op, &v).unwrap();
        assert_relative_eq!(y, v * 0.7f64.exp(), epsilon = 1e-14);
    }

    #[test]
    fn inverse_of_small_diagonal() {
        let op = lanczos_function_operator(DiagonalOperator::new(vec![1.0, 2.0, 3.0]), MatrixFunction::Inverse, 3)
            .unwrap();
        let y = crate::linop::apply_vector(&op, &dvector![1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(y, dvector![1.0, 0.5, 1.0 / 3.0], epsilon = 1e-12);
    }

    #[test]
    fn log_trace_of_small_diagonal() {
        let op = lanczos_function_operator(DiagonalOperator::new(vec![1.0, 2.0, 3.0]), MatrixFunction::Log, 3)
            .unwrap();
        // Each basis vector is an eigenvector, so the one-step run is exact.
        assert_relative_eq!(exact_trace(&op).unwrap(), 6.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn inverse_rejects_singular_spectrum() {
        let op = lanczos_function_operator(DiagonalOperator::new(vec![0.0, 1.0, 2.0]), MatrixFunction::Inverse, 3)
            .unwrap();
        let err = crate::linop::apply_vector(&op, &dvector![1.0, 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::SpectrumFloor { .. }), "{err}");
    }

    #[test]
    fn log_requires_psd_claim() {
        let base = dense_operator(DMatrix::identity(3, 3)).unwrap();
        assert!(lanczos_function_operator(base.clone(), MatrixFunction::Log, 2).is_err());
        let base = base.with_psd_claim(PsdClaim::Psd);
        assert!(lanczos_function_operator(base, MatrixFunction::Log, 2).is_ok());
    }

    #[test]
    fn steps_beyond_dimension_rejected() {
        assert!(lanczos_function_operator(ScaledIdentity::new(3, 1.0), MatrixFunction::Exp, 4).is_err());
    }
}
