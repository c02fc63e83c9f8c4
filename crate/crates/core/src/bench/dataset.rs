use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linop::{
    dense_operator, exact_trace, lanczos_function_operator, power_operator, read_matrix_market, DiagonalOperator,
    LinearOperator, MatrixFunction, PsdClaim,
};
use crate::rng;

/// Lanczos steps used by the function-oracle datasets unless overridden.
pub const DEFAULT_LANCZOS_STEPS: usize = 40;

/// Points for a synthetic RBF covariance matrix `K + noise I`.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfKernel {
    pub n: usize,
    pub length_scale: f64,
    pub noise: f64,
    pub seed: u64,
}

impl RbfKernel {
    /// `n` points uniform in a square of side `sqrt(n) / 3`, squared
    /// exponential kernel, plus `noise` on the diagonal.
    pub fn matrix(&self) -> DMatrix<f64> {
        let side = (self.n as f64).sqrt() / 3.0;
        let mut stream = rng::stream(self.seed);
        let pts: Vec<(f64, f64)> = (0..self.n)
            .map(|_| (stream.random::<f64>() * side, stream.random::<f64>() * side))
            .collect();
        let two_l2 = 2.0 * self.length_scale * self.length_scale;
        DMatrix::from_fn(self.n, self.n, |i, j| {
            let (dx, dy) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
            let k = (-(dx * dx + dy * dy) / two_l2).exp();
            if i == j {
                k + self.noise
            } else {
                k
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InverseSource {
    MatrixMarket(PathBuf),
    Rbf(RbfKernel),
}

/// Which oracle to benchmark.
///
/// Textual forms (used by the CLI):
/// `synthetic:N`, `estrada:PATH[:STEPS]`, `triangles:PATH`,
/// `inverse:PATH[:STEPS]`, `inverse:rbf:N[:LENGTH[:NOISE[:SEED]]][@STEPS]`,
/// `raw:PATH`, `rbf:N[:LENGTH[:NOISE[:SEED]]]`.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    /// `diag(1, 1/4, ..., 1/n^2)`.
    Synthetic { n: usize },
    /// `exp(A)` of a graph adjacency matrix through Lanczos.
    Estrada { path: PathBuf, steps: usize },
    /// `A^3` of a graph adjacency matrix.
    Triangles { path: PathBuf },
    /// `A^{-1}` of a PSD matrix through Lanczos.
    Inverse { source: InverseSource, steps: usize },
    /// The matrix itself.
    Raw { path: PathBuf },
    /// A synthetic RBF covariance matrix itself.
    Kernel(RbfKernel),
}

impl FromStr for DatasetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::param(format!("dataset {s:?}: {why}"));
        let (kind, rest) = s.split_once(':').ok_or_else(|| bad("expected KIND:ARGS"))?;
        let num = |t: &str| t.parse::<usize>().map_err(|_| bad(&format!("{t:?} is not an integer")));
        // N[:LENGTH[:NOISE[:SEED]]]
        let rbf = |args: &str| -> Result<RbfKernel> {
            let parts: Vec<&str> = args.split(':').collect();
            let float = |i: usize, default: f64| -> Result<f64> {
                parts
                    .get(i)
                    .map_or(Ok(default), |t| t.parse().map_err(|_| bad(&format!("{t:?} is not a number"))))
            };
            Ok(RbfKernel {
                n: num(parts[0])?,
                length_scale: float(1, 1.0)?,
                noise: float(2, 0.1)?,
                seed: parts.get(3).map_or(Ok(0), |t| num(t).map(|v| v as u64))?,
            })
        };
        // PATH[:STEPS]
        let path_steps = |rest: &str| -> Result<(PathBuf, usize)> {
            match rest.rsplit_once(':') {
                Some((path, steps)) if steps.chars().all(|c| c.is_ascii_digit()) && !steps.is_empty() => {
                    Ok((PathBuf::from(path), num(steps)?))
                }
                _ => Ok((PathBuf::from(rest), DEFAULT_LANCZOS_STEPS)),
            }
        };
        match kind {
            "synthetic" => Ok(DatasetSpec::Synthetic { n: num(rest)? }),
            "estrada" => {
                let (path, steps) = path_steps(rest)?;
                Ok(DatasetSpec::Estrada { path, steps })
            }
            "triangles" => Ok(DatasetSpec::Triangles { path: rest.into() }),
            "raw" => Ok(DatasetSpec::Raw { path: rest.into() }),
            "rbf" => Ok(DatasetSpec::Kernel(rbf(rest)?)),
            "inverse" => {
                if let Some(kernel) = rest.strip_prefix("rbf:") {
                    let (kernel, steps) = match kernel.split_once('@') {
                        Some((k, st)) => (k, num(st)?),
                        None => (kernel, DEFAULT_LANCZOS_STEPS),
                    };
                    let rbf = rbf(kernel)?;
                    Ok(DatasetSpec::Inverse {
                        source: InverseSource::Rbf(rbf),
                        steps,
                    })
                } else {
                    let (path, steps) = path_steps(rest)?;
                    Ok(DatasetSpec::Inverse {
                        source: InverseSource::MatrixMarket(path),
                        steps,
                    })
                }
            }
            other => Err(bad(&format!("unknown dataset kind {other:?}"))),
        }
    }
}

impl fmt::Display for DatasetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSpec::Synthetic { n } => write!(f, "synthetic:{n}"),
            DatasetSpec::Estrada { path, steps } => write!(f, "estrada:{}:{steps}", path.display()),
            DatasetSpec::Triangles { path } => write!(f, "triangles:{}", path.display()),
            DatasetSpec::Inverse {
                source: InverseSource::MatrixMarket(path),
                steps,
            } => write!(f, "inverse:{}:{steps}", path.display()),
            DatasetSpec::Inverse {
                source: InverseSource::Rbf(k),
                steps,
            } => write!(f, "inverse:rbf:{}:{}:{}:{}@{steps}", k.n, k.length_scale, k.noise, k.seed),
            DatasetSpec::Raw { path } => write!(f, "raw:{}", path.display()),
            DatasetSpec::Kernel(k) => write!(f, "rbf:{}:{}:{}:{}", k.n, k.length_scale, k.noise, k.seed),
        }
    }
}

/// How a dataset's reference trace was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceMethod {
    /// Closed-form diagonal sum.
    ExactDiagonal,
    /// Sparse `diag(A^3)`.
    SparseCube,
    /// `n` standard-basis queries to the oracle itself, so Lanczos error is
    /// part of the oracle and not of the estimator.
    BasisQueries,
}

#[derive(Clone)]
pub struct Dataset {
    pub id: String,
    pub operator: Arc<dyn LinearOperator>,
    pub reference_trace: f64,
    pub reference_method: ReferenceMethod,
}

impl fmt::Debug for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dataset")
            .field("id", &self.id)
            .field("dim", &self.operator.dim())
            .field("reference_trace", &self.reference_trace)
            .field("reference_method", &self.reference_method)
            .finish()
    }
}

impl Dataset {
    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    /// Triangle count for a `triangles:` dataset.
    pub fn triangle_count(&self) -> f64 {
        self.reference_trace / 6.0
    }
}

/// Builds the oracle and reference trace for `spec`.
pub fn build_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    let id = spec.to_string();
    let wrap = |e: Error| Error::Dataset {
        dataset: id.clone(),
        source: Box::new(e),
    };
    build(spec, id.clone()).map_err(wrap)
}

fn build(spec: &DatasetSpec, id: String) -> Result<Dataset> {
    match spec {
        DatasetSpec::Synthetic { n } => {
            if *n == 0 {
                return Err(Error::param("synthetic dataset needs n >= 1"));
            }
            let op = DiagonalOperator::inverse_square_spectrum(*n);
            Ok(Dataset {
                id,
                reference_trace: op.trace(),
                operator: Arc::new(op),
                reference_method: ReferenceMethod::ExactDiagonal,
            })
        }
        DatasetSpec::Triangles { path } => {
            let adjacency = read_matrix_market(path)?;
            let reference_trace = adjacency.cube_diagonal().iter().sum();
            Ok(Dataset {
                id,
                operator: Arc::new(power_operator(adjacency, 3)?),
                reference_trace,
                reference_method: ReferenceMethod::SparseCube,
            })
        }
        DatasetSpec::Raw { path } => {
            let a = read_matrix_market(path)?;
            let reference_trace = (0..a.dim()).map(|i| a.get(i, i).unwrap_or(0.0)).sum();
            Ok(Dataset {
                id,
                operator: Arc::new(a),
                reference_trace,
                reference_method: ReferenceMethod::ExactDiagonal,
            })
        }
        DatasetSpec::Kernel(kernel) => {
            let matrix = kernel.matrix();
            let reference_trace = matrix.trace();
            Ok(Dataset {
                id,
                operator: Arc::new(dense_operator(matrix)?.with_psd_claim(PsdClaim::Psd)),
                reference_trace,
                reference_method: ReferenceMethod::ExactDiagonal,
            })
        }
        DatasetSpec::Estrada { path, steps } => {
            let adjacency = read_matrix_market(path)?;
            let steps = (*steps).min(adjacency.dim());
            with_basis_reference(id, lanczos_function_operator(adjacency, MatrixFunction::Exp, steps)?)
        }
        DatasetSpec::Inverse { source, steps } => match source {
            InverseSource::MatrixMarket(path) => {
                let a = read_matrix_market(path)?.with_psd_claim(PsdClaim::Psd);
                let steps = (*steps).min(a.dim());
                with_basis_reference(id, lanczos_function_operator(a, MatrixFunction::Inverse, steps)?)
            }
            InverseSource::Rbf(kernel) => {
                let a = dense_operator(kernel.matrix())?.with_psd_claim(PsdClaim::Psd);
                let steps = (*steps).min(a.dim());
                with_basis_reference(id, lanczos_function_operator(a, MatrixFunction::Inverse, steps)?)
            }
        },
    }
}

fn with_basis_reference<O: LinearOperator + 'static>(id: String, op: O) -> Result<Dataset> {
    let reference_trace = exact_trace(&op)?;
    Ok(Dataset {
        id,
        operator: Arc::new(op),
        reference_trace,
        reference_method: ReferenceMethod::BasisQueries,
    })
}
