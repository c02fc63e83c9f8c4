//! Independent oracles shared by the integration suites. Nothing here calls
//! into the estimators; references come from dense linear algebra or brute
//! force.
#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use tracekit::{LinearOperator, PsdClaim};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// A generator unrelated to the library's own stream so fixtures do not
/// share randomness with the estimators they check.
pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed ^ 0x5eed_f00d_d00d_cafe)
}

pub fn gaussian_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_vector(rng: &mut ChaCha20Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

pub fn random_orthogonal(rng: &mut ChaCha20Rng, n: usize, k: usize) -> DMatrix<f64> {
    gaussian_matrix(rng, n, k).qr().q()
}

pub fn symmetrize(a: DMatrix<f64>) -> DMatrix<f64> {
    (&a + a.transpose()) * 0.5
}

/// `Q diag(eigs) Q^T` with a Haar-random `Q`.
pub fn with_spectrum(rng: &mut ChaCha20Rng, eigs: &[f64]) -> DMatrix<f64> {
    let n = eigs.len();
    let q = random_orthogonal(rng, n, n);
    symmetrize(&q * DMatrix::from_diagonal(&DVector::from_column_slice(eigs)) * q.transpose())
}

/// `B B^T` with `B` an `n x rank` Gaussian matrix.
pub fn low_rank_psd(rng: &mut ChaCha20Rng, n: usize, rank: usize) -> DMatrix<f64> {
    let b = gaussian_matrix(rng, n, rank);
    symmetrize(&b * b.transpose())
}

pub fn dense_trace(a: &DMatrix<f64>) -> f64 {
    a.diagonal().sum()
}

/// `f(A) v` from a dense symmetric eigendecomposition.
pub fn dense_function_apply(a: &DMatrix<f64>, f: impl Fn(f64) -> f64, v: &DVector<f64>) -> DVector<f64> {
    let eig = a.clone().symmetric_eigen();
    let fd = eig.eigenvalues.map(f);
    &eig.eigenvectors * DMatrix::from_diagonal(&fd) * (eig.eigenvectors.transpose() * v)
}

/// Frobenius norm of `A - A_k` from the singular values of `A`.
pub fn tail_frobenius(a: &DMatrix<f64>, k: usize) -> f64 {
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s.iter().skip(k).map(|x| x * x).sum::<f64>().sqrt()
}

pub fn inverse_square_diagonal(n: usize) -> Vec<f64> {
    (1..=n).map(|i| 1.0 / (i as f64 * i as f64)).collect()
}

/// Reads a pattern Matrix Market file with a hand-rolled parser and counts
/// triangles by enumerating every vertex triple.
pub fn brute_force_triangles(path: &std::path::Path) -> (usize, u64) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('%'));
    let dims: Vec<usize> = lines
        .next()
        .unwrap()
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    let n = dims[0];
    let mut adj = vec![vec![false; n]; n];
    for l in lines {
        let ij: Vec<usize> = l.split_whitespace().map(|t| t.parse().unwrap()).collect();
        let (i, j) = (ij[0] - 1, ij[1] - 1);
        adj[i][j] = true;
        adj[j][i] = true;
    }
    let mut count = 0;
    for i in 0..n {
        for j in i + 1..n {
            if !adj[i][j] {
                continue;
            }
            count += (j + 1..n).filter(|&k| adj[i][k] && adj[j][k]).count() as u64;
        }
    }
    (n, count)
}

/// One oracle call as seen by [`RecordingOperator`].
#[derive(Debug, Clone)]
pub struct Round {
    pub queries: DMatrix<f64>,
    /// Number of responses handed back to the caller before this round was submitted.
    pub responses_before: usize,
}

/// Dense oracle that logs every submitted block in order. Responses are only
/// released when a whole block has been received, so a caller that reads any
/// response before submitting a later query shows up as an extra round.
pub struct RecordingOperator {
    pub matrix: DMatrix<f64>,
    rounds: Mutex<Vec<Round>>,
    responses: Mutex<usize>,
}

impl RecordingOperator {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Self {
            matrix,
            rounds: Mutex::new(Vec::new()),
            responses: Mutex::new(0),
        }
    }

    pub fn rounds(&self) -> Vec<Round> {
        self.rounds.lock().unwrap().clone()
    }

    pub fn total_queries(&self) -> usize {
        self.rounds().iter().map(|r| r.queries.ncols()).sum()
    }
}

impl LinearOperator for RecordingOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply_column(&self, x: &[f64], y: &mut [f64]) -> tracekit::Result<()> {
        let block = DMatrix::from_column_slice(x.len(), 1, x);
        let out = self.apply(&block)?;
        y.copy_from_slice(out.as_slice());
        Ok(())
    }

    fn psd_claim(&self) -> PsdClaim {
        PsdClaim::Unknown
    }

    fn apply(&self, block: &DMatrix<f64>) -> tracekit::Result<DMatrix<f64>> {
        let mut responses = self.responses.lock().unwrap();
        self.rounds.lock().unwrap().push(Round {
            queries: block.clone(),
            responses_before: *responses,
        });
        *responses += block.ncols();
        Ok(&self.matrix * block)
    }
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}
