//! Trace estimators over a [`LinearOperator`].
//!
//! Every estimator wraps the oracle in a [`QueryCounter`], so the `m` and
//! `adaptive_rounds` recorded in a [`TraceEstimate`] are what the oracle
//! actually served, not what was requested.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linop::{power_operator, to_dense, LinearOperator, QueryCounter};
use crate::rng;
use crate::sketch::{make_sketch_pack_with, LowRankFactors, Split};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Hutchinson,
    HutchPp,
    NaHutchPp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Hutchinson, Algorithm::HutchPp, Algorithm::NaHutchPp];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Hutchinson => "hutchinson",
            Algorithm::HutchPp => "hutch_pp",
            Algorithm::NaHutchPp => "na_hutch_pp",
        }
    }

    pub fn is_adaptive(self) -> bool {
        self == Algorithm::HutchPp
    }

    /// Runs this estimator with the default NA-Hutch++ split.
    pub fn estimate<O: LinearOperator + ?Sized>(
        self,
        a: &O,
        m: usize,
        dist: QueryDistribution,
        seed: u64,
    ) -> Result<TraceEstimate> {
        match self {
            Algorithm::Hutchinson => hutchinson(a, m, dist, seed),
            Algorithm::HutchPp => hutch_pp(a, m, dist, seed),
            Algorithm::NaHutchPp => na_hutch_pp(a, m, Split::default(), dist, seed),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "hutchinson" => Ok(Algorithm::Hutchinson),
            "hutch_pp" | "hutch++" => Ok(Algorithm::HutchPp),
            "na_hutch_pp" | "na-hutch++" => Ok(Algorithm::NaHutchPp),
            other => Err(Error::param(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Distribution of query vector entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueryDistribution {
    /// i.i.d. standard normal.
    #[default]
    Gaussian,
    /// i.i.d. +-1 with equal probability.
    Rademacher,
}

impl QueryDistribution {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryDistribution::Gaussian => "gaussian",
            QueryDistribution::Rademacher => "rademacher",
        }
    }

    pub fn block<R: Rng + ?Sized>(self, rng: &mut R, n: usize, cols: usize) -> DMatrix<f64> {
        match self {
            QueryDistribution::Gaussian => rng::gaussian_block(rng, n, cols),
            QueryDistribution::Rademacher => rng::rademacher_block(rng, n, cols),
        }
    }
}

impl FromStr for QueryDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gaussian" => Ok(QueryDistribution::Gaussian),
            "rademacher" => Ok(QueryDistribution::Rademacher),
            other => Err(Error::param(format!("unknown query distribution {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEstimate {
    pub value: f64,
    pub algorithm: Algorithm,
    /// Query columns the oracle served.
    pub m: usize,
    pub distribution: QueryDistribution,
    pub seed: u64,
    /// Oracle rounds: 1 for the non-adaptive estimators, 2 for Hutch++.
    pub adaptive_rounds: usize,
}

fn finish<O: LinearOperator + ?Sized>(
    value: f64,
    algorithm: Algorithm,
    counter: &QueryCounter<&O>,
    distribution: QueryDistribution,
    seed: u64,
) -> TraceEstimate {
    TraceEstimate {
        value,
        algorithm,
        m: counter.columns(),
        distribution,
        seed,
        adaptive_rounds: counter.rounds(),
    }
}

/// `sum_i x_i^T y_i` over matching columns.
fn column_dot_sum(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b).sum()
}

/// Hutchinson's estimator `(1/l) tr(Q^T A Q)`, one round of `l` queries.
pub fn hutchinson<O: LinearOperator + ?Sized>(
    a: &O,
    l: usize,
    dist: QueryDistribution,
    seed: u64,
) -> Result<TraceEstimate> {
    if l == 0 {
        return Err(Error::param("Hutchinson needs at least one query"));
    }
    let oracle = QueryCounter::new(a);
    let q = dist.block(&mut rng::stream(seed), a.dim(), l);
    let aq = oracle.apply(&q)?;
    let value = column_dot_sum(&q, &aq) / l as f64;
    Ok(finish(value, Algorithm::Hutchinson, &oracle, dist, seed))
}

/// Hutch++ with `floor(m/3)` sketch columns, `floor(m/3)` columns of `A Q`
/// and the remaining `m - 2 floor(m/3)` columns for the deflated Hutchinson
/// term.
///
/// Round one queries `A S`; round two queries `A [Q | (I - Q Q^T) G]` where
/// `Q` is an orthonormal basis of `A S`.
pub fn hutch_pp<O: LinearOperator + ?Sized>(
    a: &O,
    m: usize,
    dist: QueryDistribution,
    seed: u64,
) -> Result<TraceEstimate> {
    if m < 3 {
        return Err(Error::BudgetTooSmall { block: "S", m });
    }
    let n = a.dim();
    let k = m / 3;
    let g_cols = m - 2 * k;
    let oracle = QueryCounter::new(a);
    let mut stream = rng::stream(seed);
    let s = dist.block(&mut stream, n, k);
    let g = dist.block(&mut stream, n, g_cols);

    let a_s = oracle.apply(&s)?;
    let q = a_s.qr().q();
    let qc = q.ncols();

    let g_perp = &g - &q * (q.transpose() * &g);
    let mut second = DMatrix::zeros(n, qc + g_cols);
    second.columns_mut(0, qc).copy_from(&q);
    second.columns_mut(qc, g_cols).copy_from(&g_perp);
    let products = oracle.apply(&second)?;

    let low_rank = column_dot_sum(&q, &products.columns(0, qc).into_owned());
    let residual = column_dot_sum(&g_perp, &products.columns(qc, g_cols).into_owned()) / g_cols as f64;
    Ok(finish(low_rank + residual, Algorithm::HutchPp, &oracle, dist, seed))
}

/// NA-Hutch++: a single round on `[S | R | G]`, returning
/// `tr((S^T Z)^+ W^T Z) + (1/g) (tr(G^T A G) - tr(G^T Z (S^T Z)^+ W^T G))`
/// with `Z = A R` and `W = A S`.
///
/// The same `G` feeds both correction terms.
pub fn na_hutch_pp<O: LinearOperator + ?Sized>(
    a: &O,
    m: usize,
    split: Split,
    dist: QueryDistribution,
    seed: u64,
) -> Result<TraceEstimate> {
    let pack = make_sketch_pack_with(a.dim(), m, split, dist, seed)?;
    let oracle = QueryCounter::new(a);
    let products = oracle.apply(&pack.stacked())?;

    let (s, r, g) = (pack.s.ncols(), pack.r.ncols(), pack.g.ncols());
    let a_s = products.columns(0, s).into_owned();
    let a_r = products.columns(s, r).into_owned();
    let a_g = products.columns(s + r, g).into_owned();
    let factors = LowRankFactors::from_products(&pack.s, a_s, a_r);

    let hutchinson_term = column_dot_sum(&pack.g, &a_g);
    let correction = factors.quadratic_trace(&pack.g);
    let value = factors.trace() + (hutchinson_term - correction) / g as f64;
    Ok(finish(value, Algorithm::NaHutchPp, &oracle, dist, seed))
}

/// `E[lambda^p] = tr(K^p) / n` for `p = 1..=max_p`, each estimated with a
/// fresh budget of `m` queries on `K^p`. Moment `p` uses seed `seed + p`.
pub fn estimate_eigenvalue_moments<O: LinearOperator + ?Sized>(
    k: &O,
    max_p: u32,
    m: usize,
    algorithm: Algorithm,
    dist: QueryDistribution,
    seed: u64,
) -> Result<Vec<f64>> {
    if max_p == 0 {
        return Err(Error::param("max_p must be at least 1"));
    }
    let n = k.dim() as f64;
    (1..=max_p)
        .map(|p| {
            let kp = power_operator(k, p)?;
            let est = algorithm.estimate(&kp, m, dist, rng::trial_seed(seed, p as u64))?;
            Ok(est.value / n)
        })
        .collect()
}

/// Exact moments from the eigenvalues of the materialized operator.
pub fn exact_eigenvalue_moments<O: LinearOperator + ?Sized>(k: &O, max_p: u32) -> Result<Vec<f64>> {
    if !k.is_symmetric() {
        return Err(Error::param("eigenvalue moments need a symmetric operator"));
    }
    let eig = to_dense(k)?.symmetric_eigenvalues();
    let n = k.dim() as f64;
    Ok((1..=max_p as i32)
        .map(|p| eig.iter().map(|l| l.powi(p)).sum::<f64>() / n)
        .collect())
}

/// Multiplier on `k + ceil(ln(1/delta))` in [`query_budget_for`].
pub const BUDGET_CONSTANT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryBudget {
    pub m: usize,
    /// Rank of the low-rank part.
    pub k: usize,
    /// Hutchinson queries on the residual.
    pub l: usize,
}

// ceil that ignores floating-point noise just above an integer
fn ceil_tol(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Advisory budget for a `(1 +- epsilon)` estimate with failure probability
/// `delta`: `k = l = ceil(sqrt(ln(1/delta)) / epsilon)`,
/// `m = BUDGET_CONSTANT * (k + ceil(ln(1/delta)))`.
pub fn query_budget_for(epsilon: f64, delta: f64) -> Result<QueryBudget> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::param(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::param(format!("delta must lie in (0, 1/2), got {delta}")));
    }
    let log_inv = -delta.ln();
    let k = ceil_tol(log_inv.sqrt() / epsilon).max(1);
    let m = BUDGET_CONSTANT * (k + ceil_tol(log_inv));
    Ok(QueryBudget { m, k, l: k })
}
