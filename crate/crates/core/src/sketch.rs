//! Gaussian sketches and the non-adaptive low-rank approximant
//! `A~ = (A R) (S^T A R)^+ (A S)^T`.
//!
//! Nothing here forms an n x n matrix: `A~` is kept as its three factors and
//! its trace is `tr((S^T A R)^+ (A S)^T (A R))`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimators::QueryDistribution;
use crate::linop::{check_rows, LinearOperator, PsdClaim};
use crate::rng;

/// Fractions of the query budget given to the S, R and G blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for Split {
    fn default() -> Self {
        Self {
            c1: 0.25,
            c2: 0.5,
            c3: 0.25,
        }
    }
}

impl Split {
    pub fn new(c1: f64, c2: f64, c3: f64) -> Result<Self> {
        let split = Self { c1, c2, c3 };
        split.validate()?;
        Ok(split)
    }

    pub fn validate(&self) -> Result<()> {
        let Split { c1, c2, c3 } = *self;
        if !(c1 > 0.0 && c2 > 0.0 && c3 > 0.0) {
            return Err(Error::param(format!("split fractions must be positive, got {self:?}")));
        }
        if c1 >= c2 {
            return Err(Error::param(format!("split needs c1 < c2, got {self:?}")));
        }
        if (c1 + c2 + c3 - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!("split fractions must sum to 1, got {self:?}")));
        }
        Ok(())
    }

    /// Column counts `(s, r, g)`: `s` and `r` rounded to nearest, `g` takes
    /// the remainder so the three always add up to `m`.
    pub fn columns(&self, m: usize) -> Result<(usize, usize, usize)> {
        self.validate()?;
        let s = (self.c1 * m as f64).round() as usize;
        let r = (self.c2 * m as f64).round() as usize;
        let g = m.saturating_sub(s + r);
        for (block, cols) in [("S", s), ("R", r), ("G", g)] {
            if cols == 0 {
                return Err(Error::BudgetTooSmall { block, m });
            }
        }
        if s + r + g != m {
            return Err(Error::BudgetTooSmall { block: "G", m });
        }
        Ok((s, r, g))
    }
}

/// The three non-adaptive query blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchPack {
    pub s: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub split: Split,
    pub m: usize,
    pub seed: u64,
}

impl SketchPack {
    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    /// `[S | R | G]`, the single block NA-Hutch++ submits.
    pub fn stacked(&self) -> DMatrix<f64> {
        let n = self.dim();
        let (s, r, g) = (self.s.ncols(), self.r.ncols(), self.g.ncols());
        let mut all = DMatrix::zeros(n, s + r + g);
        all.columns_mut(0, s).copy_from(&self.s);
        all.columns_mut(s, r).copy_from(&self.r);
        all.columns_mut(s + r, g).copy_from(&self.g);
        all
    }
}

/// Gaussian sketch pack.
pub fn make_sketch_pack(n: usize, m: usize, split: Split, seed: u64) -> Result<SketchPack> {
    make_sketch_pack_with(n, m, split, QueryDistribution::Gaussian, seed)
}

/// Draws S, R, G (in that order) from the stream for `seed`.
pub fn make_sketch_pack_with(
    n: usize,
    m: usize,
    split: Split,
    dist: QueryDistribution,
    seed: u64,
) -> Result<SketchPack> {
    if n == 0 {
        return Err(Error::param("sketch dimension must be positive"));
    }
    let (s, r, g) = split.columns(m)?;
    let mut stream = rng::stream(seed);
    Ok(SketchPack {
        s: dist.block(&mut stream, n, s),
        r: dist.block(&mut stream, n, r),
        g: dist.block(&mut stream, n, g),
        split,
        m,
        seed,
    })
}

/// Moore-Penrose pseudoinverse via SVD. Singular values at or below
/// `max(p, q) * eps * sigma_max` are treated as zero. Returns the q x p
/// pseudoinverse and the number of retained singular values.
pub fn pseudoinverse(m: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let (p, q) = m.shape();
    if p == 0 || q == 0 || m.iter().all(|&x| x == 0.0) {
        return (DMatrix::zeros(q, p), 0);
    }
    let svd = m.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let tol = p.max(q) as f64 * f64::EPSILON * sigma_max;
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");

    let mut pinv = DMatrix::zeros(q, p);
    let mut rank = 0;
    for (i, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma > tol {
            rank += 1;
            // V e_i e_i^T U^T / sigma_i
            pinv.ger(1.0 / sigma, &v_t.row(i).transpose(), &u.column(i), 1.0);
        }
    }
    (pinv, rank)
}

/// Factored form of `A~ = left core_pinv right^T`.
#[derive(Debug, Clone)]
pub struct LowRankFactors {
    /// `A R`, n x r.
    pub left: DMatrix<f64>,
    /// `S^T A R`, s x r.
    pub core: DMatrix<f64>,
    /// `A S`, n x s.
    pub right: DMatrix<f64>,
    /// `(S^T A R)^+`, r x s.
    pub core_pinv: DMatrix<f64>,
    pub effective_rank: usize,
}

impl LowRankFactors {
    /// Builds the factors from the sketch and already computed products
    /// `A S` and `A R`.
    pub fn from_products(s: &DMatrix<f64>, a_s: DMatrix<f64>, a_r: DMatrix<f64>) -> Self {
        let core = s.transpose() * &a_r;
        let (core_pinv, effective_rank) = pseudoinverse(&core);
        Self {
            left: a_r,
            core,
            right: a_s,
            core_pinv,
            effective_rank,
        }
    }

    pub fn dim(&self) -> usize {
        self.left.nrows()
    }

    /// `tr(A~) = tr(core_pinv (right^T left))`.
    pub fn trace(&self) -> f64 {
        (&self.core_pinv * (self.right.transpose() * &self.left)).trace()
    }

    /// `A~ X` for an n x b block.
    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        &self.left * (&self.core_pinv * (self.right.transpose() * x))
    }

    /// `tr(X^T A~ X)` without forming `A~`.
    pub fn quadratic_trace(&self, x: &DMatrix<f64>) -> f64 {
        let xl = x.transpose() * &self.left;
        let rx = self.right.transpose() * x;
        (xl * &self.core_pinv * rx).trace()
    }

    /// The n x n matrix `A~`. For tests and small problems only.
    pub fn to_dense(&self) -> DMatrix<f64> {
        &self.left * &self.core_pinv * self.right.transpose()
    }
}

/// `A~` for `A` and a sketch pack; issues exactly `r + s` queries in one
/// round.
pub fn low_rank_approximant<O: LinearOperator + ?Sized>(a: &O, pack: &SketchPack) -> Result<LowRankFactors> {
    if pack.dim() != a.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            found: pack.dim(),
        });
    }
    let s = pack.s.ncols();
    let r = pack.r.ncols();
    let mut block = DMatrix::zeros(a.dim(), s + r);
    block.columns_mut(0, s).copy_from(&pack.s);
    block.columns_mut(s, r).copy_from(&pack.r);
    let products = a.apply(&block)?;
    let a_s = products.columns(0, s).into_owned();
    let a_r = products.columns(s, r).into_owned();
    Ok(LowRankFactors::from_products(&pack.s, a_s, a_r))
}

/// `Delta = A - A~` as an oracle: one query to `A` per applied column.
pub struct ResidualOperator<O> {
    base: O,
    factors: LowRankFactors,
}

pub fn residual_operator<O: LinearOperator>(base: O, factors: LowRankFactors) -> Result<ResidualOperator<O>> {
    if factors.dim() != base.dim() {
        return Err(Error::Dimension {
            expected: base.dim(),
            found: factors.dim(),
        });
    }
    Ok(ResidualOperator { base, factors })
}

impl<O> ResidualOperator<O> {
    pub fn factors(&self) -> &LowRankFactors {
        &self.factors
    }
}

impl<O: LinearOperator> LinearOperator for ResidualOperator<O> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply_column(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.base.apply_column(x, y)?;
        let x = DMatrix::from_column_slice(x.len(), 1, x);
        let approx = self.factors.apply(&x);
        for (yi, ai) in y.iter_mut().zip(approx.iter()) {
            *yi -= ai;
        }
        Ok(())
    }

    // A~ is an oblique projection of A and need not be symmetric.
    fn is_symmetric(&self) -> bool {
        false
    }

    fn psd_claim(&self) -> PsdClaim {
        PsdClaim::Unknown
    }

    fn apply(&self, block: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_rows(self.dim(), block)?;
        Ok(self.base.apply(block)? - self.factors.apply(block))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{dense_operator, exact_trace, QueryCounter, ScaledIdentity};
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, DVector};

    #[test]
    fn default_split_on_eight_queries() {
        let pack = make_sketch_pack(10, 8, Split::default(), 7).unwrap();
        assert_eq!((pack.s.ncols(), pack.r.ncols(), pack.g.ncols()), (2, 4, 2));
        assert_eq!(pack.stacked().ncols(), 8);
    }

    #[test]
    fn tiny_budget_is_rejected() {
        let err = make_sketch_pack(10, 2, Split::default(), 7).unwrap_err();
        assert!(matches!(err, Error::BudgetTooSmall { m: 2, .. }), "{err}");
    }

    #[test]
    fn seeded_packs_are_identical() {
        let a = make_sketch_pack(10, 12, Split::default(), 3).unwrap();
        let b = make_sketch_pack(10, 12, Split::default(), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_validation() {
        assert!(Split::new(0.5, 0.25, 0.25).is_err());
        assert!(Split::new(0.2, 0.5, 0.2).is_err());
        assert!(Split::new(0.2, 0.5, 0.3).is_ok());
    }

    #[test]
    fn pinv_of_singular_diagonal() {
        let (p, rank) = pseudoinverse(&dmatrix![2.0, 0.0; 0.0, 0.0]);
        assert_eq!(rank, 1);
        assert_relative_eq!(p, dmatrix![0.5, 0.0; 0.0, 0.0], epsilon = 1e-15);
    }

    #[test]
    fn pinv_of_identity() {
        let (p, rank) = pseudoinverse(&DMatrix::identity(3, 3));
        assert_eq!(rank, 3);
        assert_relative_eq!(p, DMatrix::identity(3, 3), epsilon = 1e-15);
    }

    #[test]
    fn pinv_of_zero() {
        let (p, rank) = pseudoinverse(&DMatrix::zeros(2, 4));
        assert_eq!(rank, 0);
        assert_eq!(p.shape(), (4, 2));
        assert!(p.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn penrose_identities_on_random_tall_matrix() {
        let m = rng::gaussian_block(&mut rng::stream(11), 5, 3);
        let (p, rank) = pseudoinverse(&m);
        assert_eq!(rank, 3);
        let mpm = &m * &p * &m;
        assert!((&mpm - &m).norm() <= 1e-10 * m.norm());
        let pmp = &p * &m * &p;
        assert!((&pmp - &p).norm() <= 1e-10 * p.norm());
    }

    fn rank_one(n: usize, seed: u64) -> (DMatrix<f64>, f64) {
        let v = rng::gaussian_block(&mut rng::stream(seed), n, 1);
        let v = DVector::from_column_slice(v.as_slice()).normalize();
        (&v * v.transpose(), 1.0)
    }

    #[test]
    fn rank_one_is_recovered() {
        let (a, _) = rank_one(50, 5);
        let op = dense_operator(a.clone()).unwrap();
        let counted = QueryCounter::new(&op);
        let pack = make_sketch_pack(50, 12, Split::default(), 9).unwrap();
        let f = low_rank_approximant(&counted, &pack).unwrap();
        assert_eq!(counted.columns(), pack.s.ncols() + pack.r.ncols());
        assert_eq!(counted.rounds(), 1);
        assert!((&a - f.to_dense()).norm() <= 1e-8 * a.norm());
        assert_eq!(f.effective_rank, 1);

        let delta = residual_operator(&op, f).unwrap();
        let v = rng::gaussian_block(&mut rng::stream(1), 50, 4);
        let dv = delta.apply(&v).unwrap();
        assert!(dv.norm() <= 1e-8 * v.norm());
    }

    #[test]
    fn zero_matrix_has_zero_approximant() {
        let op = dense_operator(DMatrix::zeros(20, 20)).unwrap();
        let pack = make_sketch_pack(20, 12, Split::default(), 1).unwrap();
        let f = low_rank_approximant(&op, &pack).unwrap();
        assert_eq!(f.trace(), 0.0);
        assert_eq!(f.effective_rank, 0);
    }

    #[test]
    fn trace_split_for_identity() {
        let n = 30;
        let op = ScaledIdentity::new(n, 1.0);
        let pack = make_sketch_pack(n, 12, Split::default(), 4).unwrap();
        let f = low_rank_approximant(&op, &pack).unwrap();
        let tr_approx = f.trace();
        let delta = residual_operator(&op, f).unwrap();
        assert_relative_eq!(tr_approx + exact_trace(&delta).unwrap(), n as f64, epsilon = 1e-8);
    }

    #[test]
    fn quadratic_trace_matches_dense() {
        let a = DMatrix::from_fn(25, 25, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let op = dense_operator(a).unwrap();
        let pack = make_sketch_pack(25, 12, Split::default(), 2).unwrap();
        let f = low_rank_approximant(&op, &pack).unwrap();
        let dense = f.to_dense();
        let g = &pack.g;
        let direct = (g.transpose() * dense * g).trace();
        assert_relative_eq!(f.quadratic_trace(g), direct, max_relative = 1e-10);
        assert_relative_eq!(f.trace(), f.to_dense().trace(), max_relative = 1e-10);
    }

    #[test]
    fn dimension_mismatch() {
        let op = ScaledIdentity::new(5, 1.0);
        let pack = make_sketch_pack(6, 12, Split::default(), 2).unwrap();
        assert!(matches!(low_rank_approximant(&op, &pack), Err(Error::Dimension { .. })));
    }
}
