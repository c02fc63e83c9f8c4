//! Matrix-free stochastic trace estimation.
//!
//! The library only ever touches a matrix through the [`LinearOperator`]
//! trait, i.e. through products `A * Q` for blocks of query vectors `Q`.
//! On top of that oracle it provides Hutchinson's estimator, the adaptive
//! Hutch++ estimator and the non-adaptive NA-Hutch++ estimator, the Gaussian
//! sketch low-rank approximant NA-Hutch++ is built on, Lanczos-based
//! `f(A) v` oracles, hard-instance generators, and a benchmark harness.

pub mod bench;
pub mod error;
pub mod estimators;
pub mod hardness;
pub mod linop;
pub mod rng;
pub mod sketch;

pub use error::{Error, Result};
pub use estimators::{
    estimate_eigenvalue_moments, hutch_pp, hutchinson, na_hutch_pp, query_budget_for, Algorithm,
    QueryBudget, QueryDistribution, TraceEstimate,
};
pub use linop::{LinearOperator, PsdClaim};
pub use sketch::{LowRankFactors, SketchPack, Split};
