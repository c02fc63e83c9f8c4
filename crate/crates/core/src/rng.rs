//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from a [`ChaCha8Rng`] built with
//! `seed_from_u64`. Benchmark trial `i` of a run with base seed `b` uses seed
//! `b + i` (wrapping); `seed_from_u64` expands neighbouring seeds into
//! unrelated ChaCha keys, so trials never share a stream and the stream a
//! trial sees does not depend on which worker runs it.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn trial_seed(base_seed: u64, trial_index: u64) -> u64 {
    base_seed.wrapping_add(trial_index)
}

/// n x cols block of i.i.d. standard normals, filled column by column.
pub fn gaussian_block<R: Rng + ?Sized>(rng: &mut R, n: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, cols, |_, _| rng.sample(StandardNormal))
}

/// n x cols block of i.i.d. equiprobable +-1 entries.
pub fn rademacher_block<R: Rng + ?Sized>(rng: &mut R, n: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, cols, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 })
}
