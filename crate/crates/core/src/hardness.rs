//! Hard instances for trace estimation: Wigner matrices, the shifted PSD
//! Wigner family, and the spiked P/Q pair. Used to stress estimators and to
//! check construction-level statistics.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng;

/// Operator-norm constant in `I + (G + G^T) / (2 C sqrt(n))`.
pub const NORM_CONSTANT: f64 = 3.0;
/// Identity shift multiplier on `sqrt(ln(1/delta))` in the spiked pair.
pub const SHIFT_CONSTANT: f64 = 6.0;
/// Spike coefficient `C` on `ln^{3/2}(1/delta) g g^T / |g|^2`.
pub const SPIKE_CONSTANT: f64 = 32.0;

/// `W = G + G^T` with `G` i.i.d. standard normal.
#[derive(Debug, Clone)]
pub struct WignerSample {
    pub n: usize,
    pub matrix: DMatrix<f64>,
    pub seed: u64,
}

impl WignerSample {
    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }
}

fn wigner_from(stream: &mut rng::Stream, n: usize) -> DMatrix<f64> {
    let g = rng::gaussian_block(stream, n, n);
    &g + g.transpose()
}

pub fn sample_wigner(n: usize, seed: u64) -> Result<WignerSample> {
    if n == 0 {
        return Err(Error::param("Wigner dimension must be positive"));
    }
    Ok(WignerSample {
        n,
        matrix: wigner_from(&mut rng::stream(seed), n),
        seed,
    })
}

#[derive(Debug, Clone)]
pub struct ShiftedWigner {
    pub matrix: DMatrix<f64>,
    pub min_eigenvalue: f64,
    pub psd: bool,
}

/// `I + (G + G^T) / (2 C sqrt(n))` with `C = NORM_CONSTANT`, plus a direct
/// smallest-eigenvalue check.
pub fn sample_shifted_wigner_psd(n: usize, seed: u64) -> Result<ShiftedWigner> {
    let w = sample_wigner(n, seed)?;
    let scale = 1.0 / (2.0 * NORM_CONSTANT * (n as f64).sqrt());
    let matrix = DMatrix::identity(n, n) + w.matrix * scale;
    let min_eigenvalue = matrix.symmetric_eigenvalues().min();
    Ok(ShiftedWigner {
        matrix,
        min_eigenvalue,
        psd: min_eigenvalue >= 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpikeLabel {
    /// Wigner plus shift plus rank-one spike.
    P,
    /// Wigner plus shift.
    Q,
}

#[derive(Debug, Clone)]
pub struct SpikedInstance {
    pub label: SpikeLabel,
    pub matrix: DMatrix<f64>,
    /// `g / |g|`, present for label P.
    pub spike_direction: Option<DVector<f64>>,
    pub delta: f64,
    pub shift_used: f64,
    pub spike_coefficient: f64,
}

impl SpikedInstance {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// `n = ceil(ln(1/delta))`, ignoring floating-point noise above an integer.
pub fn spiked_dimension(delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::param(format!("delta must lie in (0, 1/2), got {delta}")));
    }
    Ok(((-delta.ln()) - 1e-9).ceil().max(1.0) as usize)
}

/// Label Q: `W + 6 sqrt(ln(1/delta)) I`. Label P adds
/// `32 ln^{3/2}(1/delta) g g^T / |g|^2`.
///
/// `W` is drawn first from the seed's stream and `g` after it, so P and Q
/// with the same seed share the Wigner draw.
pub fn sample_spiked_pair(delta: f64, seed: u64, label: SpikeLabel) -> Result<SpikedInstance> {
    let n = spiked_dimension(delta)?;
    let log_inv = -delta.ln();
    let mut stream = rng::stream(seed);
    let w = wigner_from(&mut stream, n);
    let g = DVector::from_column_slice(rng::gaussian_block(&mut stream, n, 1).as_slice());

    let shift = SHIFT_CONSTANT * log_inv.sqrt();
    let coefficient = SPIKE_CONSTANT * log_inv.powf(1.5);
    let mut matrix = w + DMatrix::identity(n, n) * shift;
    let spike_direction = match label {
        SpikeLabel::Q => None,
        SpikeLabel::P => {
            let u = g.normalize();
            matrix += &u * u.transpose() * coefficient;
            Some(u)
        }
    };
    Ok(SpikedInstance {
        label,
        matrix,
        spike_direction,
        delta,
        shift_used: shift,
        spike_coefficient: coefficient,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceLawReport {
    pub samples: usize,
    pub n: usize,
    pub mean: f64,
    /// `sqrt(4 n / samples)`, the standard error under the law.
    pub standard_error: f64,
    pub variance: f64,
    /// Sample variance over `4 n`.
    pub variance_ratio: f64,
    pub mean_ok: bool,
    pub variance_ok: bool,
}

impl TraceLawReport {
    pub fn passed(&self) -> bool {
        self.mean_ok && self.variance_ok
    }
}

/// Checks `tr(W) ~ N(0, 4n)`: the mean must lie within 4 standard errors
/// of 0 and the sample variance within `[0.85, 1.15] * 4n`.
pub fn trace_law_check(samples: &[WignerSample]) -> Result<TraceLawReport> {
    if samples.len() < 100 {
        return Err(Error::param(format!(
            "trace law check needs at least 100 samples, got {}",
            samples.len()
        )));
    }
    let n = samples[0].n;
    if samples.iter().any(|s| s.n != n) {
        return Err(Error::param("trace law samples must share one dimension"));
    }
    let k = samples.len() as f64;
    let traces: Vec<f64> = samples.iter().map(WignerSample::trace).collect();
    let mean = traces.iter().sum::<f64>() / k;
    let variance = traces.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let law_variance = 4.0 * n as f64;
    let standard_error = (law_variance / k).sqrt();
    let variance_ratio = variance / law_variance;
    Ok(TraceLawReport {
        samples: samples.len(),
        n,
        mean,
        standard_error,
        variance,
        variance_ratio,
        mean_ok: mean.abs() <= 4.0 * standard_error,
        variance_ok: (0.85..=1.15).contains(&variance_ratio),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationReport {
    pub n: usize,
    pub draws: usize,
    pub min_p_trace: f64,
    pub max_q_trace: f64,
}

impl SeparationReport {
    pub fn separated(&self) -> bool {
        self.min_p_trace > self.max_q_trace
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.min_p_trace + self.max_q_trace)
    }
}

/// Exact traces of `draws` P and `draws` Q instances with seeds
/// `base_seed + i`.
pub fn spiked_pair_separation(delta: f64, draws: usize, base_seed: u64) -> Result<SeparationReport> {
    if draws == 0 {
        return Err(Error::param("need at least one draw per label"));
    }
    let mut min_p = f64::INFINITY;
    let mut max_q = f64::NEG_INFINITY;
    for i in 0..draws as u64 {
        let seed = rng::trial_seed(base_seed, i);
        min_p = min_p.min(sample_spiked_pair(delta, seed, SpikeLabel::P)?.matrix.trace());
        max_q = max_q.max(sample_spiked_pair(delta, seed, SpikeLabel::Q)?.matrix.trace());
    }
    Ok(SeparationReport {
        n: spiked_dimension(delta)?,
        draws,
        min_p_trace: min_p,
        max_q_trace: max_q,
    })
}
