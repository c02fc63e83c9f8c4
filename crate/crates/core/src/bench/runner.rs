use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use super::dataset::{build_dataset, Dataset, DatasetSpec};
use crate::error::{Error, Result};
use crate::estimators::{Algorithm, QueryDistribution, TraceEstimate};
use crate::linop::{ColumnParallel, LinearOperator, PsdClaim};
use crate::rng;
use crate::sketch::Split;

/// Oracle wrapper that sleeps for a fixed time per query column.
pub struct SlowedOperator<O> {
    inner: O,
    per_column: Duration,
}

impl<O: LinearOperator> SlowedOperator<O> {
    pub fn new(inner: O, per_column: Duration) -> Self {
        Self { inner, per_column }
    }
}

impl<O: LinearOperator> LinearOperator for SlowedOperator<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply_column(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        thread::sleep(self.per_column);
        self.inner.apply_column(x, y)
    }

    fn is_symmetric(&self) -> bool {
        self.inner.is_symmetric()
    }

    fn psd_claim(&self) -> PsdClaim {
        self.inner.psd_claim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub algorithms: Vec<Algorithm>,
    pub m_values: Vec<usize>,
    pub epsilon: f64,
    pub trials: usize,
    pub repeats: usize,
    /// 1 runs sequentially; more fans every oracle round out over a pool.
    pub workers: usize,
    pub base_seed: u64,
    pub oracle_delay: Option<Duration>,
    pub distribution: QueryDistribution,
    pub split: Split,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSpec) -> Self {
        Self {
            dataset,
            algorithms: Algorithm::ALL.to_vec(),
            m_values: vec![50, 100, 150],
            epsilon: 0.01,
            trials: 100,
            repeats: 10,
            workers: 1,
            base_seed: 0,
            oracle_delay: None,
            distribution: QueryDistribution::Gaussian,
            split: Split::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.repeats == 0 {
            return Err(Error::param("trials and repeats must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::param("workers must be at least 1"));
        }
        if self.algorithms.is_empty() || self.m_values.is_empty() {
            return Err(Error::param("need at least one algorithm and one m"));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::param("epsilon must be positive"));
        }
        self.split.validate()?;
        for &m in &self.m_values {
            for &alg in &self.algorithms {
                let ok = match alg {
                    Algorithm::Hutchinson => m >= 1,
                    Algorithm::HutchPp => m >= 3,
                    Algorithm::NaHutchPp => self.split.columns(m).is_ok(),
                };
                if !ok {
                    return Err(Error::param(format!("m = {m} is too small for {alg}")));
                }
            }
        }
        Ok(())
    }

    pub fn total_trials(&self) -> usize {
        self.trials * self.repeats
    }
}

/// One estimator run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub dataset: String,
    pub algorithm: Algorithm,
    pub m: usize,
    pub epsilon: f64,
    pub estimate: f64,
    pub reference_trace: f64,
    pub failed: bool,
    /// Seconds.
    pub wall_time: f64,
    pub seed: u64,
    /// Runs over all repeats: repeat `r` owns indices `r * trials ..`.
    pub trial_index: u64,
}

/// An estimate fails when it falls outside `[(1 - eps) tr, (1 + eps) tr]`.
pub fn is_failure(estimate: f64, reference_trace: f64, epsilon: f64) -> bool {
    estimate < (1.0 - epsilon) * reference_trace || estimate > (1.0 + epsilon) * reference_trace
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailedCell {
    pub algorithm: Algorithm,
    pub m: usize,
    pub completed_trials: usize,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentResult {
    /// Ordered by algorithm, then m, then trial index.
    pub records: Vec<TrialRecord>,
    /// Cells aborted by a trial error; their completed records are kept.
    pub failed_cells: Vec<FailedCell>,
}

impl ExperimentResult {
    /// Failure count per repeat for one cell.
    pub fn failures_per_repeat(&self, algorithm: Algorithm, m: usize, trials: usize) -> Vec<usize> {
        let mut counts: Vec<usize> = Vec::new();
        for r in self.records.iter().filter(|r| r.algorithm == algorithm && r.m == m) {
            let repeat = r.trial_index as usize / trials;
            if counts.len() <= repeat {
                counts.resize(repeat + 1, 0);
            }
            counts[repeat] += usize::from(r.failed);
        }
        counts
    }

    pub fn cell_wall_time(&self, algorithm: Algorithm, m: usize) -> f64 {
        self.records
            .iter()
            .filter(|r| r.algorithm == algorithm && r.m == m)
            .map(|r| r.wall_time)
            .sum()
    }
}

/// Execution mode of a run.
#[derive(Clone)]
enum Schedule {
    Sequential,
    Parallel(Arc<rayon::ThreadPool>),
}

fn build_pool(workers: usize) -> Result<Arc<rayon::ThreadPool>> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .thread_name(|i| format!("tracekit-worker-{i}"))
        .build()
        .map(Arc::new)
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))
}

fn oracle_for(dataset: &Dataset, delay: Option<Duration>, schedule: &Schedule) -> Arc<dyn LinearOperator> {
    let base: Arc<dyn LinearOperator> = match delay {
        Some(d) => Arc::new(SlowedOperator::new(dataset.operator.clone(), d)),
        None => dataset.operator.clone(),
    };
    match schedule {
        Schedule::Sequential => base,
        Schedule::Parallel(pool) => Arc::new(ColumnParallel::new(base, pool.clone())),
    }
}

fn run_one(
    oracle: &dyn LinearOperator,
    algorithm: Algorithm,
    m: usize,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<TraceEstimate> {
    match algorithm {
        Algorithm::Hutchinson => crate::estimators::hutchinson(oracle, m, config.distribution, seed),
        Algorithm::HutchPp => crate::estimators::hutch_pp(oracle, m, config.distribution, seed),
        Algorithm::NaHutchPp => crate::estimators::na_hutch_pp(oracle, m, config.split, config.distribution, seed),
    }
}

fn run_with(dataset: &Dataset, config: &ExperimentConfig, schedule: &Schedule) -> Result<ExperimentResult> {
    config.validate()?;
    let oracle = oracle_for(dataset, config.oracle_delay, schedule);
    let mut result = ExperimentResult::default();
    for &algorithm in &config.algorithms {
        for &m in &config.m_values {
            for trial_index in 0..config.total_trials() as u64 {
                let seed = rng::trial_seed(config.base_seed, trial_index);
                let start = Instant::now();
                let outcome = run_one(oracle.as_ref(), algorithm, m, config, seed);
                let wall_time = start.elapsed().as_secs_f64();
                match outcome {
                    Ok(est) => result.records.push(TrialRecord {
                        dataset: dataset.id.clone(),
                        algorithm,
                        m,
                        epsilon: config.epsilon,
                        estimate: est.value,
                        reference_trace: dataset.reference_trace,
                        failed: is_failure(est.value, dataset.reference_trace, config.epsilon),
                        wall_time,
                        seed,
                        trial_index,
                    }),
                    Err(e) => {
                        result.failed_cells.push(FailedCell {
                            algorithm,
                            m,
                            completed_trials: trial_index as usize,
                            error: e.to_string(),
                        });
                        break;
                    }
                }
            }
        }
    }
    Ok(result)
}

/// Builds the dataset and runs every (algorithm, m) cell.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let dataset = build_dataset(&config.dataset)?;
    run_experiment_on(&dataset, config)
}

/// Runs every cell against an already built dataset. Trial `i` of a cell
/// uses seed `base_seed + i`; trials run in order, and with `workers > 1`
/// the columns of every oracle round are spread over a pool of that size.
pub fn run_experiment_on(dataset: &Dataset, config: &ExperimentConfig) -> Result<ExperimentResult> {
    let schedule = if config.workers > 1 {
        Schedule::Parallel(build_pool(config.workers)?)
    } else {
        Schedule::Sequential
    };
    run_with(dataset, config, &schedule)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellTiming {
    pub algorithm: Algorithm,
    pub m: usize,
    pub sequential_secs: f64,
    pub parallel_secs: f64,
    /// Sequential and parallel estimates agree bit for bit.
    pub identical_estimates: bool,
}

impl CellTiming {
    pub fn speedup(&self) -> f64 {
        self.sequential_secs / self.parallel_secs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub workers: usize,
    pub cells: Vec<CellTiming>,
    pub failed_cells: Vec<FailedCell>,
}

impl TimingReport {
    pub fn cell(&self, algorithm: Algorithm, m: usize) -> Option<&CellTiming> {
        self.cells.iter().find(|c| c.algorithm == algorithm && c.m == m)
    }
}

/// Runs every cell twice, once sequentially and once over `workers`
/// threads, and reports total wall-clock time per cell.
pub fn parallel_trial_runner(dataset: &Dataset, config: &ExperimentConfig, workers: usize) -> Result<TimingReport> {
    if workers == 0 {
        return Err(Error::param("workers must be at least 1"));
    }
    let sequential = run_with(dataset, config, &Schedule::Sequential)?;
    let parallel = run_with(dataset, config, &Schedule::Parallel(build_pool(workers)?))?;

    let mut cells = Vec::new();
    for &algorithm in &config.algorithms {
        for &m in &config.m_values {
            let pick = |r: &ExperimentResult| -> Vec<u64> {
                r.records
                    .iter()
                    .filter(|t| t.algorithm == algorithm && t.m == m)
                    .map(|t| t.estimate.to_bits())
                    .collect()
            };
            cells.push(CellTiming {
                algorithm,
                m,
                sequential_secs: sequential.cell_wall_time(algorithm, m),
                parallel_secs: parallel.cell_wall_time(algorithm, m),
                identical_estimates: pick(&sequential) == pick(&parallel),
            });
        }
    }
    let mut failed_cells = sequential.failed_cells;
    failed_cells.extend(parallel.failed_cells);
    Ok(TimingReport {
        workers,
        cells,
        failed_cells,
    })
}
