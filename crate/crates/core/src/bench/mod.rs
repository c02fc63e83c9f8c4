//! Benchmark harness: datasets, seeded trials, failure counts, timing and
//! CSV output.

mod dataset;
mod output;
mod runner;

pub use dataset::{build_dataset, Dataset, DatasetSpec, InverseSource, RbfKernel, ReferenceMethod, DEFAULT_LANCZOS_STEPS};
pub use output::{emit_csv, write_csv, CSV_HEADER};
pub use runner::{
    is_failure, parallel_trial_runner, run_experiment, run_experiment_on, CellTiming, ExperimentConfig,
    ExperimentResult, FailedCell, SlowedOperator, TimingReport, TrialRecord,
};
