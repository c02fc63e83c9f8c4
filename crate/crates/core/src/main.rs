use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tracekit::bench::{
    build_dataset, emit_csv, parallel_trial_runner, run_experiment_on, DatasetSpec, ExperimentConfig, ReferenceMethod,
};
use tracekit::estimators::{exact_eigenvalue_moments, QueryDistribution};
use tracekit::hardness::{sample_wigner, spiked_pair_separation, spiked_dimension, trace_law_check};
use tracekit::sketch::Split;
use tracekit::{estimate_eigenvalue_moments, Algorithm, Error};

const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "tracekit", version, about = "Matrix-free stochastic trace estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded trials for every (algorithm, m) cell and write CSV.
    Bench(BenchArgs),
    /// Print a single trace estimate.
    Trace(TraceArgs),
    /// Estimate eigenvalue moments tr(K^p)/n for p = 1..max_p.
    Moments(MomentsArgs),
    /// Statistical checks on the hard-instance generators.
    Hardness(HardnessArgs),
}

#[derive(Args)]
struct QueryArgs {
    /// Query vector distribution.
    #[arg(long, default_value = "gaussian", value_parser = parse_dist)]
    distribution: QueryDistribution,
    /// NA-Hutch++ split c1,c2,c3.
    #[arg(long, default_value = "0.25,0.5,0.25", value_parser = parse_split)]
    split: Split,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_parser = parse_dataset)]
    dataset: DatasetSpec,
    #[arg(long, value_delimiter = ',', default_value = "hutchinson,hutch_pp,na_hutch_pp", value_parser = parse_algo)]
    algos: Vec<Algorithm>,
    #[arg(long, value_delimiter = ',', default_value = "50,100,150")]
    m: Vec<usize>,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    /// Worker threads for oracle rounds; capped by TRACEKIT_THREADS.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Leave the wall_time column out of the CSV.
    #[arg(long)]
    no_timing: bool,
    /// Sleep this many milliseconds per oracle column.
    #[arg(long)]
    oracle_delay_ms: Option<f64>,
    /// Also run every cell sequentially and print a timing comparison.
    #[arg(long)]
    compare_sequential: bool,
    #[command(flatten)]
    query: QueryArgs,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long, value_parser = parse_dataset)]
    dataset: DatasetSpec,
    #[arg(long, default_value = "na_hutch_pp", value_parser = parse_algo)]
    algo: Algorithm,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    query: QueryArgs,
}

#[derive(Args)]
struct MomentsArgs {
    #[arg(long, value_parser = parse_dataset)]
    dataset: DatasetSpec,
    #[arg(long)]
    max_p: u32,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value = "na_hutch_pp", value_parser = parse_algo)]
    algo: Algorithm,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also print exact moments from a dense eigendecomposition.
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value = "gaussian", value_parser = parse_dist)]
    distribution: QueryDistribution,
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    TraceLaw,
    SpikedPair,
}

#[derive(Args)]
struct HardnessArgs {
    #[arg(long, value_enum)]
    check: Check,
    /// Failure probability; spiked pairs use n = ceil(ln(1/delta)).
    #[arg(long, default_value_t = (-16.0f64).exp())]
    delta: f64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Wigner dimension for the trace-law check.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_dataset(s: &str) -> Result<DatasetSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_algo(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_dist(s: &str) -> Result<QueryDistribution, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_split(s: &str) -> Result<Split, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [c1, c2, c3] => Split::new(c1, c2, c3).map_err(|e| e.to_string()),
        _ => Err("split needs three comma-separated fractions".into()),
    }
}

/// Runtime failures are exit 1; bad input (including unreadable datasets) is exit 2.
enum Failure {
    Config(Error),
    Run(String),
}

/// Bad parameters reaching an estimator are configuration errors; anything
/// else raised while estimating is a failed run.
fn estimation_failure(e: Error) -> Failure {
    match e {
        Error::Parameter(_) | Error::BudgetTooSmall { .. } => Failure::Config(e),
        other => Failure::Run(other.to_string()),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e)
    }
}

fn worker_cap(requested: usize) -> usize {
    match std::env::var("TRACEKIT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        Some(cap) if cap >= 1 => requested.min(cap),
        _ => requested,
    }
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let workers = worker_cap(args.workers);
    let config = ExperimentConfig {
        dataset: args.dataset,
        algorithms: args.algos,
        m_values: args.m,
        epsilon: args.epsilon,
        trials: args.trials,
        repeats: args.repeats,
        workers,
        base_seed: args.seed,
        oracle_delay: args.oracle_delay_ms.map(|ms| Duration::from_secs_f64(ms / 1000.0)),
        distribution: args.query.distribution,
        split: args.query.split,
    };
    config.validate()?;
    let dataset = build_dataset(&config.dataset)?;
    eprintln!(
        "dataset {} (n = {}, reference trace {} via {:?})",
        dataset.id,
        dataset.dim(),
        dataset.reference_trace,
        dataset.reference_method
    );

    let result = run_experiment_on(&dataset, &config)?;
    if !result.records.is_empty() {
        emit_csv(&result.records, &args.out, !args.no_timing)?;
    }

    println!("algorithm\tm\tmean_failures\tstd_failures\twall_time_s");
    for &alg in &config.algorithms {
        for &m in &config.m_values {
            let counts = result.failures_per_repeat(alg, m, config.trials);
            let (mean, std) = mean_std(&counts);
            println!("{alg}\t{m}\t{mean:.2}\t{std:.2}\t{:.4}", result.cell_wall_time(alg, m));
        }
    }

    let mut failed = result.failed_cells.clone();
    if args.compare_sequential {
        let report = parallel_trial_runner(&dataset, &config, workers.max(1))?;
        println!("algorithm\tm\tsequential_s\tparallel_s\tspeedup\tidentical");
        for c in &report.cells {
            println!(
                "{}\t{}\t{:.4}\t{:.4}\t{:.2}\t{}",
                c.algorithm,
                c.m,
                c.sequential_secs,
                c.parallel_secs,
                c.speedup(),
                c.identical_estimates
            );
        }
        failed.extend(report.failed_cells);
    }

    if failed.is_empty() {
        Ok(())
    } else {
        let lines: Vec<String> = failed
            .iter()
            .map(|c| format!("{} m={} after {} trials: {}", c.algorithm, c.m, c.completed_trials, c.error))
            .collect();
        Err(Failure::Run(lines.join("\n")))
    }
}

fn mean_std(counts: &[usize]) -> (f64, f64) {
    if counts.is_empty() {
        return (0.0, 0.0);
    }
    let k = counts.len() as f64;
    let mean = counts.iter().sum::<usize>() as f64 / k;
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / k;
    (mean, var.sqrt())
}

fn trace(args: TraceArgs) -> Result<(), Failure> {
    let dataset = build_dataset(&args.dataset)?;
    let est = match args.algo {
        Algorithm::NaHutchPp => {
            tracekit::na_hutch_pp(dataset.operator.as_ref(), args.m, args.query.split, args.query.distribution, args.seed)
        }
        other => other.estimate(dataset.operator.as_ref(), args.m, args.query.distribution, args.seed),
    }
    .map_err(estimation_failure)?;
    println!("{}", est.value);
    eprintln!(
        "{} m={} rounds={} seed={} reference={}{}",
        est.algorithm,
        est.m,
        est.adaptive_rounds,
        est.seed,
        dataset.reference_trace,
        if matches!(dataset.reference_method, ReferenceMethod::SparseCube) {
            format!(" triangles~{}", est.value / 6.0)
        } else {
            String::new()
        }
    );
    Ok(())
}

fn moments(args: MomentsArgs) -> Result<(), Failure> {
    let dataset = build_dataset(&args.dataset)?;
    let k = dataset.operator.as_ref();
    let est = estimate_eigenvalue_moments(k, args.max_p, args.m, args.algo, args.distribution, args.seed)
        .map_err(estimation_failure)?;
    let exact = if args.exact {
        Some(exact_eigenvalue_moments(k, args.max_p)?)
    } else {
        None
    };
    for (i, value) in est.iter().enumerate() {
        match &exact {
            Some(ex) => println!("{}\t{}\t{}", i + 1, value, ex[i]),
            None => println!("{}\t{}", i + 1, value),
        }
    }
    Ok(())
}

fn hardness(args: HardnessArgs) -> Result<(), Failure> {
    let passed = match args.check {
        Check::TraceLaw => {
            let samples = (0..args.samples as u64)
                .map(|i| sample_wigner(args.n, args.seed.wrapping_add(i)))
                .collect::<Result<Vec<_>, _>>()?;
            let r = trace_law_check(&samples)?;
            println!(
                "samples={} n={} mean={:.4} se={:.4} variance_ratio={:.4} mean_ok={} variance_ok={}",
                r.samples, r.n, r.mean, r.standard_error, r.variance_ratio, r.mean_ok, r.variance_ok
            );
            r.passed()
        }
        Check::SpikedPair => {
            spiked_dimension(args.delta)?;
            let r = spiked_pair_separation(args.delta, args.samples, args.seed)?;
            println!(
                "n={} draws={} min_p_trace={:.4} max_q_trace={:.4} separated={}",
                r.n,
                r.draws,
                r.min_p_trace,
                r.max_q_trace,
                r.separated()
            );
            r.separated()
        }
    };
    if passed {
        Ok(())
    } else {
        Err(Failure::Run("check failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Bench(a) => bench(a),
        Command::Trace(a) => trace(a),
        Command::Moments(a) => moments(a),
        Command::Hardness(a) => hardness(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAILED)
        }
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
