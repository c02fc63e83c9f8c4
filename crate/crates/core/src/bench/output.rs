use std::io::Write;
use std::path::Path;

use super::runner::TrialRecord;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 10] = [
    "dataset",
    "algorithm",
    "m",
    "epsilon",
    "estimate",
    "reference_trace",
    "failed",
    "wall_time",
    "seed",
    "trial_index",
];

/// Writes records as CSV. Floats use Rust's shortest round-trip formatting.
/// With `include_timing = false` the `wall_time` column is left out, which
/// makes output byte-identical across reruns with the same seeds.
pub fn write_csv<W: Write>(records: &[TrialRecord], out: W, include_timing: bool) -> Result<()> {
    if records.is_empty() {
        return Err(Error::param("no records to write"));
    }
    let mut writer = csv::Writer::from_writer(out);
    let header: Vec<&str> = CSV_HEADER
        .iter()
        .copied()
        .filter(|&h| include_timing || h != "wall_time")
        .collect();
    writer.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.dataset.clone(),
            r.algorithm.to_string(),
            r.m.to_string(),
            r.epsilon.to_string(),
            r.estimate.to_string(),
            r.reference_trace.to_string(),
            r.failed.to_string(),
        ];
        if include_timing {
            row.push(r.wall_time.to_string());
        }
        row.push(r.seed.to_string());
        row.push(r.trial_index.to_string());
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[TrialRecord], path: impl AsRef<Path>, include_timing: bool) -> Result<()> {
    if records.is_empty() {
        return Err(Error::param("no records to write"));
    }
    let file = std::fs::File::create(path)?;
    write_csv(records, std::io::BufWriter::new(file), include_timing)
}
