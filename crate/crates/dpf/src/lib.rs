//! Std companion to `dpf-core`: TSV ingestion, versioned file formats,
//! a rayon executor, factor exports and the `dpf` command-line tool.

pub mod config;
pub mod error;
pub mod export;
pub mod format;
pub mod parallel;
pub mod tsv;

use std::path::Path;

use dpf_core::ingest::{bucket_events, BucketedData, TimeBucketing};

pub use error::{Error, Result};
pub use format::Checkpoint;
pub use parallel::RayonExecutor;

/// Read a TSV event file and bucket it into time steps.
///
/// `origin` defaults to the earliest timestamp in the file.
pub fn load_events(path: &Path, granularity: u64, origin: Option<i64>) -> Result<BucketedData> {
    let file = std::fs::File::open(path)?;
    let events = tsv::read_events(std::io::BufReader::new(file))?;
    let origin = origin.unwrap_or_else(|| events.iter().map(|e| e.timestamp).min().unwrap_or(0));
    let bucketing = TimeBucketing::new(origin, granularity)?;
    Ok(bucket_events(&events, bucketing)?)
}
