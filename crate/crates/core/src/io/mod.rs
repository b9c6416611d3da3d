//! Dataset ingestion, the end-to-end pipeline and file outputs.

mod ingest;
mod output;
mod pipeline;
pub mod report;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

pub use ingest::{ingest, Dataset, IngestStats};
pub use output::{
    interval_jsonl, metrics_csv, read_metrics_csv, warnings_csv, write_outputs, MetricsRow,
    METRICS_HEADER,
};
pub use pipeline::{check_invariants, run_pipeline, PipelineResult, RunSummary, Stage};

use crate::metrics::{InclusionCriteria, TimeWindow};
use crate::model::Ecosystem;
use crate::time::Timestamp;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn format(path: &Path, reason: impl Into<String>) -> Self {
        IoError::Format {
            path: path.to_path_buf(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub releases: PathBuf,
    pub deps: PathBuf,
    /// Directory of OSV `*.json` documents.
    pub advisories: Option<PathBuf>,
    /// `None` keeps every ecosystem.
    pub ecosystems: Option<BTreeSet<Ecosystem>>,
    /// Defaults to the latest release instant in the dataset.
    pub cutoff: Option<Timestamp>,
    pub window: TimeWindow,
    pub criteria: InclusionCriteria,
    pub include_prereleases: bool,
    pub output_dir: PathBuf,
    pub rng_seed: u64,
    /// Worker threads; 1 runs everything on the calling thread, 0 uses the
    /// rayon default.
    pub threads: usize,
}

impl RunConfig {
    pub fn new(releases: impl Into<PathBuf>, deps: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            releases: releases.into(),
            deps: deps.into(),
            advisories: None,
            ecosystems: None,
            cutoff: None,
            window: TimeWindow::default(),
            criteria: InclusionCriteria::default(),
            include_prereleases: false,
            output_dir: out.into(),
            rng_seed: 0,
            threads: 0,
        }
    }
}
