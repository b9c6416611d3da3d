use std::collections::BTreeMap;

use serde::Serialize;

use super::{ingest, interval_jsonl, metrics_csv, warnings_csv, write_outputs, IngestStats, IoError, RunConfig};
use crate::metrics::{compute_package_metrics, filter_packages, release_profiles, PackageMetrics};
use crate::timeline::{TimelineEngine, TimelineRun};
use crate::warning::Stage as WarningStage;

/// How far the pipeline runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Intervals only.
    Resolve,
    /// Intervals, then per-package metrics.
    Metrics,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub packages: usize,
    pub releases: usize,
    pub edges: usize,
    pub regular_declarations: usize,
    pub pairs: usize,
    pub pairs_with_intervals: usize,
    pub advisories: usize,
    pub intervals: usize,
    pub intervals_out_of_date: usize,
    pub intervals_exposed: usize,
    pub packages_with_metrics: Option<usize>,
    pub packages_after_filter: Option<usize>,
    pub cutoff: Option<String>,
    pub warnings: usize,
    pub warnings_by_stage: BTreeMap<&'static str, usize>,
    pub ingest: IngestStats,
}

#[derive(Debug)]
pub struct PipelineResult {
    pub run: TimelineRun,
    /// Filtered metrics; empty for [`Stage::Resolve`].
    pub metrics: Vec<PackageMetrics>,
    pub summary: RunSummary,
    pub files: Vec<std::path::PathBuf>,
}

/// Checks structural guarantees of the computed intervals and metrics.
pub fn check_invariants(run: &TimelineRun, metrics: &[PackageMetrics]) -> Result<(), IoError> {
    let fail = |msg: String| Err(IoError::Invariant(msg));
    for tl in &run.timelines {
        for w in tl.intervals.windows(2) {
            if w[0].end != w[1].start {
                return fail(format!("{} -> {}: intervals not contiguous at {}", tl.from, tl.to, w[0].end));
            }
        }
        for r in &tl.intervals {
            if r.start > r.end {
                return fail(format!("{} -> {}: interval ends before it starts", tl.from, tl.to));
            }
            if r.is_exposed && !r.is_out_of_date {
                return fail(format!("{} -> {}: exposed but not out of date", tl.from, tl.to));
            }
        }
    }
    for m in metrics {
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        if !in_unit(m.tood.ratio) || m.pfet.is_some_and(|p| !in_unit(p.ratio)) {
            return fail(format!("{}: ratio outside [0, 1]", m.pkg));
        }
    }
    Ok(())
}

/// Ingests the inputs, computes intervals (and metrics), and writes
/// intervals.jsonl, warnings.csv, summary.json and, for the metrics stage,
/// metrics.csv into the output directory.
pub fn run_pipeline(config: &RunConfig, stage: Stage) -> Result<PipelineResult, IoError> {
    let mut data = ingest(config)?;
    let cutoff = data.cutoff_or_latest(config.cutoff);

    let run = match cutoff {
        None => TimelineRun::default(),
        Some(cutoff) => {
            let engine = TimelineEngine::new(&data.releases, &data.deps, &data.advisories, cutoff);
            if config.threads == 1 {
                engine.run(false)
            } else {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(config.threads)
                    .build()
                    .map_err(|e| IoError::Invariant(format!("thread pool: {e}")))?;
                pool.install(|| engine.run(true))
            }
        }
    };
    data.ledger.extend(run.warnings.iter().cloned());

    let (metrics, before_filter) = match stage {
        Stage::Resolve => (Vec::new(), None),
        Stage::Metrics => {
            let all = compute_package_metrics(&run.timelines, config.window);
            let n = all.len();
            let (counts, ages) = release_profiles(&data.releases);
            (filter_packages(all, &counts, &ages, &config.criteria), Some(n))
        }
    };
    check_invariants(&run, &metrics)?;

    let intervals: Vec<_> = run.intervals().collect();
    let summary = RunSummary {
        packages: data.releases.package_count(),
        releases: data.releases.release_count(),
        edges: data.edges.len(),
        regular_declarations: data.deps.edge_count(),
        pairs: data.deps.pair_count(),
        pairs_with_intervals: run.timelines.len(),
        advisories: data.advisories.len(),
        intervals: intervals.len(),
        intervals_out_of_date: intervals.iter().filter(|r| r.is_out_of_date).count(),
        intervals_exposed: intervals.iter().filter(|r| r.is_exposed).count(),
        packages_with_metrics: before_filter,
        packages_after_filter: before_filter.map(|_| metrics.len()),
        cutoff: cutoff.map(|c| c.to_string()),
        warnings: data.ledger.len(),
        warnings_by_stage: WarningStage::ALL
            .iter()
            .map(|s| (s.as_str(), data.ledger.count(*s)))
            .collect(),
        ingest: data.stats.clone(),
    };

    let mut summary_json =
        serde_json::to_vec_pretty(&summary).expect("in-memory JSON serialization");
    summary_json.push(b'\n');
    let mut files = vec![("intervals.jsonl", interval_jsonl(intervals.iter().copied()))];
    if stage == Stage::Metrics {
        files.push(("metrics.csv", metrics_csv(&metrics)));
    }
    files.push(("warnings.csv", warnings_csv(data.ledger.records())));
    files.push(("summary.json", summary_json));
    let written = write_outputs(&config.output_dir, &files)?;

    Ok(PipelineResult {
        run,
        metrics,
        summary,
        files: written,
    })
}
