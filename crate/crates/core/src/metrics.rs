//! Per-pair and per-package time-out-of-date and post-fix-exposure metrics,
//! package inclusion criteria and the naive time-to-update baseline.

use std::collections::{BTreeMap, HashMap};

use crate::model::{DependencyEdge, PackageId};
use crate::resolver::{ReleaseIndex, ResolveError};
use crate::time::Timestamp;
use crate::timeline::{IntervalRecord, PairTimeline};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("records span more than one pair")]
    MixedPair,
    #[error("no input")]
    EmptyInput,
    #[error("summaries span more than one package")]
    MixedPackage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSummary {
    pub from: PackageId,
    pub to: PackageId,
    pub tood_days: f64,
    pub pfet_days: f64,
    pub total_days: f64,
}

/// Sums interval durations for one pair. Intervals excluded from metrics
/// (dropped dependency, unparseable requirement, unknown dependency) are skipped.
pub fn summarize_pair(records: &[IntervalRecord]) -> Result<PairSummary, MetricsError> {
    let first = records.first().ok_or(MetricsError::EmptyInput)?;
    let mut s = PairSummary {
        from: first.from_pkg.clone(),
        to: first.to_pkg.clone(),
        tood_days: 0.0,
        pfet_days: 0.0,
        total_days: 0.0,
    };
    for r in records {
        if r.from_pkg != s.from || r.to_pkg != s.to {
            return Err(MetricsError::MixedPair);
        }
        if !r.counts_toward_metrics() {
            continue;
        }
        let d = r.duration_days();
        s.total_days += d;
        if r.is_out_of_date {
            s.tood_days += d;
        }
        if r.is_exposed {
            s.pfet_days += d;
        }
    }
    Ok(s)
}

/// A per-package aggregate: the mean per dependency, the share of total
/// dependency lifetime, and that share divided once more by the dependency
/// count (the literal published ratio form, kept for comparison).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeMetric {
    pub days: f64,
    pub ratio: f64,
    pub ratio_per_dep: f64,
}

fn aggregate(
    summaries: &[PairSummary],
    select: impl Fn(&PairSummary) -> f64,
) -> Result<(f64, TimeMetric), MetricsError> {
    let first = summaries.first().ok_or(MetricsError::EmptyInput)?;
    if summaries.iter().any(|s| s.from != first.from) {
        return Err(MetricsError::MixedPackage);
    }
    let n = summaries.len() as f64;
    let sum: f64 = summaries.iter().map(&select).sum();
    let total: f64 = summaries.iter().map(|s| s.total_days).sum();
    let ratio = if total > 0.0 { sum / total } else { 0.0 };
    Ok((
        sum,
        TimeMetric {
            days: sum / n,
            ratio,
            ratio_per_dep: ratio / n,
        },
    ))
}

pub fn package_tood(summaries: &[PairSummary]) -> Result<TimeMetric, MetricsError> {
    aggregate(summaries, |s| s.tood_days).map(|(_, m)| m)
}

/// `None` when the package was never exposed.
pub fn package_pfet(summaries: &[PairSummary]) -> Result<Option<TimeMetric>, MetricsError> {
    aggregate(summaries, |s| s.pfet_days).map(|(sum, m)| (sum > 0.0).then_some(m))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackageMetrics {
    pub pkg: PackageId,
    pub n_deps: usize,
    pub total_days: f64,
    pub tood: TimeMetric,
    pub pfet: Option<TimeMetric>,
}

pub fn package_metrics(summaries: &[PairSummary]) -> Result<PackageMetrics, MetricsError> {
    let tood = package_tood(summaries)?;
    let pfet = package_pfet(summaries)?;
    Ok(PackageMetrics {
        pkg: summaries[0].from.clone(),
        n_deps: summaries.len(),
        total_days: summaries.iter().map(|s| s.total_days).sum(),
        tood,
        pfet,
    })
}

/// Optional analysis window; intervals are clipped to it before summing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TimeWindow {
    pub start: Option<Timestamp>,
    pub end: Option<Timestamp>,
}

impl TimeWindow {
    pub fn is_unbounded(&self) -> bool {
        self.start.is_none() && self.end.is_none()
    }

    /// Clips records to the window, dropping those entirely outside it.
    pub fn clip(&self, records: &[IntervalRecord]) -> Vec<IntervalRecord> {
        records
            .iter()
            .filter_map(|r| {
                let start = self.start.map_or(r.start, |w| r.start.max(w));
                let end = self.end.map_or(r.end, |w| r.end.min(w));
                (start < end || (start == end && r.start == r.end)).then(|| IntervalRecord {
                    start,
                    end,
                    ..r.clone()
                })
            })
            .collect()
    }
}

/// Per-package metrics for every importer, sorted by package. Pairs with no
/// interval that counts toward metrics do not add a dependency.
pub fn compute_package_metrics(
    timelines: &[PairTimeline],
    window: TimeWindow,
) -> Vec<PackageMetrics> {
    let mut by_pkg: BTreeMap<&PackageId, Vec<PairSummary>> = BTreeMap::new();
    for tl in timelines {
        let clipped;
        let records = if window.is_unbounded() {
            &tl.intervals
        } else {
            clipped = window.clip(&tl.intervals);
            &clipped
        };
        if !records.iter().any(IntervalRecord::counts_toward_metrics) {
            continue;
        }
        if let Ok(s) = summarize_pair(records) {
            by_pkg.entry(&tl.from).or_default().push(s);
        }
    }
    by_pkg
        .values()
        .filter_map(|s| package_metrics(s).ok())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InclusionCriteria {
    pub min_versions: usize,
    pub min_age_days: f64,
    pub min_deps: usize,
}

impl Default for InclusionCriteria {
    fn default() -> Self {
        InclusionCriteria {
            min_versions: 5,
            min_age_days: 30.0,
            min_deps: 1,
        }
    }
}

/// Keeps packages with enough releases, a long enough release history and at
/// least one dependency. Thresholds are inclusive.
pub fn filter_packages(
    metrics: Vec<PackageMetrics>,
    release_counts: &HashMap<PackageId, usize>,
    ages_days: &HashMap<PackageId, f64>,
    criteria: &InclusionCriteria,
) -> Vec<PackageMetrics> {
    metrics
        .into_iter()
        .filter(|m| {
            release_counts.get(&m.pkg).copied().unwrap_or(0) >= criteria.min_versions
                && ages_days.get(&m.pkg).copied().unwrap_or(0.0) >= criteria.min_age_days
                && m.n_deps >= criteria.min_deps
        })
        .collect()
}

/// Release counts and ages (last minus first release, in days) per package.
pub fn release_profiles(
    idx: &ReleaseIndex,
) -> (HashMap<PackageId, usize>, HashMap<PackageId, f64>) {
    let mut counts = HashMap::new();
    let mut ages = HashMap::new();
    for pkg in idx.package_ids() {
        let h = idx.history(pkg).expect("listed package has a history");
        counts.insert(pkg.clone(), h.len());
        if let (Some(first), Some(last)) = (h.first_release(), h.last_release()) {
            ages.insert(pkg.clone(), last.days_since(first));
        }
    }
    (counts, ages)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TtuError {
    #[error("{0}@{1} has no release record")]
    MissingRelease(PackageId, String),
    #[error("requirement {0:?} resolves to nothing")]
    Unresolvable(String),
    #[error(transparent)]
    Resolve(#[from] ResolveError),
}

/// Importer release date minus the release date of the version the
/// requirement resolves to at `at`, in days. Negative when the resolved
/// version was published after the importer release.
pub fn compute_ttu(
    edge: &DependencyEdge,
    idx: &ReleaseIndex,
    at: Timestamp,
) -> Result<f64, TtuError> {
    let from_time = idx
        .release_time(&edge.from_pkg, &edge.from_version)
        .ok_or_else(|| {
            TtuError::MissingRelease(edge.from_pkg.clone(), edge.from_version.text())
        })?;
    let resolved = idx
        .resolve_at(&edge.requirement, &edge.to_pkg, at)?
        .ok_or_else(|| TtuError::Unresolvable(edge.requirement.source_text().to_string()))?;
    let to_time = idx
        .release_time(&edge.to_pkg, resolved)
        .expect("resolved version comes from the index");
    Ok(from_time.days_since(to_time))
}
