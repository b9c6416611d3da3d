//! Splits each ⟨importer, dependency⟩ relation into stable intervals and
//! flags every interval as out of date and/or exposed.

use rayon::prelude::*;
use serde::Serialize;

use crate::advisory::{advisory_events_for, fix_available_at, is_affected, AdvisoryStore};
use crate::model::{Declaration, DependencyIndex, PackageId, PairDeclarations, SemVersion};
use crate::resolver::{PackageHistory, ReleaseIndex};
use crate::time::Timestamp;
use crate::warning::{Stage, WarningRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalWarning {
    /// The importer's current release no longer declares the dependency.
    DependencyDropped,
    RequirementUnparseable,
    /// No available release satisfies the requirement.
    Unresolvable,
    /// The dependency has no release records.
    UnknownDependency,
}

impl IntervalWarning {
    pub fn as_str(self) -> &'static str {
        match self {
            IntervalWarning::DependencyDropped => "dependency-dropped",
            IntervalWarning::RequirementUnparseable => "requirement-unparseable",
            IntervalWarning::Unresolvable => "unresolvable",
            IntervalWarning::UnknownDependency => "unknown-dependency",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRecord {
    pub from_pkg: PackageId,
    pub from_version: SemVersion,
    pub to_pkg: PackageId,
    /// `None` when the current importer release does not declare the dependency.
    pub requirement: Option<Declaration>,
    pub resolved: Option<SemVersion>,
    pub highest: Option<SemVersion>,
    pub start: Timestamp,
    pub end: Timestamp,
    pub is_out_of_date: bool,
    pub is_exposed: bool,
    pub warning: Option<IntervalWarning>,
}

impl IntervalRecord {
    pub fn duration_days(&self) -> f64 {
        self.end.days_since(self.start)
    }

    /// Whether the interval takes part in metric aggregation.
    pub fn counts_toward_metrics(&self) -> bool {
        !matches!(
            self.warning,
            Some(
                IntervalWarning::DependencyDropped
                    | IntervalWarning::RequirementUnparseable
                    | IntervalWarning::UnknownDependency
            )
        )
    }

    pub fn requirement_text(&self) -> Option<&str> {
        self.requirement.as_ref().map(|d| match d {
            Declaration::Requirement(r) => r.source_text(),
            Declaration::Unparseable(s) => s.as_str(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairTimeline {
    pub from: PackageId,
    pub to: PackageId,
    pub events: Vec<Timestamp>,
    pub intervals: Vec<IntervalRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TimelineError {
    #[error("no release of {from} declares {to} by the cutoff")]
    NoDeclaration { from: PackageId, to: PackageId },
}

/// Interval boundaries for one pair: the first declaring release, every later
/// release of either side, advisory publication and fix instants, and the
/// cutoff. Returns `None` when no importer release declares the dependency
/// at or before the cutoff.
pub fn build_event_timeline(
    declarations: &PairDeclarations,
    importer: &PackageHistory,
    dependency: Option<&PackageHistory>,
    advisory_events: &[Timestamp],
    cutoff: Timestamp,
) -> Option<Vec<Timestamp>> {
    let first = importer
        .by_time()
        .iter()
        .take_while(|r| r.released_at <= cutoff)
        .find(|r| declarations.contains_key(&r.version))?
        .released_at;
    let in_range = |t: &Timestamp| *t >= first && *t <= cutoff;
    let mut events: Vec<Timestamp> = importer
        .by_time()
        .iter()
        .chain(dependency.map_or(&[][..], PackageHistory::by_time))
        .map(|r| r.released_at)
        .chain(advisory_events.iter().copied())
        .filter(in_range)
        .collect();
    events.push(first);
    events.push(cutoff);
    events.sort();
    events.dedup();
    Some(events)
}

/// The importer release in force at `t`: the highest release published by
/// then, preferring stable releases unless pre-releases are admitted.
pub fn importer_release_at(
    history: &PackageHistory,
    t: Timestamp,
    include_prereleases: bool,
) -> Option<&SemVersion> {
    if include_prereleases {
        history.highest_any_at(t)
    } else {
        history
            .highest_stable_at(t)
            .or_else(|| history.highest_any_at(t))
    }
}

/// Out-of-date flag plus the warning to attach, if any.
pub fn flag_out_of_date(
    resolved: Option<&SemVersion>,
    highest: Option<&SemVersion>,
) -> (bool, Option<IntervalWarning>) {
    let warning = resolved.is_none().then_some(IntervalWarning::Unresolvable);
    let flag = match (resolved, highest) {
        (_, None) => false,
        (None, Some(_)) => true,
        (Some(r), Some(h)) => r != h,
    };
    (flag, warning)
}

/// An out-of-date interval is exposed when its resolved version is covered by
/// an advisory that was published, and had a released fix, by the interval
/// start.
pub fn flag_exposed(record: &IntervalRecord, store: &AdvisoryStore, idx: &ReleaseIndex) -> bool {
    let Some(resolved) = &record.resolved else {
        return false;
    };
    record.is_out_of_date
        && store.get(&record.to_pkg).iter().any(|a| {
            a.published_at <= record.start
                && is_affected(a, resolved)
                && fix_available_at(a, idx, record.start)
        })
}

/// Resolves every interval between consecutive `events`.
pub fn resolve_intervals(
    from: &PackageId,
    to: &PackageId,
    declarations: &PairDeclarations,
    importer: &PackageHistory,
    events: &[Timestamp],
    idx: &ReleaseIndex,
    store: &AdvisoryStore,
) -> Vec<IntervalRecord> {
    let include_pre = idx.includes_prereleases();
    events
        .windows(2)
        .filter_map(|w| {
            let (start, end) = (w[0], w[1]);
            let from_version = importer_release_at(importer, start, include_pre)?;
            let mut rec = IntervalRecord {
                from_pkg: from.clone(),
                from_version: from_version.clone(),
                to_pkg: to.clone(),
                requirement: declarations.get(from_version).cloned(),
                resolved: None,
                highest: None,
                start,
                end,
                is_out_of_date: false,
                is_exposed: false,
                warning: None,
            };
            match &rec.requirement {
                None => rec.warning = Some(IntervalWarning::DependencyDropped),
                Some(Declaration::Unparseable(_)) => {
                    rec.warning = Some(IntervalWarning::RequirementUnparseable)
                }
                Some(Declaration::Requirement(req)) => match idx.resolve_at(req, to, start) {
                    Err(_) => rec.warning = Some(IntervalWarning::UnknownDependency),
                    Ok(resolved) => {
                        rec.resolved = resolved.cloned();
                        rec.highest = idx.highest_available_at(to, start).ok().flatten().cloned();
                        let (ood, warning) =
                            flag_out_of_date(rec.resolved.as_ref(), rec.highest.as_ref());
                        rec.is_out_of_date = ood;
                        rec.warning = warning;
                        rec.is_exposed = flag_exposed(&rec, store, idx);
                    }
                },
            }
            Some(rec)
        })
        .collect()
}

/// Runs the interval computation over the pairs of a dependency index.
pub struct TimelineEngine<'a> {
    releases: &'a ReleaseIndex,
    deps: &'a DependencyIndex,
    advisories: &'a AdvisoryStore,
    cutoff: Timestamp,
}

#[derive(Debug, Default)]
pub struct TimelineRun {
    /// Ordered by (importer, dependency).
    pub timelines: Vec<PairTimeline>,
    pub warnings: Vec<WarningRecord>,
}

impl TimelineRun {
    pub fn intervals(&self) -> impl Iterator<Item = &IntervalRecord> {
        self.timelines.iter().flat_map(|t| t.intervals.iter())
    }
}

impl<'a> TimelineEngine<'a> {
    pub fn new(
        releases: &'a ReleaseIndex,
        deps: &'a DependencyIndex,
        advisories: &'a AdvisoryStore,
        cutoff: Timestamp,
    ) -> Self {
        TimelineEngine {
            releases,
            deps,
            advisories,
            cutoff,
        }
    }

    pub fn pair(&self, from: &PackageId, to: &PackageId) -> Result<PairTimeline, TimelineError> {
        let no_decl = || TimelineError::NoDeclaration {
            from: from.clone(),
            to: to.clone(),
        };
        let declarations = self.deps.declarations(from, to).ok_or_else(no_decl)?;
        let importer = self.releases.history(from).ok_or_else(no_decl)?;
        let adv_events = advisory_events_for(self.advisories, self.releases, to);
        let events = build_event_timeline(
            declarations,
            importer,
            self.releases.history(to),
            &adv_events,
            self.cutoff,
        )
        .ok_or_else(no_decl)?;
        let intervals = resolve_intervals(
            from,
            to,
            declarations,
            importer,
            &events,
            self.releases,
            self.advisories,
        );
        Ok(PairTimeline {
            from: from.clone(),
            to: to.clone(),
            events,
            intervals,
        })
    }

    /// Processes every pair. With `parallel` the pairs are spread over the
    /// current rayon pool; the output order is the same either way.
    pub fn run(&self, parallel: bool) -> TimelineRun {
        let pairs: Vec<(&PackageId, &PackageId)> =
            self.deps.pairs().map(|(f, t, _)| (f, t)).collect();
        let results: Vec<Result<PairTimeline, TimelineError>> = if parallel {
            pairs.par_iter().map(|(f, t)| self.pair(f, t)).collect()
        } else {
            pairs.iter().map(|(f, t)| self.pair(f, t)).collect()
        };

        let mut run = TimelineRun::default();
        for result in results {
            match result {
                Ok(tl) => {
                    run.warnings.extend(interval_warnings(&tl));
                    run.timelines.push(tl);
                }
                Err(TimelineError::NoDeclaration { from, to }) => {
                    run.warnings.push(WarningRecord::new(
                        Stage::Timeline,
                        format!("{from} -> {to}"),
                        "no release declares the dependency by the cutoff",
                    ));
                }
            }
        }
        run
    }
}

/// One ledger entry per pair and resolution problem, with the interval count.
fn interval_warnings(tl: &PairTimeline) -> Vec<WarningRecord> {
    let mut out = Vec::new();
    for kind in [IntervalWarning::Unresolvable, IntervalWarning::UnknownDependency] {
        let n = tl
            .intervals
            .iter()
            .filter(|r| r.warning == Some(kind))
            .count();
        if n > 0 {
            out.push(WarningRecord::new(
                Stage::Resolve,
                format!("{} -> {}", tl.from, tl.to),
                format!("{} in {n} interval(s)", kind.as_str()),
            ));
        }
    }
    out
}
