//! Dependency update metrics over registry release histories.
//!
//! Every ⟨package, dependency⟩ relation is split into intervals in which
//! neither side publishes a release, the dependency requirement is resolved
//! inside each interval, and the intervals are flagged as out of date
//! (resolved version below the highest stable release) and exposed (out of
//! date while resolving to a version covered by a published advisory whose
//! fix is already released). Per-package aggregates of those durations are
//! the time-out-of-date (TOOD) and post-fix-exposure-time (PFET) metrics.

pub mod advisory;
pub mod io;
pub mod metrics;
pub mod model;
pub mod resolver;
pub mod stats;
pub mod time;
pub mod timeline;
pub mod warning;

pub use model::{
    compare_versions, parse_requirement, parse_version, DependencyEdge, DependencyKind, Ecosystem,
    PackageId, PackageRelease, RequirementExpr, SemVersion,
};
pub use time::Timestamp;
