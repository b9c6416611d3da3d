//! Packages, releases, versions and dependency requirements.

mod deps;
mod ecosystem;
mod package;
mod requirement;
mod version;

pub use deps::{Declaration, DependencyIndex, PairDeclarations};
pub use ecosystem::{Ecosystem, UnknownEcosystem};
pub use package::{
    DependencyEdge, DependencyKind, EmptyName, PackageId, PackageRelease, SelfEdge, UnknownKind,
};
pub use requirement::{
    parse_requirement, Op, PartialVersion, Predicate, RequirementError, RequirementExpr,
};
pub use version::{compare_versions, parse_version, Identifier, SemVersion, VersionError};
