use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Ecosystem, RequirementExpr, SemVersion};
use crate::time::Timestamp;

/// A package in one registry. pypi-style names are stored in their
/// PEP 503 normalized form so that `Foo_Bar` and `foo-bar` compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PackageId {
    pub ecosystem: Ecosystem,
    name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("package name must not be empty")]
pub struct EmptyName;

impl PackageId {
    pub fn new(ecosystem: Ecosystem, name: &str) -> Result<Self, EmptyName> {
        let name = name.trim();
        if name.is_empty() {
            return Err(EmptyName);
        }
        let name = match ecosystem {
            Ecosystem::PyPI => normalize_pypi_name(name),
            Ecosystem::Npm | Ecosystem::Cargo => name.to_string(),
        };
        Ok(PackageId { ecosystem, name })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

fn normalize_pypi_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    let mut in_sep = false;
    for c in name.chars() {
        if matches!(c, '-' | '_' | '.') {
            if !in_sep {
                out.push('-');
            }
            in_sep = true;
        } else {
            out.push(c.to_ascii_lowercase());
            in_sep = false;
        }
    }
    out
}

impl fmt::Display for PackageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.ecosystem, self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackageRelease {
    pub pkg: PackageId,
    pub version: SemVersion,
    pub released_at: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DependencyKind {
    Regular,
    Dev,
    Optional,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown dependency kind {0:?}")]
pub struct UnknownKind(pub String);

impl FromStr for DependencyKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "regular" | "normal" | "runtime" => Ok(DependencyKind::Regular),
            "dev" | "development" => Ok(DependencyKind::Dev),
            "optional" => Ok(DependencyKind::Optional),
            _ => Err(UnknownKind(s.to_string())),
        }
    }
}

impl fmt::Display for DependencyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DependencyKind::Regular => "regular",
            DependencyKind::Dev => "dev",
            DependencyKind::Optional => "optional",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0} cannot depend on itself")]
pub struct SelfEdge(pub PackageId);

/// One declared dependency of one release.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyEdge {
    pub from_pkg: PackageId,
    pub from_version: SemVersion,
    pub to_pkg: PackageId,
    pub requirement: RequirementExpr,
    pub kind: DependencyKind,
}

impl DependencyEdge {
    pub fn new(
        from_pkg: PackageId,
        from_version: SemVersion,
        to_pkg: PackageId,
        requirement: RequirementExpr,
        kind: DependencyKind,
    ) -> Result<Self, SelfEdge> {
        if from_pkg == to_pkg {
            return Err(SelfEdge(from_pkg));
        }
        Ok(DependencyEdge {
            from_pkg,
            from_version,
            to_pkg,
            requirement,
            kind,
        })
    }

    pub fn is_regular(&self) -> bool {
        self.kind == DependencyKind::Regular
    }
}
