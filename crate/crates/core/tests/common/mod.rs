//! Shared helpers: fixture paths and a seeded generator of synthetic
//! importer/dependency histories.

#![allow(dead_code)]

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;

use tood::advisory::{Advisory, AdvisoryStore, AffectedRange, RangeEnd};
use tood::model::{Declaration, DependencyIndex};
use tood::resolver::ReleaseIndex;
use tood::{parse_requirement, parse_version, Ecosystem, PackageId, PackageRelease, SemVersion, Timestamp};

pub const DAY: i64 = 86_400;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}

pub fn pkg(name: &str) -> PackageId {
    PackageId::new(Ecosystem::Npm, name).unwrap()
}

pub fn v(text: &str) -> SemVersion {
    parse_version(Ecosystem::Npm, text).unwrap()
}

pub fn ts(text: &str) -> Timestamp {
    Timestamp::parse(text).unwrap()
}

/// One importer and one dependency with everything needed to rebuild the
/// indexes, kept as plain lists so oracles can scan them directly.
#[derive(Debug, Clone)]
pub struct SynthPair {
    pub from: PackageId,
    pub to: PackageId,
    pub importer: Vec<(SemVersion, Timestamp)>,
    pub dependency: Vec<(SemVersion, Timestamp)>,
    /// `None` for a release that does not declare the dependency.
    pub declarations: Vec<(SemVersion, Option<Declaration>)>,
    pub advisories: Vec<Advisory>,
    pub cutoff: Timestamp,
    /// The dependency has no release records at all.
    pub unknown_dependency: bool,
}

impl SynthPair {
    pub fn release_index(&self) -> ReleaseIndex {
        let mut rows: Vec<PackageRelease> = self
            .importer
            .iter()
            .map(|(v, t)| PackageRelease {
                pkg: self.from.clone(),
                version: v.clone(),
                released_at: *t,
            })
            .collect();
        if !self.unknown_dependency {
            rows.extend(self.dependency.iter().map(|(v, t)| PackageRelease {
                pkg: self.to.clone(),
                version: v.clone(),
                released_at: *t,
            }));
        }
        let (idx, dups) = ReleaseIndex::from_releases(rows);
        assert!(dups.is_empty());
        idx
    }

    pub fn dependency_index(&self) -> DependencyIndex {
        let mut deps = DependencyIndex::new();
        for (ver, decl) in &self.declarations {
            if let Some(d) = decl {
                deps.declare(self.from.clone(), ver.clone(), self.to.clone(), d.clone());
            }
        }
        deps
    }

    pub fn advisory_store(&self) -> AdvisoryStore {
        AdvisoryStore::from_advisories(self.advisories.clone())
    }

    pub fn declaration(&self, ver: &SemVersion) -> Option<&Declaration> {
        self.declarations
            .iter()
            .find(|(v, _)| v == ver)
            .and_then(|(_, d)| d.as_ref())
    }

    /// Maps every instant through `f`, leaving versions and declarations alone.
    pub fn map_time(&self, f: impl Fn(Timestamp) -> Timestamp) -> SynthPair {
        let mut out = self.clone();
        for (_, t) in out.importer.iter_mut().chain(out.dependency.iter_mut()) {
            *t = f(*t);
        }
        for a in &mut out.advisories {
            a.published_at = f(a.published_at);
        }
        out.cutoff = f(out.cutoff);
        out
    }
}

fn distinct_versions(rng: &mut impl Rng, n: usize, pre_share: f64) -> Vec<SemVersion> {
    let mut out: Vec<SemVersion> = Vec::new();
    while out.len() < n {
        let mut ver = SemVersion::new(rng.gen_range(0..4), rng.gen_range(0..5), rng.gen_range(0..5));
        if rng.gen_bool(pre_share) {
            ver = v(&format!("{}-beta.{}", ver.text(), rng.gen_range(0..3)));
        }
        if !out.contains(&ver) {
            out.push(ver);
        }
    }
    out
}

fn random_instant(rng: &mut impl Rng, base: Timestamp, span_days: i64) -> Timestamp {
    // Whole days half the time so that instants often coincide.
    if rng.gen_bool(0.5) {
        base.plus_seconds(rng.gen_range(0..span_days) * DAY)
    } else {
        base.plus_seconds(rng.gen_range(0..span_days * DAY))
    }
}

fn random_requirement(rng: &mut impl Rng, pool: &[SemVersion]) -> String {
    let pick = |rng: &mut dyn rand::RngCore| -> (u64, u64, u64) {
        match pool.choose(rng) {
            Some(v) if rng.gen_bool(0.8) => v.triple(),
            _ => (rng.gen_range(0..4), rng.gen_range(0..5), rng.gen_range(0..5)),
        }
    };
    let (a, b, c) = pick(rng);
    match rng.gen_range(0..13) {
        0 => format!("^{a}.{b}.{c}"),
        1 => format!("~{a}.{b}.{c}"),
        2 => format!(">={a}.{b}.{c}"),
        3 => format!("={a}.{b}.{c}"),
        4 => format!("{a}.{b}"),
        5 => format!("{a}.x"),
        6 => "*".to_string(),
        7 => format!(">={a}.{b}.{c} <{}.0.0", a + 1),
        8 => {
            let (d, e, f) = pick(rng);
            format!("^{a}.{b}.{c} || ~{d}.{e}.{f}")
        }
        9 => format!("<{a}.{b}.{c}"),
        10 => format!("{a}.{b}.{c} - {}.{b}.{c}", a + 1),
        11 => format!("^{a}.{b}.{c}-beta.0"),
        _ => format!("{a}.{b}.{c}"),
    }
}

fn random_advisory(rng: &mut impl Rng, id: usize, to: &PackageId, pool: &[SemVersion], base: Timestamp, span: i64) -> Advisory {
    let mut sorted: Vec<SemVersion> = pool.to_vec();
    sorted.sort();
    let introduced = if rng.gen_bool(0.3) || sorted.is_empty() {
        None
    } else {
        Some(sorted[rng.gen_range(0..sorted.len())].clone())
    };
    let above: Vec<&SemVersion> = sorted
        .iter()
        .filter(|v| introduced.as_ref().is_none_or(|i| *v > i))
        .collect();
    let end = match above.choose(rng) {
        Some(f) if rng.gen_bool(0.85) => RangeEnd::Fixed((*f).clone()),
        Some(l) if rng.gen_bool(0.5) => RangeEnd::LastAffected((*l).clone()),
        _ => RangeEnd::Open,
    };
    let extra: Vec<SemVersion> = if rng.gen_bool(0.2) {
        sorted.choose(rng).cloned().into_iter().collect()
    } else {
        Vec::new()
    };
    Advisory::new(
        format!("SYN-{id}"),
        to.clone(),
        vec![AffectedRange { introduced, end }],
        extra,
        random_instant(rng, base, span),
    )
}

/// A random pair: several importer releases (not necessarily in version
/// order), dependency releases with occasional pre-releases, a requirement
/// per importer release drawn from common range forms, some dropped or
/// unparseable declarations, and a few advisories.
pub fn random_pair(rng: &mut impl Rng, id: usize) -> SynthPair {
    let base = ts("2018-01-01T00:00:00Z");
    let span = 900;
    let from = pkg(&format!("app-{id}"));
    let to = pkg(&format!("lib-{id}"));

    let n_imp = rng.gen_range(1..8);
    let importer: Vec<(SemVersion, Timestamp)> = distinct_versions(rng, n_imp, 0.1)
        .into_iter()
        .map(|v| (v, random_instant(rng, base, span)))
        .collect();
    let n_dep = rng.gen_range(0..10);
    let dep_versions = distinct_versions(rng, n_dep, 0.15);
    let dependency: Vec<(SemVersion, Timestamp)> = dep_versions
        .iter()
        .map(|v| (v.clone(), random_instant(rng, base, span)))
        .collect();

    let mut declarations: Vec<(SemVersion, Option<Declaration>)> = importer
        .iter()
        .map(|(ver, _)| {
            let decl = if rng.gen_bool(0.1) {
                None
            } else if rng.gen_bool(0.04) {
                Some(Declaration::Unparseable("??".into()))
            } else {
                let text = random_requirement(rng, &dep_versions);
                let req = parse_requirement(Ecosystem::Npm, &text)
                    .unwrap_or_else(|e| panic!("generated requirement {text:?}: {e}"));
                Some(Declaration::Requirement(req))
            };
            (ver.clone(), decl)
        })
        .collect();
    if declarations.iter().all(|(_, d)| d.is_none()) {
        let text = random_requirement(rng, &dep_versions);
        declarations[0].1 = Some(Declaration::Requirement(parse_requirement(Ecosystem::Npm, &text).unwrap()));
    }

    let n_adv = rng.gen_range(0..3);
    let advisories = (0..n_adv)
        .map(|k| random_advisory(rng, id * 10 + k, &to, &dep_versions, base, span))
        .collect();

    // Usually after everything; sometimes mid-history.
    let cutoff = if rng.gen_bool(0.8) {
        base.plus_seconds((span + rng.gen_range(0..60)) * DAY)
    } else {
        random_instant(rng, base, span)
    };

    SynthPair {
        from,
        to,
        importer,
        dependency,
        declarations,
        advisories,
        cutoff,
        unknown_dependency: rng.gen_bool(0.02),
    }
}

/// Straight scans over the raw release lists, independent of the indexes.
pub mod oracle {
    use super::*;

    pub fn importer_at(p: &SynthPair, t: Timestamp) -> Option<SemVersion> {
        let avail = p.importer.iter().filter(|(_, rt)| *rt <= t);
        let stable = avail.clone().filter(|(v, _)| !v.is_prerelease()).map(|(v, _)| v).max();
        stable.or_else(|| avail.map(|(v, _)| v).max()).cloned()
    }

    pub fn highest_at(p: &SynthPair, t: Timestamp) -> Option<SemVersion> {
        if p.unknown_dependency {
            return None;
        }
        p.dependency
            .iter()
            .filter(|(v, rt)| *rt <= t && !v.is_prerelease())
            .map(|(v, _)| v)
            .max()
            .cloned()
    }

    pub fn resolve_at(p: &SynthPair, req: &tood::RequirementExpr, t: Timestamp) -> Option<SemVersion> {
        p.dependency
            .iter()
            .filter(|(v, rt)| *rt <= t && req.matches(v))
            .map(|(v, _)| v)
            .max()
            .cloned()
    }

    pub fn released_at(p: &SynthPair, ver: &SemVersion) -> Option<Timestamp> {
        p.dependency.iter().find(|(v, _)| v == ver).map(|(_, t)| *t)
    }

    pub fn exposed_at(p: &SynthPair, resolved: &SemVersion, t: Timestamp) -> bool {
        p.advisories.iter().any(|a| {
            a.published_at <= t
                && tood::advisory::is_affected(a, resolved)
                && a.fixed_versions
                    .iter()
                    .any(|f| released_at(p, f).is_some_and(|rt| rt <= t))
        })
    }
}
