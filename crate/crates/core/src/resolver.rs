//! Point-in-time dependency resolution over release histories.

use std::collections::{HashMap, HashSet};

use crate::model::{PackageId, PackageRelease, RequirementExpr, SemVersion};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ResolveError {
    #[error("unknown package {0}")]
    UnknownPackage(PackageId),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("duplicate release {pkg}@{version}")]
pub struct DuplicateRelease {
    pub pkg: PackageId,
    pub version: SemVersion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Release {
    pub version: SemVersion,
    pub released_at: Timestamp,
}

/// All releases of one package, sorted both ways, with running maxima over
/// the time order so "highest available at t" is a binary search.
#[derive(Debug, Clone)]
pub struct PackageHistory {
    by_time: Vec<Release>,
    by_version: Vec<Release>,
    stable_max: Vec<Option<usize>>,
    any_max: Vec<usize>,
}

impl PackageHistory {
    fn new(mut releases: Vec<Release>) -> Self {
        releases.sort_by(|a, b| {
            a.released_at
                .cmp(&b.released_at)
                .then_with(|| a.version.cmp(&b.version))
        });
        let by_time = releases;
        let mut stable_max = Vec::with_capacity(by_time.len());
        let mut any_max = Vec::with_capacity(by_time.len());
        let mut best_stable: Option<usize> = None;
        let mut best_any = 0usize;
        for (i, r) in by_time.iter().enumerate() {
            if r.version > by_time[best_any].version {
                best_any = i;
            }
            if !r.version.is_prerelease()
                && best_stable.is_none_or(|b| r.version > by_time[b].version)
            {
                best_stable = Some(i);
            }
            stable_max.push(best_stable);
            any_max.push(best_any);
        }
        let mut by_version = by_time.clone();
        by_version.sort_by(|a, b| a.version.cmp(&b.version));
        PackageHistory {
            by_time,
            by_version,
            stable_max,
            any_max,
        }
    }

    /// Releases in publication order.
    pub fn by_time(&self) -> &[Release] {
        &self.by_time
    }

    /// Releases in version order.
    pub fn by_version(&self) -> &[Release] {
        &self.by_version
    }

    pub fn len(&self) -> usize {
        self.by_time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_time.is_empty()
    }

    pub fn first_release(&self) -> Option<Timestamp> {
        self.by_time.first().map(|r| r.released_at)
    }

    pub fn last_release(&self) -> Option<Timestamp> {
        self.by_time.last().map(|r| r.released_at)
    }

    /// Number of releases published at or before `t`.
    fn available_count(&self, t: Timestamp) -> usize {
        self.by_time.partition_point(|r| r.released_at <= t)
    }

    pub fn release_time(&self, version: &SemVersion) -> Option<Timestamp> {
        self.by_version
            .binary_search_by(|r| r.version.cmp(version))
            .ok()
            .map(|i| self.by_version[i].released_at)
    }

    /// Highest stable release published at or before `t`.
    pub fn highest_stable_at(&self, t: Timestamp) -> Option<&SemVersion> {
        let n = self.available_count(t);
        if n == 0 {
            return None;
        }
        self.stable_max[n - 1].map(|i| &self.by_time[i].version)
    }

    /// Highest release of any kind published at or before `t`.
    pub fn highest_any_at(&self, t: Timestamp) -> Option<&SemVersion> {
        let n = self.available_count(t);
        (n > 0).then(|| &self.by_time[self.any_max[n - 1]].version)
    }

    /// Highest release matching `req` among those published at or before `t`.
    pub fn resolve(
        &self,
        req: &RequirementExpr,
        t: Timestamp,
        include_prerelease: bool,
    ) -> Option<&SemVersion> {
        self.by_version
            .iter()
            .rev()
            .find(|r| r.released_at <= t && req.matches_with(&r.version, include_prerelease))
            .map(|r| &r.version)
    }
}

/// Release histories keyed by package. Read-only once built.
#[derive(Debug, Clone, Default)]
pub struct ReleaseIndex {
    packages: HashMap<PackageId, PackageHistory>,
    include_prereleases: bool,
}

#[derive(Debug, Default)]
pub struct ReleaseIndexBuilder {
    releases: HashMap<PackageId, Vec<Release>>,
    seen: HashSet<(PackageId, SemVersion)>,
    include_prereleases: bool,
}

impl ReleaseIndexBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Lets pre-releases take part in resolution and count as "highest".
    pub fn include_prereleases(mut self, yes: bool) -> Self {
        self.include_prereleases = yes;
        self
    }

    /// Adds a release; a second release with an equal version is rejected.
    #[allow(clippy::result_large_err)]
    pub fn insert(&mut self, release: PackageRelease) -> Result<(), DuplicateRelease> {
        let key = (release.pkg.clone(), release.version.clone());
        if !self.seen.insert(key) {
            return Err(DuplicateRelease {
                pkg: release.pkg,
                version: release.version,
            });
        }
        self.releases.entry(release.pkg).or_default().push(Release {
            version: release.version,
            released_at: release.released_at,
        });
        Ok(())
    }

    pub fn build(self) -> ReleaseIndex {
        ReleaseIndex {
            packages: self
                .releases
                .into_iter()
                .map(|(pkg, rs)| (pkg, PackageHistory::new(rs)))
                .collect(),
            include_prereleases: self.include_prereleases,
        }
    }
}

impl ReleaseIndex {
    /// Builds an index, returning the duplicates that were dropped.
    pub fn from_releases(
        releases: impl IntoIterator<Item = PackageRelease>,
    ) -> (Self, Vec<DuplicateRelease>) {
        let mut builder = ReleaseIndexBuilder::new();
        let dups = releases
            .into_iter()
            .filter_map(|r| builder.insert(r).err())
            .collect();
        (builder.build(), dups)
    }

    pub fn includes_prereleases(&self) -> bool {
        self.include_prereleases
    }

    pub fn history(&self, pkg: &PackageId) -> Option<&PackageHistory> {
        self.packages.get(pkg)
    }

    fn require(&self, pkg: &PackageId) -> Result<&PackageHistory, ResolveError> {
        self.packages
            .get(pkg)
            .ok_or_else(|| ResolveError::UnknownPackage(pkg.clone()))
    }

    pub fn contains(&self, pkg: &PackageId) -> bool {
        self.packages.contains_key(pkg)
    }

    /// Package ids in sorted order.
    pub fn package_ids(&self) -> Vec<&PackageId> {
        let mut ids: Vec<_> = self.packages.keys().collect();
        ids.sort();
        ids
    }

    pub fn package_count(&self) -> usize {
        self.packages.len()
    }

    pub fn release_count(&self) -> usize {
        self.packages.values().map(PackageHistory::len).sum()
    }

    pub fn release_time(&self, pkg: &PackageId, version: &SemVersion) -> Option<Timestamp> {
        self.packages.get(pkg)?.release_time(version)
    }

    /// Latest release instant across all packages.
    pub fn max_timestamp(&self) -> Option<Timestamp> {
        self.packages.values().filter_map(|h| h.last_release()).max()
    }

    /// The version an installer would have picked at `t`: the highest release
    /// published at or before `t` that satisfies `req`.
    pub fn resolve_at(
        &self,
        req: &RequirementExpr,
        dep: &PackageId,
        t: Timestamp,
    ) -> Result<Option<&SemVersion>, ResolveError> {
        Ok(self.require(dep)?.resolve(req, t, self.include_prereleases))
    }

    /// Highest release published at or before `t`, by version order rather than
    /// publication order. Pre-releases are skipped unless the index admits them.
    pub fn highest_available_at(
        &self,
        dep: &PackageId,
        t: Timestamp,
    ) -> Result<Option<&SemVersion>, ResolveError> {
        let history = self.require(dep)?;
        Ok(if self.include_prereleases {
            history.highest_any_at(t)
        } else {
            history.highest_stable_at(t)
        })
    }
}

/// Whether `v` satisfies `req` under the default pre-release rule.
pub fn matches(req: &RequirementExpr, v: &SemVersion) -> bool {
    req.matches(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_requirement, parse_version, Ecosystem};

    fn qs() -> PackageId {
        PackageId::new(Ecosystem::Npm, "qs").unwrap()
    }

    fn ts(y: i32, m: u32, d: u32) -> Timestamp {
        Timestamp::from_ymd(y, m, d).unwrap()
    }

    fn rel(pkg: &PackageId, v: &str, t: Timestamp) -> PackageRelease {
        PackageRelease {
            pkg: pkg.clone(),
            version: parse_version(pkg.ecosystem, v).unwrap(),
            released_at: t,
        }
    }

    fn qs_index() -> ReleaseIndex {
        let q = qs();
        let (idx, dups) = ReleaseIndex::from_releases([
            rel(&q, "0.0.6", ts(2011, 6, 1)),
            rel(&q, "0.6.1", ts(2013, 4, 22)),
            rel(&q, "0.6.2", ts(2013, 5, 2)),
            rel(&q, "0.6.3", ts(2013, 5, 3)),
            rel(&q, "0.6.4", ts(2013, 5, 7)),
            rel(&q, "6.12.0", ts(2024, 5, 6)),
        ]);
        assert!(dups.is_empty());
        idx
    }

    fn npm_req(text: &str) -> RequirementExpr {
        parse_requirement(Ecosystem::Npm, text).unwrap()
    }

    #[test]
    fn matches_examples() {
        let v = |t| parse_version(Ecosystem::Npm, t).unwrap();
        assert!(matches(&npm_req(">=0.3.0"), &v("6.12.0")));
        assert!(!matches(&npm_req("=1.0.0"), &v("1.0.1")));
    }

    #[test]
    fn resolve_examples() {
        let idx = qs_index();
        let r = idx.resolve_at(&npm_req(">=0.0.6"), &qs(), ts(2024, 5, 6)).unwrap();
        assert_eq!(r.unwrap().to_string(), "6.12.0");
        let r = idx.resolve_at(&npm_req("0.6.1"), &qs(), ts(2013, 4, 30)).unwrap();
        assert_eq!(r.unwrap().to_string(), "0.6.1");
        for t in [ts(2000, 1, 1), ts(2013, 5, 7), ts(2030, 1, 1)] {
            assert_eq!(idx.resolve_at(&npm_req(">=9.9.9"), &qs(), t).unwrap(), None);
        }
    }

    #[test]
    fn release_at_boundary_is_available() {
        let idx = qs_index();
        let r = idx.resolve_at(&npm_req("^0.6.0"), &qs(), ts(2013, 5, 2)).unwrap();
        assert_eq!(r.unwrap().to_string(), "0.6.2");
        let before = ts(2013, 5, 2).plus_seconds(-1);
        let r = idx.resolve_at(&npm_req("^0.6.0"), &qs(), before).unwrap();
        assert_eq!(r.unwrap().to_string(), "0.6.1");
    }

    #[test]
    fn highest_examples() {
        let idx = qs_index();
        let h = |t| idx.highest_available_at(&qs(), t).unwrap().map(|v| v.to_string());
        assert_eq!(h(ts(2013, 5, 2)).as_deref(), Some("0.6.2"));
        assert_eq!(h(ts(2013, 4, 30)).as_deref(), Some("0.6.1"));
        assert_eq!(h(ts(2010, 1, 1)), None);
    }

    #[test]
    fn prerelease_only_has_no_highest() {
        let p = PackageId::new(Ecosystem::Npm, "beta-only").unwrap();
        let (idx, _) = ReleaseIndex::from_releases([rel(&p, "1.0.0-beta", ts(2020, 1, 1))]);
        assert_eq!(idx.highest_available_at(&p, ts(2021, 1, 1)).unwrap(), None);

        let mut b = ReleaseIndexBuilder::new().include_prereleases(true);
        b.insert(rel(&p, "1.0.0-beta", ts(2020, 1, 1))).unwrap();
        let idx = b.build();
        assert_eq!(
            idx.highest_available_at(&p, ts(2021, 1, 1)).unwrap().unwrap().to_string(),
            "1.0.0-beta"
        );
    }

    #[test]
    fn downgrade_keeps_semver_maximum() {
        let p = PackageId::new(Ecosystem::Cargo, "dep").unwrap();
        let (idx, _) = ReleaseIndex::from_releases([
            rel(&p, "2.0.0", ts(2020, 1, 1)),
            rel(&p, "1.9.0", ts(2020, 6, 1)),
        ]);
        let h = idx.highest_available_at(&p, ts(2021, 1, 1)).unwrap().unwrap();
        assert_eq!(h.to_string(), "2.0.0");
    }

    #[test]
    fn unknown_package_and_duplicates() {
        let idx = qs_index();
        let other = PackageId::new(Ecosystem::Npm, "nope").unwrap();
        assert_eq!(
            idx.highest_available_at(&other, ts(2020, 1, 1)),
            Err(ResolveError::UnknownPackage(other.clone()))
        );
        let (_, dups) = ReleaseIndex::from_releases([
            rel(&qs(), "1.0.0", ts(2020, 1, 1)),
            rel(&qs(), "1.0.0+rebuild", ts(2020, 1, 2)),
        ]);
        assert_eq!(dups.len(), 1);
    }

    #[test]
    fn release_time_lookup() {
        let idx = qs_index();
        let v = parse_version(Ecosystem::Npm, "0.6.3").unwrap();
        assert_eq!(idx.release_time(&qs(), &v), Some(ts(2013, 5, 3)));
        assert_eq!(idx.max_timestamp(), Some(ts(2024, 5, 6)));
    }
}
