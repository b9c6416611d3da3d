//! OSV security advisories: loading, affected-version checks and fix timing.

use std::collections::{BTreeSet, HashMap};

use serde::Deserialize;
use serde_json::Value;

use crate::model::{parse_version, Ecosystem, PackageId, SemVersion};
use crate::resolver::ReleaseIndex;
use crate::time::Timestamp;
use crate::warning::{Stage, WarningRecord};

/// Upper end of an affected range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RangeEnd {
    /// First unaffected version, exclusive.
    Fixed(SemVersion),
    /// Last affected version, inclusive.
    LastAffected(SemVersion),
    Open,
}

/// `introduced = None` means the range starts below every version.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffectedRange {
    pub introduced: Option<SemVersion>,
    pub end: RangeEnd,
}

impl AffectedRange {
    pub fn contains(&self, v: &SemVersion) -> bool {
        if self.introduced.as_ref().is_some_and(|i| v < i) {
            return false;
        }
        match &self.end {
            RangeEnd::Fixed(f) => v < f,
            RangeEnd::LastAffected(l) => v <= l,
            RangeEnd::Open => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Advisory {
    pub id: String,
    pub pkg: PackageId,
    pub affected_ranges: Vec<AffectedRange>,
    pub affected_versions: Vec<SemVersion>,
    /// Sorted and deduplicated `fixed` events across all ranges.
    pub fixed_versions: Vec<SemVersion>,
    pub published_at: Timestamp,
}

impl Advisory {
    pub fn new(
        id: impl Into<String>,
        pkg: PackageId,
        affected_ranges: Vec<AffectedRange>,
        mut affected_versions: Vec<SemVersion>,
        published_at: Timestamp,
    ) -> Self {
        let mut fixed_versions: Vec<SemVersion> = affected_ranges
            .iter()
            .filter_map(|r| match &r.end {
                RangeEnd::Fixed(f) => Some(f.clone()),
                _ => None,
            })
            .collect();
        fixed_versions.sort();
        fixed_versions.dedup();
        affected_versions.sort();
        affected_versions.dedup();
        Advisory {
            id: id.into(),
            pkg,
            affected_ranges,
            affected_versions,
            fixed_versions,
            published_at,
        }
    }

    fn merge(&mut self, other: Advisory) {
        self.affected_ranges.extend(other.affected_ranges);
        self.affected_versions.extend(other.affected_versions);
        self.affected_versions.sort();
        self.affected_versions.dedup();
        self.fixed_versions.extend(other.fixed_versions);
        self.fixed_versions.sort();
        self.fixed_versions.dedup();
    }
}

pub fn is_affected(a: &Advisory, v: &SemVersion) -> bool {
    a.affected_ranges.iter().any(|r| r.contains(v))
        || a.affected_versions.binary_search(v).is_ok()
}

/// True once any fixed version of `a` has been published.
pub fn fix_available_at(a: &Advisory, idx: &ReleaseIndex, t: Timestamp) -> bool {
    a.fixed_versions
        .iter()
        .any(|f| idx.release_time(&a.pkg, f).is_some_and(|rt| rt <= t))
}

/// Publication instants of the advisories on `dep` and the release instants
/// of their fixes, sorted and deduplicated.
pub fn advisory_events_for(
    store: &AdvisoryStore,
    idx: &ReleaseIndex,
    dep: &PackageId,
) -> Vec<Timestamp> {
    let mut out: Vec<Timestamp> = Vec::new();
    for a in store.get(dep) {
        out.push(a.published_at);
        out.extend(
            a.fixed_versions
                .iter()
                .filter_map(|f| idx.release_time(dep, f)),
        );
    }
    out.sort();
    out.dedup();
    out
}

#[derive(Debug, Clone, Default)]
pub struct AdvisoryStore {
    by_pkg: HashMap<PackageId, Vec<Advisory>>,
}

impl AdvisoryStore {
    /// Advisories with the same id and package are merged into one.
    pub fn from_advisories(advisories: impl IntoIterator<Item = Advisory>) -> Self {
        let mut by_pkg: HashMap<PackageId, Vec<Advisory>> = HashMap::new();
        for a in advisories {
            let list = by_pkg.entry(a.pkg.clone()).or_default();
            match list.iter_mut().find(|x| x.id == a.id) {
                Some(existing) => existing.merge(a),
                None => list.push(a),
            }
        }
        for list in by_pkg.values_mut() {
            list.sort_by(|a, b| a.id.cmp(&b.id));
        }
        AdvisoryStore { by_pkg }
    }

    pub fn get(&self, pkg: &PackageId) -> &[Advisory] {
        self.by_pkg.get(pkg).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.by_pkg.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_pkg.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Advisory> {
        self.by_pkg.values().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AdvisoryError {
    #[error("malformed advisory {id}: {reason}")]
    MalformedDocument { id: String, reason: String },
}

#[derive(Deserialize)]
struct OsvDocument {
    id: Option<String>,
    published: Option<String>,
    withdrawn: Option<String>,
    affected: Option<Vec<OsvAffected>>,
}

#[derive(Deserialize)]
struct OsvAffected {
    package: Option<OsvPackage>,
    #[serde(default)]
    ranges: Vec<OsvRange>,
    #[serde(default)]
    versions: Vec<String>,
}

#[derive(Deserialize)]
struct OsvPackage {
    ecosystem: String,
    name: String,
}

#[derive(Deserialize)]
struct OsvRange {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    events: Vec<OsvEvent>,
}

#[derive(Deserialize)]
struct OsvEvent {
    introduced: Option<String>,
    fixed: Option<String>,
    last_affected: Option<String>,
}

/// Result of loading a batch of OSV documents.
#[derive(Debug, Default)]
pub struct OsvLoad {
    pub store: AdvisoryStore,
    pub warnings: Vec<WarningRecord>,
    /// Documents that produced at least one advisory.
    pub documents_loaded: usize,
}

/// Loads OSV documents. Problems never abort the load: malformed documents,
/// withdrawn advisories, foreign ecosystems and unparseable ranges are
/// skipped with a warning. `ecosystems` restricts which packages are kept.
pub fn load_osv<'a>(
    documents: impl IntoIterator<Item = &'a Value>,
    ecosystems: Option<&BTreeSet<Ecosystem>>,
) -> OsvLoad {
    let mut warnings = Vec::new();
    let mut advisories = Vec::new();
    let mut documents_loaded = 0;
    for doc in documents {
        match advisories_from_document(doc, ecosystems, &mut warnings) {
            Ok(list) => {
                if !list.is_empty() {
                    documents_loaded += 1;
                }
                advisories.extend(list);
            }
            Err(AdvisoryError::MalformedDocument { id, reason }) => {
                warnings.push(WarningRecord::new(Stage::Advisory, id, reason));
            }
        }
    }
    OsvLoad {
        store: AdvisoryStore::from_advisories(advisories),
        warnings,
        documents_loaded,
    }
}

fn malformed(id: &str, reason: impl Into<String>) -> AdvisoryError {
    AdvisoryError::MalformedDocument {
        id: id.to_string(),
        reason: reason.into(),
    }
}

/// Parses one OSV document into per-package advisories.
pub fn advisories_from_document(
    doc: &Value,
    ecosystems: Option<&BTreeSet<Ecosystem>>,
    warnings: &mut Vec<WarningRecord>,
) -> Result<Vec<Advisory>, AdvisoryError> {
    let fallback_id = doc
        .get("id")
        .and_then(Value::as_str)
        .unwrap_or("<unknown>")
        .to_string();
    let parsed: OsvDocument =
        serde_json::from_value(doc.clone()).map_err(|e| malformed(&fallback_id, e.to_string()))?;
    let id = parsed
        .id
        .filter(|s| !s.trim().is_empty())
        .ok_or_else(|| malformed(&fallback_id, "missing id"))?;
    if parsed.withdrawn.is_some() {
        warnings.push(WarningRecord::new(Stage::Advisory, &id, "withdrawn advisory skipped"));
        return Ok(Vec::new());
    }
    let published = parsed
        .published
        .ok_or_else(|| malformed(&id, "missing published"))?;
    let published_at = Timestamp::parse(&published)
        .map_err(|e| malformed(&id, format!("bad published timestamp: {e}")))?;
    let affected = parsed
        .affected
        .filter(|a| !a.is_empty())
        .ok_or_else(|| malformed(&id, "no affected packages"))?;

    let mut out = Vec::new();
    for (i, entry) in affected.into_iter().enumerate() {
        if entry.ranges.is_empty() && entry.versions.is_empty() {
            return Err(malformed(&id, format!("affected[{i}] has no ranges or versions")));
        }
        let package = entry
            .package
            .ok_or_else(|| malformed(&id, format!("affected[{i}] has no package")))?;
        let Some(eco) = Ecosystem::from_osv(&package.ecosystem) else {
            warnings.push(WarningRecord::new(
                Stage::Advisory,
                &id,
                format!("unsupported ecosystem {:?}", package.ecosystem),
            ));
            continue;
        };
        if ecosystems.is_some_and(|set| !set.contains(&eco)) {
            warnings.push(WarningRecord::new(
                Stage::Advisory,
                &id,
                format!("ecosystem {eco} outside the dataset"),
            ));
            continue;
        }
        let pkg = PackageId::new(eco, &package.name)
            .map_err(|_| malformed(&id, format!("affected[{i}] has an empty package name")))?;

        let mut ranges = Vec::new();
        for (j, range) in entry.ranges.iter().enumerate() {
            if !matches!(range.kind.as_str(), "SEMVER" | "ECOSYSTEM") {
                warnings.push(WarningRecord::new(
                    Stage::Advisory,
                    &id,
                    format!("affected[{i}].ranges[{j}] of type {} skipped", range.kind),
                ));
                continue;
            }
            match ranges_from_events(eco, &range.events) {
                Ok(rs) => ranges.extend(rs),
                Err(reason) => warnings.push(WarningRecord::new(
                    Stage::Advisory,
                    &id,
                    format!("affected[{i}].ranges[{j}] skipped: {reason}"),
                )),
            }
        }
        let mut versions = Vec::new();
        for text in &entry.versions {
            match parse_version(eco, text) {
                Ok(v) => versions.push(v),
                Err(e) => warnings.push(WarningRecord::new(
                    Stage::Advisory,
                    &id,
                    format!("affected[{i}] version skipped: {e}"),
                )),
            }
        }
        if ranges.is_empty() && versions.is_empty() {
            continue;
        }
        out.push(Advisory::new(id.clone(), pkg, ranges, versions, published_at));
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    Introduced,
    Fixed,
    LastAffected,
}

/// Turns an OSV event list into ranges. Events are sorted by version first,
/// as the OSV evaluation rules require; "0" as introduced means unbounded.
fn ranges_from_events(eco: Ecosystem, events: &[OsvEvent]) -> Result<Vec<AffectedRange>, String> {
    let mut parsed: Vec<(Option<SemVersion>, EventKind)> = Vec::new();
    for ev in events {
        let pairs = [
            (&ev.introduced, EventKind::Introduced),
            (&ev.fixed, EventKind::Fixed),
            (&ev.last_affected, EventKind::LastAffected),
        ];
        for (text, kind) in pairs {
            let Some(text) = text else { continue };
            if kind == EventKind::Introduced && text.trim() == "0" {
                parsed.push((None, kind));
                continue;
            }
            let v = parse_version(eco, text).map_err(|e| e.to_string())?;
            parsed.push((Some(v), kind));
        }
    }
    parsed.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut out = Vec::new();
    let mut open: Option<Option<SemVersion>> = None;
    for (v, kind) in parsed {
        match kind {
            EventKind::Introduced => {
                if open.is_none() {
                    open = Some(v);
                }
            }
            EventKind::Fixed | EventKind::LastAffected => {
                let Some(introduced) = open.take() else { continue };
                let v = v.expect("only introduced events may be unbounded");
                let end = if kind == EventKind::Fixed {
                    RangeEnd::Fixed(v)
                } else {
                    RangeEnd::LastAffected(v)
                };
                out.push(AffectedRange { introduced, end });
            }
        }
    }
    if let Some(introduced) = open {
        out.push(AffectedRange {
            introduced,
            end: RangeEnd::Open,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PackageRelease;
    use serde_json::json;

    fn v(text: &str) -> SemVersion {
        parse_version(Ecosystem::Npm, text).unwrap()
    }

    fn vite_doc() -> Value {
        json!({
            "id": "GHSA-c24v-8rfc-w8vw",
            "published": "2024-01-19T00:00:00Z",
            "affected": [{
                "package": {"ecosystem": "npm", "name": "vite"},
                "ranges": [{
                    "type": "ECOSYSTEM",
                    "events": [
                        {"introduced": "2.7.0"}, {"fixed": "2.9.17"},
                        {"introduced": "3.0.0"}, {"fixed": "3.2.8"},
                        {"introduced": "4.0.0"}, {"fixed": "4.5.2"},
                        {"introduced": "5.0.0"}, {"fixed": "5.0.12"}
                    ]
                }]
            }]
        })
    }

    #[test]
    fn vite_ranges() {
        let doc = vite_doc();
        let load = load_osv([&doc], None);
        assert!(load.warnings.is_empty(), "{:?}", load.warnings);
        let vite = PackageId::new(Ecosystem::Npm, "vite").unwrap();
        let advs = load.store.get(&vite);
        assert_eq!(advs.len(), 1);
        let a = &advs[0];
        assert_eq!(a.affected_ranges.len(), 4);
        let fixed: Vec<String> = a.fixed_versions.iter().map(|f| f.to_string()).collect();
        assert_eq!(fixed, ["2.9.17", "3.2.8", "4.5.2", "5.0.12"]);
        assert!(is_affected(a, &v("4.5.1")));
        assert!(is_affected(a, &v("2.9.16")));
        assert!(!is_affected(a, &v("5.0.12")));
        assert!(!is_affected(a, &v("2.6.9")));
        assert!(!is_affected(a, &v("3.2.9")));
    }

    #[test]
    fn unbounded_and_last_affected() {
        let doc = json!({
            "id": "X-1", "published": "2020-01-01T00:00:00Z",
            "affected": [{
                "package": {"ecosystem": "crates.io", "name": "foo"},
                "ranges": [{"type": "SEMVER", "events": [
                    {"introduced": "0"}, {"last_affected": "1.2.0"}
                ]}]
            }]
        });
        let load = load_osv([&doc], None);
        let a = &load.store.get(&PackageId::new(Ecosystem::Cargo, "foo").unwrap())[0];
        let c = |t| parse_version(Ecosystem::Cargo, t).unwrap();
        assert!(is_affected(a, &c("0.0.1")));
        assert!(is_affected(a, &c("1.2.0")));
        assert!(!is_affected(a, &c("1.2.1")));
        assert!(a.fixed_versions.is_empty());
    }

    #[test]
    fn no_ranges_no_versions_is_malformed() {
        let doc = json!({
            "id": "X-2", "published": "2020-01-01T00:00:00Z",
            "affected": [{"package": {"ecosystem": "npm", "name": "a"}}]
        });
        let mut w = Vec::new();
        let err = advisories_from_document(&doc, None, &mut w).unwrap_err();
        assert!(matches!(err, AdvisoryError::MalformedDocument { id, .. } if id == "X-2"));
        let load = load_osv([&doc], None);
        assert_eq!(load.warnings.len(), 1);
        assert!(load.store.is_empty());
    }

    #[test]
    fn skips_withdrawn_foreign_and_unparseable() {
        let withdrawn = json!({
            "id": "W", "published": "2020-01-01T00:00:00Z", "withdrawn": "2020-02-01T00:00:00Z",
            "affected": [{"package": {"ecosystem": "npm", "name": "a"}, "versions": ["1.0.0"]}]
        });
        let foreign = json!({
            "id": "F", "published": "2020-01-01T00:00:00Z",
            "affected": [{"package": {"ecosystem": "Go", "name": "a"}, "versions": ["1.0.0"]}]
        });
        let bad_range = json!({
            "id": "B", "published": "2020-01-01T00:00:00Z",
            "affected": [{"package": {"ecosystem": "npm", "name": "a"},
                "ranges": [{"type": "SEMVER", "events": [{"introduced": "not.a.version"}]}]}]
        });
        let load = load_osv([&withdrawn, &foreign, &bad_range], None);
        assert_eq!(load.warnings.len(), 3);
        assert!(load.store.is_empty());

        let only_pypi: BTreeSet<_> = [Ecosystem::PyPI].into();
        let doc = vite_doc();
        let load = load_osv([&doc], Some(&only_pypi));
        assert_eq!(load.warnings.len(), 1);
        assert!(load.store.is_empty());
    }

    #[test]
    fn store_indexes_by_package() {
        let mk = |id: &str, name: &str| {
            json!({"id": id, "published": "2020-01-01T00:00:00Z",
                "affected": [{"package": {"ecosystem": "npm", "name": name}, "versions": ["1.0.0"]}]})
        };
        let docs = [mk("A1", "a"), mk("A2", "a"), mk("B1", "b")];
        let load = load_osv(docs.iter(), None);
        let a = PackageId::new(Ecosystem::Npm, "a").unwrap();
        let b = PackageId::new(Ecosystem::Npm, "b").unwrap();
        assert_eq!(load.store.get(&a).len(), 2);
        assert_eq!(load.store.get(&b).len(), 1);
        assert_eq!(load.store.len(), 3);
        assert_eq!(load.documents_loaded, 3);
    }

    #[test]
    fn fix_timing_and_events() {
        let dep = PackageId::new(Ecosystem::Npm, "dep").unwrap();
        let t = |d| Timestamp::from_ymd(2020, 1, d).unwrap();
        let (idx, _) = ReleaseIndex::from_releases([
            PackageRelease { pkg: dep.clone(), version: v("2.0.0"), released_at: t(1) },
            PackageRelease { pkg: dep.clone(), version: v("2.0.1"), released_at: t(10) },
        ]);
        let range = AffectedRange {
            introduced: Some(v("1.0.7")),
            end: RangeEnd::Fixed(v("2.0.1")),
        };
        let a = Advisory::new("T-1", dep.clone(), vec![range], vec![], t(5));
        assert!(fix_available_at(&a, &idx, t(10)));
        assert!(!fix_available_at(&a, &idx, t(9)));
        let unfixed = Advisory::new("T-2", dep.clone(), vec![], vec![v("2.0.0")], t(5));
        assert!(!fix_available_at(&unfixed, &idx, t(30)));

        let store = AdvisoryStore::from_advisories([a.clone()]);
        assert_eq!(advisory_events_for(&store, &idx, &dep), vec![t(5), t(10)]);
        let store = AdvisoryStore::from_advisories([a, unfixed]);
        assert_eq!(advisory_events_for(&store, &idx, &dep), vec![t(5), t(10)]);
        let other = PackageId::new(Ecosystem::Npm, "other").unwrap();
        assert!(advisory_events_for(&store, &idx, &other).is_empty());
    }
}
