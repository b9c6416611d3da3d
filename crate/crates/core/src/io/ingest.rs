use std::collections::{BTreeSet, HashSet};
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{IoError, RunConfig};
use crate::advisory::{load_osv, AdvisoryStore};
use crate::model::{
    parse_requirement, parse_version, Declaration, DependencyEdge, DependencyIndex,
    DependencyKind, Ecosystem, PackageId, PackageRelease, SemVersion,
};
use crate::resolver::{ReleaseIndex, ReleaseIndexBuilder};
use crate::time::Timestamp;
use crate::warning::{Stage, WarningLedger, WarningRecord};

const RELEASE_COLUMNS: [&str; 4] = ["ecosystem", "name", "version", "released_at"];
const DEP_COLUMNS: [&str; 6] = ["ecosystem", "from_name", "from_version", "to_name", "requirement", "kind"];

/// Row accounting per input file. For each file,
/// `rows = processed + warnings`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestStats {
    pub release_rows: usize,
    pub release_rows_processed: usize,
    pub release_row_warnings: usize,
    pub dep_rows: usize,
    pub dep_rows_processed: usize,
    pub dep_row_warnings: usize,
    pub advisory_documents: usize,
    pub advisory_documents_loaded: usize,
}

#[derive(Debug)]
pub struct Dataset {
    pub releases: ReleaseIndex,
    /// Every parsed edge of any kind, in input order.
    pub edges: Vec<DependencyEdge>,
    pub deps: DependencyIndex,
    pub advisories: AdvisoryStore,
    pub ledger: WarningLedger,
    pub stats: IngestStats,
}

impl Dataset {
    pub fn cutoff_or_latest(&self, cutoff: Option<Timestamp>) -> Option<Timestamp> {
        cutoff.or_else(|| self.releases.max_timestamp())
    }
}

fn open_csv(path: &Path, required: &[&str]) -> Result<(csv::Reader<File>, Vec<usize>), IoError> {
    let file = File::open(path).map_err(|e| IoError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| IoError::format(path, format!("unreadable header: {e}")))?
        .clone();
    let columns = required
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| IoError::format(path, format!("missing column {name:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((reader, columns))
}

fn field(record: &csv::StringRecord, col: usize) -> &str {
    record.get(col).unwrap_or("")
}

/// Reads the inputs named by `config` into in-memory stores. Schema problems
/// (unreadable file, missing column) abort; row problems become warnings.
pub fn ingest(config: &RunConfig) -> Result<Dataset, IoError> {
    let eco_filter = config.ecosystems.as_ref();
    let keep = |eco: Ecosystem| eco_filter.is_none_or(|set| set.contains(&eco));
    let mut ledger = WarningLedger::new();
    let mut stats = IngestStats::default();

    let mut builder = ReleaseIndexBuilder::new().include_prereleases(config.include_prereleases);
    let (mut reader, cols) = open_csv(&config.releases, &RELEASE_COLUMNS)?;
    for (line, record) in reader.records().enumerate() {
        stats.release_rows += 1;
        let subject = |r: &csv::StringRecord| {
            format!("releases.csv:{} {}@{}", line + 2, field(r, cols[1]), field(r, cols[2]))
        };
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                ledger.push(Stage::ParseVersion, format!("releases.csv:{}", line + 2), e.to_string());
                continue;
            }
        };
        match release_row(&record, &cols, &keep) {
            Ok(None) => stats.release_rows_processed += 1,
            Ok(Some(rel)) => match builder.insert(rel) {
                Ok(()) => stats.release_rows_processed += 1,
                Err(dup) => ledger.push(Stage::ParseVersion, subject(&record), dup.to_string()),
            },
            Err(reason) => ledger.push(Stage::ParseVersion, subject(&record), reason),
        }
    }
    stats.release_row_warnings = stats.release_rows - stats.release_rows_processed;
    let releases = builder.build();

    let mut deps = DependencyIndex::new();
    let mut edges = Vec::new();
    let mut seen_edges: HashSet<(PackageId, SemVersion, PackageId, DependencyKind)> = HashSet::new();
    let (mut reader, cols) = open_csv(&config.deps, &DEP_COLUMNS)?;
    for (line, record) in reader.records().enumerate() {
        stats.dep_rows += 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                ledger.push(Stage::ParseRequirement, format!("deps.csv:{}", line + 2), e.to_string());
                continue;
            }
        };
        let subject = format!(
            "deps.csv:{} {}@{} -> {}",
            line + 2,
            field(&record, cols[1]),
            field(&record, cols[2]),
            field(&record, cols[3])
        );
        match dep_row(&record, &cols, &keep, &releases) {
            Err((stage, reason)) => ledger.push(stage, subject, reason),
            Ok(DepRow::Skipped) => stats.dep_rows_processed += 1,
            Ok(DepRow::Unparseable { from, version, to, text, reason }) => {
                let key = (from.clone(), version.clone(), to.clone(), DependencyKind::Regular);
                if seen_edges.insert(key) {
                    deps.declare(from, version, to, Declaration::Unparseable(text));
                }
                ledger.push(Stage::ParseRequirement, subject, reason);
            }
            Ok(DepRow::Edge(edge)) => {
                let key = (
                    edge.from_pkg.clone(),
                    edge.from_version.clone(),
                    edge.to_pkg.clone(),
                    edge.kind,
                );
                if !seen_edges.insert(key) {
                    ledger.push(Stage::ParseRequirement, subject, "duplicate declaration");
                    continue;
                }
                deps.insert(edge.clone());
                stats.dep_rows_processed += 1;
                edges.push(edge);
            }
        }
    }
    stats.dep_row_warnings = stats.dep_rows - stats.dep_rows_processed;

    let advisories = match &config.advisories {
        None => AdvisoryStore::default(),
        Some(dir) => {
            let (docs, warnings) = read_advisory_dir(dir)?;
            stats.advisory_documents = docs.len();
            ledger.extend(warnings);
            let present = ecosystems_of(&releases);
            let load = load_osv(docs.iter(), Some(eco_filter.unwrap_or(&present)));
            stats.advisory_documents_loaded = load.documents_loaded;
            ledger.extend(load.warnings);
            load.store
        }
    };

    Ok(Dataset {
        releases,
        edges,
        deps,
        advisories,
        ledger,
        stats,
    })
}

fn parse_package(eco_text: &str, name: &str) -> Result<PackageId, String> {
    let eco: Ecosystem = eco_text.parse().map_err(|e| format!("{e}"))?;
    PackageId::new(eco, name).map_err(|e| e.to_string())
}

fn release_row(
    r: &csv::StringRecord,
    cols: &[usize],
    keep: &impl Fn(Ecosystem) -> bool,
) -> Result<Option<PackageRelease>, String> {
    let pkg = parse_package(field(r, cols[0]), field(r, cols[1]))?;
    if !keep(pkg.ecosystem) {
        return Ok(None);
    }
    let version = parse_version(pkg.ecosystem, field(r, cols[2])).map_err(|e| e.to_string())?;
    let ts_text = field(r, cols[3]);
    if ts_text.is_empty() {
        return Err("missing released_at".into());
    }
    let released_at = Timestamp::parse(ts_text).map_err(|e| e.to_string())?;
    Ok(Some(PackageRelease {
        pkg,
        version,
        released_at,
    }))
}

enum DepRow {
    /// Filtered out by ecosystem.
    Skipped,
    Edge(DependencyEdge),
    /// A regular edge whose requirement text failed to parse.
    Unparseable {
        from: PackageId,
        version: SemVersion,
        to: PackageId,
        text: String,
        reason: String,
    },
}

fn dep_row(
    r: &csv::StringRecord,
    cols: &[usize],
    keep: &impl Fn(Ecosystem) -> bool,
    releases: &ReleaseIndex,
) -> Result<DepRow, (Stage, String)> {
    let req_err = |reason: String| (Stage::ParseRequirement, reason);
    let from = parse_package(field(r, cols[0]), field(r, cols[1])).map_err(req_err)?;
    if !keep(from.ecosystem) {
        return Ok(DepRow::Skipped);
    }
    let eco = from.ecosystem;
    let to = PackageId::new(eco, field(r, cols[3])).map_err(|e| req_err(e.to_string()))?;
    let version = parse_version(eco, field(r, cols[2]))
        .map_err(|e| (Stage::ParseVersion, e.to_string()))?;
    let kind_text = field(r, cols[5]);
    let kind: DependencyKind = if kind_text.is_empty() {
        DependencyKind::Regular
    } else {
        kind_text.parse().map_err(|e| req_err(format!("{e}")))?
    };
    if from == to {
        return Err(req_err(format!("{from} cannot depend on itself")));
    }
    if releases.release_time(&from, &version).is_none() {
        return Err((Stage::Timeline, "importer release has no release record".into()));
    }
    let text = field(r, cols[4]);
    match parse_requirement(eco, text) {
        Ok(requirement) => DependencyEdge::new(from, version, to, requirement, kind)
            .map(DepRow::Edge)
            .map_err(|e| req_err(e.to_string())),
        Err(e) if kind == DependencyKind::Regular => Ok(DepRow::Unparseable {
            from,
            version,
            to,
            text: text.to_string(),
            reason: e.to_string(),
        }),
        Err(e) => Err(req_err(e.to_string())),
    }
}

/// Loads every `*.json` file in `dir`, in file-name order. A file may hold one
/// document or an array of documents. Unparseable files become warnings.
fn read_advisory_dir(dir: &Path) -> Result<(Vec<serde_json::Value>, Vec<WarningRecord>), IoError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| IoError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut docs = Vec::new();
    let mut warnings = Vec::new();
    for path in paths {
        let text = fs::read_to_string(&path).map_err(|e| IoError::io(&path, e))?;
        match serde_json::from_str::<serde_json::Value>(&text) {
            Ok(serde_json::Value::Array(items)) => docs.extend(items),
            Ok(doc) => docs.push(doc),
            Err(e) => warnings.push(WarningRecord::new(
                Stage::Advisory,
                path.display().to_string(),
                format!("invalid JSON: {e}"),
            )),
        }
    }
    Ok((docs, warnings))
}

fn ecosystems_of(idx: &ReleaseIndex) -> BTreeSet<Ecosystem> {
    idx.package_ids().into_iter().map(|p| p.ecosystem).collect()
}
