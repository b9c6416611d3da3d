use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::IoError;
use crate::metrics::PackageMetrics;
use crate::model::Ecosystem;
use crate::timeline::IntervalRecord;
use crate::warning::WarningRecord;

pub const METRICS_HEADER: [&str; 10] = [
    "ecosystem",
    "name",
    "n_deps",
    "total_days",
    "tood_days",
    "tood_ratio",
    "tood_ratio_eq2",
    "pfet_days",
    "pfet_ratio",
    "pfet_ratio_eq4",
];

#[derive(Serialize)]
struct IntervalRow<'a> {
    ecosystem: &'a str,
    from_pkg: &'a str,
    from_version: String,
    to_pkg: &'a str,
    requirement: Option<&'a str>,
    resolved: Option<String>,
    highest: Option<String>,
    start: String,
    end: String,
    is_out_of_date: bool,
    is_exposed: bool,
    warning: Option<&'static str>,
}

/// One JSON object per line.
pub fn interval_jsonl<'a>(records: impl IntoIterator<Item = &'a IntervalRecord>) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        let row = IntervalRow {
            ecosystem: r.from_pkg.ecosystem.as_str(),
            from_pkg: r.from_pkg.name(),
            from_version: r.from_version.text(),
            to_pkg: r.to_pkg.name(),
            requirement: r.requirement_text(),
            resolved: r.resolved.as_ref().map(|v| v.text()),
            highest: r.highest.as_ref().map(|v| v.text()),
            start: r.start.to_string(),
            end: r.end.to_string(),
            is_out_of_date: r.is_out_of_date,
            is_exposed: r.is_exposed,
            warning: r.warning.map(|w| w.as_str()),
        };
        serde_json::to_writer(&mut out, &row).expect("in-memory JSON serialization");
        out.push(b'\n');
    }
    out
}

fn csv_bytes<I, R>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory CSV");
    for row in rows {
        w.write_record(row).expect("in-memory CSV");
    }
    w.into_inner().expect("in-memory CSV")
}

pub fn metrics_csv(metrics: &[PackageMetrics]) -> Vec<u8> {
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    csv_bytes(
        &METRICS_HEADER,
        metrics.iter().map(|m| {
            [
                m.pkg.ecosystem.as_str().to_string(),
                m.pkg.name().to_string(),
                m.n_deps.to_string(),
                m.total_days.to_string(),
                m.tood.days.to_string(),
                m.tood.ratio.to_string(),
                m.tood.ratio_per_dep.to_string(),
                opt(m.pfet.map(|p| p.days)),
                opt(m.pfet.map(|p| p.ratio)),
                opt(m.pfet.map(|p| p.ratio_per_dep)),
            ]
        }),
    )
}

pub fn warnings_csv(records: &[WarningRecord]) -> Vec<u8> {
    csv_bytes(
        &["stage", "subject", "reason"],
        records
            .iter()
            .map(|w| [w.stage.as_str(), w.subject.as_str(), w.reason.as_str()]),
    )
}

/// Writes every file or none: contents are prepared by the caller and any
/// file already written is removed if a later write fails.
pub fn write_outputs(dir: &Path, files: &[(&str, Vec<u8>)]) -> Result<Vec<PathBuf>, IoError> {
    fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(IoError::io(&path, e));
        }
        written.push(path);
    }
    Ok(written)
}

/// One row of a metrics.csv file.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub ecosystem: Ecosystem,
    pub name: String,
    pub n_deps: usize,
    pub total_days: f64,
    pub tood_days: f64,
    pub tood_ratio: f64,
    pub pfet_days: Option<f64>,
    pub pfet_ratio: Option<f64>,
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>, IoError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => IoError::io(path, io),
        other => IoError::format(path, format!("{other:?}")),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| IoError::format(path, e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IoError::format(path, format!("missing column {name:?}")))
    };
    let cols = [
        col("ecosystem")?,
        col("name")?,
        col("n_deps")?,
        col("total_days")?,
        col("tood_days")?,
        col("tood_ratio")?,
        col("pfet_days")?,
        col("pfet_ratio")?,
    ];
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let r = record.map_err(|e| IoError::format(path, e.to_string()))?;
        let bad = |what: &str| IoError::format(path, format!("line {line}: bad {what}"));
        let get = |c: usize| r.get(c).unwrap_or("").trim();
        let num = |c: usize, what: &str| get(c).parse::<f64>().map_err(|_| bad(what));
        let opt = |c: usize, what: &str| match get(c) {
            "" => Ok(None),
            s => s.parse::<f64>().map(Some).map_err(|_| bad(what)),
        };
        rows.push(MetricsRow {
            ecosystem: get(cols[0]).parse().map_err(|_| bad("ecosystem"))?,
            name: get(cols[1]).to_string(),
            n_deps: get(cols[2]).parse().map_err(|_| bad("n_deps"))?,
            total_days: num(cols[3], "total_days")?,
            tood_days: num(cols[4], "tood_days")?,
            tood_ratio: num(cols[5], "tood_ratio")?,
            pfet_days: opt(cols[6], "pfet_days")?,
            pfet_ratio: opt(cols[7], "pfet_ratio")?,
        });
    }
    Ok(rows)
}
