//! Tables derived from a metrics.csv file: descriptive statistics, ECDF and
//! QQ points, correlations, subsampled test p-values and exponential fits.

use super::MetricsRow;
use crate::stats::{
    correlations, describe, ecdf_points, fit_exponential, qq_pairs, subsample_protocol,
    StatsConfig, StatsError,
};

/// Which metrics.csv columns form the samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleColumn {
    #[default]
    Days,
    Ratio,
}

/// TOOD over every package; PFET over the packages that have one; and the
/// per-package pairs for packages with both.
pub struct Samples {
    pub tood: Vec<f64>,
    pub pfet: Vec<f64>,
    pub paired: (Vec<f64>, Vec<f64>),
}

pub fn samples(rows: &[MetricsRow], column: SampleColumn) -> Samples {
    let pick = |r: &MetricsRow| match column {
        SampleColumn::Days => (r.tood_days, r.pfet_days),
        SampleColumn::Ratio => (r.tood_ratio, r.pfet_ratio),
    };
    let tood: Vec<f64> = rows.iter().map(|r| pick(r).0).collect();
    let paired: (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| {
            let (t, p) = pick(r);
            p.map(|p| (t, p))
        })
        .unzip();
    Samples {
        tood,
        pfet: paired.1.clone(),
        paired,
    }
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory CSV");
    for row in rows {
        w.write_record(&row).expect("in-memory CSV");
    }
    w.into_inner().expect("in-memory CSV")
}

fn num(x: f64) -> String {
    x.to_string()
}

fn note(e: &StatsError) -> String {
    e.to_string()
}

pub fn describe_csv(s: &Samples) -> Vec<u8> {
    let rows = [("tood", &s.tood), ("pfet", &s.pfet)]
        .into_iter()
        .map(|(label, v)| match describe(v) {
            Ok(d) => vec![
                label.into(),
                d.count.to_string(),
                num(d.mean),
                num(d.stddev),
                num(d.min),
                num(d.max),
            ],
            Err(_) => vec![label.into(), "0".into(), String::new(), String::new(), String::new(), String::new()],
        })
        .collect();
    csv_bytes(&["sample", "count", "mean", "stddev", "min", "max"], rows)
}

pub fn ecdf_csv(s: &Samples) -> Vec<u8> {
    let mut rows = Vec::new();
    for (label, v) in [("tood", &s.tood), ("pfet", &s.pfet)] {
        for (x, f) in ecdf_points(v).unwrap_or_default() {
            rows.push(vec![label.into(), num(x), num(f)]);
        }
    }
    csv_bytes(&["sample", "value", "cumulative_fraction"], rows)
}

pub fn qq_csv(s: &Samples, quantiles: usize) -> Vec<u8> {
    let rows = qq_pairs(&s.tood, &s.pfet, quantiles)
        .unwrap_or_default()
        .into_iter()
        .enumerate()
        .map(|(k, (a, b))| vec![num(k as f64 / (quantiles - 1) as f64), num(a), num(b)])
        .collect();
    csv_bytes(&["probability", "tood", "pfet"], rows)
}

pub fn correlations_csv(s: &Samples) -> Vec<u8> {
    let (a, b) = &s.paired;
    let row = match correlations(a, b) {
        Ok(c) => vec![
            a.len().to_string(),
            num(c.pearson),
            num(c.spearman),
            num(c.kendall_tau_b),
            String::new(),
        ],
        Err(e) => vec![a.len().to_string(), String::new(), String::new(), String::new(), note(&e)],
    };
    csv_bytes(&["n", "pearson", "spearman", "kendall_tau_b", "note"], vec![row])
}

pub fn subsample_csv(s: &Samples, cfg: &StatsConfig) -> Result<Vec<u8>, StatsError> {
    let rows = match subsample_protocol(&s.tood, &s.pfet, cfg) {
        Ok(cells) => cells
            .into_iter()
            .map(|c| {
                let threshold = c.threshold.map_or_else(|| "all".to_string(), num);
                let mut row = vec![threshold, c.sample_size.to_string(), c.test.to_string()];
                match c.outcome {
                    Ok(st) => row.extend([
                        num(st.median_p),
                        num(st.rejection_fraction),
                        st.repetitions.to_string(),
                        String::new(),
                    ]),
                    Err(e) => row.extend([String::new(), String::new(), "0".into(), note(&e)]),
                }
                row
            })
            .collect(),
        Err(StatsError::EmptyInput) => Vec::new(),
        Err(e) => return Err(e),
    };
    Ok(csv_bytes(
        &["max_tood", "sample_size", "test", "median_p", "rejection_fraction", "repetitions", "note"],
        rows,
    ))
}

pub fn fit_csv(s: &Samples) -> Vec<u8> {
    let rows = [("tood", &s.tood), ("pfet", &s.pfet)]
        .into_iter()
        .map(|(label, v)| match fit_exponential(v) {
            Ok(f) => vec![
                label.into(),
                f.n.to_string(),
                num(f.rate),
                num(f.ks_statistic),
                num(f.ks_gof_p),
                "rate estimated from the same data; p-value is optimistic".into(),
            ],
            Err(e) => vec![label.into(), v.len().to_string(), String::new(), String::new(), String::new(), note(&e)],
        })
        .collect();
    csv_bytes(&["sample", "n", "rate", "ks_statistic", "ks_gof_p", "note"], rows)
}

/// Long-format sample values for external tools.
pub fn samples_csv(rows: &[MetricsRow], column: SampleColumn) -> Vec<u8> {
    let mut out = Vec::new();
    for r in rows {
        let (t, p) = match column {
            SampleColumn::Days => (r.tood_days, r.pfet_days),
            SampleColumn::Ratio => (r.tood_ratio, r.pfet_ratio),
        };
        out.push(vec!["tood".into(), r.ecosystem.to_string(), r.name.clone(), num(t)]);
        if let Some(p) = p {
            out.push(vec!["pfet".into(), r.ecosystem.to_string(), r.name.clone(), num(p)]);
        }
    }
    csv_bytes(&["sample", "ecosystem", "name", "value"], out)
}

/// Every stats table keyed by output file name.
pub fn stats_report(
    rows: &[MetricsRow],
    column: SampleColumn,
    cfg: &StatsConfig,
    quantiles: usize,
) -> Result<Vec<(&'static str, Vec<u8>)>, StatsError> {
    let s = samples(rows, column);
    Ok(vec![
        ("describe.csv", describe_csv(&s)),
        ("ecdf.csv", ecdf_csv(&s)),
        ("qq.csv", qq_csv(&s, quantiles.max(2))),
        ("correlations.csv", correlations_csv(&s)),
        ("subsample.csv", subsample_csv(&s, cfg)?),
    ])
}
