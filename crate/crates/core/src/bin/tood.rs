use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tood::io::report::{fit_csv, samples, samples_csv, stats_report, SampleColumn};
use tood::io::{
    ingest, read_metrics_csv, run_pipeline, warnings_csv, write_outputs, IoError, RunConfig, Stage,
};
use tood::metrics::{compute_ttu, InclusionCriteria, TimeWindow};
use tood::stats::{StatsConfig, StatsError};
use tood::{Ecosystem, Timestamp};

#[derive(Parser)]
#[command(name = "tood", version, about = "Dependency time-out-of-date and post-fix exposure metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load the inputs and report counts and warnings.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        /// Also write warnings.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute flagged dependency intervals (intervals.jsonl).
    Resolve {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute intervals and per-package metrics (metrics.csv).
    Metrics {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        min_versions: usize,
        #[arg(long, default_value_t = 30.0)]
        min_age_days: f64,
        #[arg(long, default_value_t = 1)]
        min_deps: usize,
        /// Clip intervals to start no earlier than this instant.
        #[arg(long)]
        window_start: Option<Timestamp>,
        /// Clip intervals to end no later than this instant.
        #[arg(long)]
        window_end: Option<Timestamp>,
    },
    /// Naive time-to-update: importer release date minus the release date of
    /// the version its requirement resolves to at a given instant.
    Ttu {
        #[arg(long)]
        releases: PathBuf,
        #[arg(long)]
        deps: PathBuf,
        /// Resolution instant (RFC 3339 or YYYY-MM-DD).
        #[arg(long)]
        at: Timestamp,
        #[arg(long = "ecosystem")]
        ecosystems: Vec<Ecosystem>,
        /// Only edges from this importer name.
        #[arg(long)]
        from: Option<String>,
        /// Only edges to this dependency name.
        #[arg(long)]
        to: Option<String>,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Descriptive statistics, ECDF/QQ points, correlations and subsampled tests.
    Stats {
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        repetitions: usize,
        #[arg(long, value_delimiter = ',', default_value = "10,50,100,200,500")]
        sample_sizes: Vec<usize>,
        /// Upper bounds on sample values; "all" keeps everything.
        #[arg(long, value_delimiter = ',', default_value = "all,800,1000,2000,5000")]
        thresholds: Vec<Threshold>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 101)]
        quantiles: usize,
        /// Worker threads; 1 runs single-threaded, 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Fit an exponential distribution to each sample.
    Fit {
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the samples in long format for external tools.
    ExportSamples {
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    releases: PathBuf,
    #[arg(long)]
    deps: PathBuf,
    /// Directory of OSV advisory JSON files.
    #[arg(long)]
    advisories: Option<PathBuf>,
    /// Restrict to these ecosystems (repeatable).
    #[arg(long = "ecosystem")]
    ecosystems: Vec<Ecosystem>,
    /// End of every dependency lifetime; defaults to the latest release.
    #[arg(long)]
    cutoff: Option<Timestamp>,
    #[arg(long)]
    include_prereleases: bool,
    /// Worker threads; 1 runs single-threaded, 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl InputArgs {
    fn config(self, out: PathBuf) -> RunConfig {
        let mut cfg = RunConfig::new(self.releases, self.deps, out);
        cfg.advisories = self.advisories;
        cfg.ecosystems = ecosystem_set(self.ecosystems);
        cfg.cutoff = self.cutoff;
        cfg.include_prereleases = self.include_prereleases;
        cfg.threads = self.threads;
        cfg
    }
}

#[derive(Args)]
struct SampleArgs {
    /// A metrics.csv produced by the `metrics` command.
    #[arg(long)]
    metrics: PathBuf,
    #[arg(long, value_enum, default_value_t = Column::Days)]
    column: Column,
}

#[derive(Clone, Copy, ValueEnum)]
enum Column {
    Days,
    Ratio,
}

impl From<Column> for SampleColumn {
    fn from(c: Column) -> Self {
        match c {
            Column::Days => SampleColumn::Days,
            Column::Ratio => SampleColumn::Ratio,
        }
    }
}

#[derive(Clone, Copy)]
struct Threshold(Option<f64>);

impl std::str::FromStr for Threshold {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(Threshold(None));
        }
        s.parse::<f64>()
            .map(|v| Threshold(Some(v)))
            .map_err(|_| format!("expected a number or \"all\", got {s:?}"))
    }
}

enum CliError {
    Usage(String),
    Io(IoError),
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Io(e)
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn ecosystem_set(list: Vec<Ecosystem>) -> Option<BTreeSet<Ecosystem>> {
    (!list.is_empty()).then(|| list.into_iter().collect())
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, bytes).map_err(|e| IoError::Io {
            path: path.to_path_buf(),
            source: e,
        })?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| IoError::Io {
                    path: PathBuf::from("<stdout>"),
                    source: e,
                })?;
        }
    }
    Ok(())
}

fn ttu_csv(
    cfg: &RunConfig,
    at: Timestamp,
    from: Option<&str>,
    to: Option<&str>,
) -> Result<Vec<u8>, CliError> {
    let data = ingest(cfg)?;
    let mut edges: Vec<_> = data
        .edges
        .iter()
        .filter(|e| e.is_regular())
        .filter(|e| from.is_none_or(|n| e.from_pkg.name() == n))
        .filter(|e| to.is_none_or(|n| e.to_pkg.name() == n))
        .collect();
    edges.sort_by_key(|e| {
        (
            e.from_pkg.clone(),
            data.releases.release_time(&e.from_pkg, &e.from_version),
            e.from_version.clone(),
            e.to_pkg.clone(),
        )
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "ecosystem", "from_pkg", "from_version", "from_released_at", "to_pkg", "requirement",
        "resolved", "resolved_released_at", "ttu_days", "note",
    ];
    let csv_err = |e: csv::Error| CliError::Usage(e.to_string());
    w.write_record(header).map_err(csv_err)?;
    for e in edges {
        let from_time = data.releases.release_time(&e.from_pkg, &e.from_version);
        let resolved = data
            .releases
            .resolve_at(&e.requirement, &e.to_pkg, at)
            .ok()
            .flatten();
        let resolved_time = resolved.and_then(|v| data.releases.release_time(&e.to_pkg, v));
        let (ttu, note) = match compute_ttu(e, &data.releases, at) {
            Ok(d) => (d.to_string(), String::new()),
            Err(err) => (String::new(), err.to_string()),
        };
        w.write_record([
            e.from_pkg.ecosystem.as_str().to_string(),
            e.from_pkg.name().to_string(),
            e.from_version.text(),
            from_time.map(|t| t.to_string()).unwrap_or_default(),
            e.to_pkg.name().to_string(),
            e.requirement.source_text().to_string(),
            resolved.map(|v| v.text()).unwrap_or_default(),
            resolved_time.map(|t| t.to_string()).unwrap_or_default(),
            ttu,
            note,
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest { input, out } => {
            let cfg = input.config(out.clone().unwrap_or_default());
            let data = ingest(&cfg)?;
            let summary = serde_json::json!({
                "packages": data.releases.package_count(),
                "releases": data.releases.release_count(),
                "edges": data.edges.len(),
                "regular_declarations": data.deps.edge_count(),
                "pairs": data.deps.pair_count(),
                "advisories": data.advisories.len(),
                "warnings": data.ledger.len(),
                "warnings_by_stage": data.ledger.counts_by_stage(),
                "ingest": data.stats,
            });
            let mut text = serde_json::to_vec_pretty(&summary).expect("JSON");
            text.push(b'\n');
            emit(None, &text)?;
            if let Some(dir) = out {
                write_outputs(&dir, &[("warnings.csv", warnings_csv(data.ledger.records()))])?;
            }
        }
        Command::Resolve { input, out } => {
            let result = run_pipeline(&input.config(out), Stage::Resolve)?;
            eprintln!(
                "{} intervals over {} pairs, {} warnings",
                result.summary.intervals, result.summary.pairs_with_intervals, result.summary.warnings
            );
        }
        Command::Metrics {
            input,
            out,
            min_versions,
            min_age_days,
            min_deps,
            window_start,
            window_end,
        } => {
            let mut cfg = input.config(out);
            cfg.criteria = InclusionCriteria {
                min_versions,
                min_age_days,
                min_deps,
            };
            cfg.window = TimeWindow {
                start: window_start,
                end: window_end,
            };
            let result = run_pipeline(&cfg, Stage::Metrics)?;
            eprintln!(
                "{} packages with metrics ({} before filtering), {} warnings",
                result.metrics.len(),
                result.summary.packages_with_metrics.unwrap_or(0),
                result.summary.warnings
            );
        }
        Command::Ttu {
            releases,
            deps,
            at,
            ecosystems,
            from,
            to,
            output,
        } => {
            let mut cfg = RunConfig::new(releases, deps, PathBuf::new());
            cfg.ecosystems = ecosystem_set(ecosystems);
            let bytes = ttu_csv(&cfg, at, from.as_deref(), to.as_deref())?;
            emit(output.as_deref(), &bytes)?;
        }
        Command::Stats {
            sample,
            out,
            seed,
            repetitions,
            sample_sizes,
            thresholds,
            alpha,
            quantiles,
            threads,
        } => {
            let rows = read_metrics_csv(&sample.metrics)?;
            let cfg = StatsConfig {
                alpha,
                repetitions,
                sample_sizes,
                max_tood_thresholds: thresholds.into_iter().map(|t| t.0).collect(),
                rng_seed: seed,
                parallel: threads != 1,
                ..StatsConfig::default()
            };
            cfg.validate()?;
            if quantiles < 2 {
                return Err(CliError::Usage("--quantiles must be at least 2".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let files = pool.install(|| stats_report(&rows, sample.column.into(), &cfg, quantiles))?;
            write_outputs(&out, &files)?;
        }
        Command::Fit { sample, output } => {
            let rows = read_metrics_csv(&sample.metrics)?;
            emit(output.as_deref(), &fit_csv(&samples(&rows, sample.column.into())))?;
        }
        Command::ExportSamples { sample, output } => {
            let rows = read_metrics_csv(&sample.metrics)?;
            emit(output.as_deref(), &samples_csv(&rows, sample.column.into()))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                IoError::Invariant(_) => 3,
                IoError::Io { .. } | IoError::Format { .. } => 2,
            })
        }
    }
}
