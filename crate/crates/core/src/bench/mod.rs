//! Multi-trial benchmark harness: per-trial CSVs, a summary table with medians
//! and central ranges, and plot series.
//!
//! Trial `i` uses seed `base_seed + i` for data, pretraining and unlearning.

mod stats;
mod suites;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use stats::{central_range, median, summarize, SummaryRow};
pub use suites::*;

use crate::error::{Error, Result};
use crate::io::f17;

/// Environment variable capping bench parallelism when `--jobs` is absent.
pub const THREADS_ENV: &str = "UNLEARN_KIT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Poison,
    Erasure,
    Collapse,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Poison => "poison",
            Suite::Erasure => "erasure",
            Suite::Collapse => "collapse",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poison" => Ok(Suite::Poison),
            "erasure" => Ok(Suite::Erasure),
            "collapse" => Ok(Suite::Collapse),
            other => Err(Error::config(
                "suite",
                format!("unknown suite `{other}` (expected poison, erasure or collapse)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub method: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub series: String,
    pub x: f64,
    pub y: f64,
}

impl PlotPoint {
    pub fn new(series: &str, x: f64, y: f64) -> Self {
        Self {
            series: series.into(),
            x,
            y,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub suite: Suite,
    pub trials: usize,
    pub base_seed: u64,
    /// Worker threads; falls back to `UNLEARN_KIT_THREADS`, then all cores.
    pub jobs: Option<usize>,
    pub out_dir: PathBuf,
    /// Unlearning epochs for the poison suite (10, 100 or 1000).
    pub poison_epochs: usize,
}

impl BenchOptions {
    pub fn new(suite: Suite, trials: usize, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            suite,
            trials,
            base_seed: 0,
            jobs: None,
            out_dir: out_dir.into(),
            poison_epochs: 1000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchOutput {
    pub trials_csv: PathBuf,
    pub summary_csv: PathBuf,
    pub plot_csv: PathBuf,
    pub rows: Vec<TrialRow>,
    pub summary: Vec<SummaryRow>,
}

pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    base_seed.wrapping_add(trial as u64)
}

fn resolve_jobs(jobs: Option<usize>) -> Result<usize> {
    if let Some(j) = jobs {
        return if j == 0 {
            Err(Error::config("jobs", "must be at least 1"))
        } else {
            Ok(j)
        };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::config(
                THREADS_ENV,
                format!("expected a positive integer, got `{v}`"),
            )),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs every trial of the suite, writing `trials/trial_NNNN.csv` as each
/// finishes, then the merged `trials.csv`, `summary.csv` and `plot.csv`.
pub fn run_bench(opts: &BenchOptions) -> Result<BenchOutput> {
    if opts.trials == 0 {
        return Err(Error::config("trials", "must be at least 1"));
    }
    if opts.suite == Suite::Poison {
        poison_configs(opts.poison_epochs, 0)?;
    }
    let jobs = resolve_jobs(opts.jobs)?;
    let trial_dir = opts.out_dir.join("trials");
    fs::create_dir_all(&trial_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    info!(
        "{} suite: {} trials on {jobs} threads",
        opts.suite, opts.trials
    );

    let results: Vec<(Vec<TrialRow>, Vec<PlotPoint>)> = pool.install(|| {
        (0..opts.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = trial_seed(opts.base_seed, trial);
                let out = match opts.suite {
                    Suite::Poison => poison_trial(trial, seed, opts.poison_epochs, trial == 0)?,
                    Suite::Erasure => erasure_trial(trial, seed)?,
                    Suite::Collapse => collapse_trial(trial, seed)?,
                };
                write_trials(&trial_dir.join(format!("trial_{trial:04}.csv")), &out.0)?;
                info!("trial {trial} (seed {seed}) done");
                Ok(out)
            })
            .collect::<Result<_>>()
    })?;

    let mut rows = Vec::new();
    let mut plot = Vec::new();
    for (r, p) in results {
        rows.extend(r);
        plot.extend(p);
    }
    let trials_csv = opts.out_dir.join("trials.csv");
    let summary_csv = opts.out_dir.join("summary.csv");
    let plot_csv = opts.out_dir.join("plot.csv");
    write_trials(&trials_csv, &rows)?;
    let summary = summarize(&rows);
    write_summary(&summary_csv, &summary)?;
    write_plot(&plot_csv, &plot)?;
    Ok(BenchOutput {
        trials_csv,
        summary_csv,
        plot_csv,
        rows,
        summary,
    })
}

/// Columns `trial,seed,method,metric,value`.
pub fn write_trials(path: &Path, rows: &[TrialRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["trial", "seed", "method", "metric", "value"])?;
    for r in rows {
        w.write_record([
            r.trial.to_string(),
            r.seed.to_string(),
            r.method.clone(),
            r.metric.clone(),
            f17(r.value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trials(path: &Path) -> Result<Vec<TrialRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let bad = |what: &str, v: &str| {
        Error::InvalidArgument(format!("bad {what} `{v}` in {}", path.display()))
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        rows.push(TrialRow {
            trial: field(0).parse().map_err(|_| bad("trial", field(0)))?,
            seed: field(1).parse().map_err(|_| bad("seed", field(1)))?,
            method: field(2).to_string(),
            metric: field(3).to_string(),
            value: field(4).parse().map_err(|_| bad("value", field(4)))?,
        });
    }
    Ok(rows)
}

/// Columns `method,metric,trials,median,central_lo,central_hi`.
pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "method",
        "metric",
        "trials",
        "median",
        "central_lo",
        "central_hi",
    ])?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.metric.clone(),
            r.trials.to_string(),
            f17(r.median),
            f17(r.central_lo),
            f17(r.central_hi),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `series,x,y`.
pub fn write_plot(path: &Path, points: &[PlotPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["series", "x", "y"])?;
    for p in points {
        w.write_record([p.series.clone(), f17(p.x), f17(p.y)])?;
    }
    w.flush()?;
    Ok(())
}

/// `a` Pareto-dominates `b` on (higher-is-better, lower-is-better) pairs.
pub fn pareto_dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 >= b.0 && a.1 <= b.1 && (a.0 > b.0 || a.1 < b.1)
}
