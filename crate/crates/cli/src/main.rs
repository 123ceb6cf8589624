//! `unlearn-kit`: train initial models, run unlearning methods, benchmark
//! suites and the theorem-oracle verify suite.
//!
//! Config errors exit with status 2 and name the offending field; any other
//! failure (including a diverged run) exits with status 1.

mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use log::info;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use unlearn_core::bench::{run_bench, BenchOptions, Suite};
use unlearn_core::models::{
    loss, train, Checkpoint, Init, LabeledDataset, LossKind, NetworkSpec, OptimizerKind,
    TrainConfig,
};
use unlearn_core::tasks::Task;
use unlearn_core::unlearners::{run_unlearning, Method, UnlearnConfig};
use unlearn_core::verify::{run_verify, Mutation};
use unlearn_core::Error;

use config::{apply_overrides, canonicalize, config_error, from_object, load_object};

#[derive(Parser)]
#[command(name = "unlearn-kit", version, about = "Machine unlearning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the initial model on the full dataset of a task.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// `key=value` override of a config field.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Run one unlearning method from a checkpoint.
    Unlearn {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Dataset CSV; defaults to `data.csv` beside the checkpoint.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Run a benchmark suite over several seeded trials.
    Bench {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Base seed; trial i uses base + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads; falls back to UNLEARN_KIT_THREADS, then the core count.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, default_value = "bench-out")]
        out: PathBuf,
        /// Unlearning epochs for the poison suite (10, 100 or 1000).
        #[arg(long, default_value_t = 1000)]
        epochs: usize,
    },
    /// Run the theorem-oracle suite and print a pass/fail table.
    Verify {
        /// Inject a known defect to check that the suite notices.
        #[arg(long, default_value = "none", hide = true)]
        mutate: String,
    },
}

/// Training job as read from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainJob {
    task: Task,
    /// Defaults to the task's architecture.
    #[serde(default)]
    spec: Option<NetworkSpec>,
    seed: u64,
    epochs: usize,
    batch_size: usize,
    lr: f64,
    #[serde(default)]
    weight_decay: Option<f64>,
    #[serde(default)]
    early_stop_loss: Option<f64>,
    #[serde(default)]
    optimizer: OptimizerKind,
    #[serde(default)]
    init: Init,
}

impl TrainJob {
    fn train_config(&self) -> TrainConfig {
        let mut cfg = TrainConfig::new(self.epochs, self.batch_size, self.lr, self.seed);
        if let Some(wd) = self.weight_decay {
            cfg.weight_decay = wd;
        }
        cfg.early_stop_loss = self.early_stop_loss;
        cfg.optimizer = self.optimizer;
        cfg.init = self.init;
        cfg
    }
}

#[derive(Debug, Serialize)]
struct TrainReport {
    task: Task,
    seed: u64,
    job: TrainJob,
    epochs_run: usize,
    /// Mean loss over the full dataset at the final parameters.
    #[serde(serialize_with = "unlearn_core::io::serialize_f17")]
    train_loss: f64,
    #[serde(serialize_with = "unlearn_core::io::serialize_f17_map")]
    metrics: BTreeMap<String, f64>,
    #[serde(serialize_with = "unlearn_core::io::serialize_f17")]
    wall_seconds: f64,
    checkpoint: String,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train {
            config,
            seed,
            out,
            sets,
        } => cmd_train(config.as_deref(), seed, &out, &sets),
        Command::Unlearn {
            config,
            checkpoint,
            data,
            method,
            seed,
            out,
            sets,
        } => cmd_unlearn(
            config.as_deref(),
            &checkpoint,
            data.as_deref(),
            method.as_deref(),
            seed,
            &out,
            &sets,
        ),
        Command::Bench {
            suite,
            trials,
            seed,
            jobs,
            out,
            epochs,
        } => cmd_bench(&suite, trials, seed, jobs, &out, epochs),
        Command::Verify { mutate } => cmd_verify(&mutate),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidConfig { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn create_dir(out: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

fn cmd_train(
    config: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
    sets: &[String],
) -> Result<ExitCode, Error> {
    let mut map = load_object(config)?;
    apply_overrides(&mut map, sets)?;
    if let Some(seed) = seed {
        map.insert("seed".into(), Value::from(seed));
    }
    canonicalize::<Task>(&mut map, "task")?;
    let job: TrainJob = from_object(map)?;
    let spec = job.spec.clone().unwrap_or_else(|| job.task.spec());
    let data = job.task.dataset(job.seed)?;
    if spec.input_dim != data.input_dim() {
        return Err(config_error(
            "spec",
            format!(
                "input_dim {} does not match the {} task ({})",
                spec.input_dim,
                job.task,
                data.input_dim()
            ),
        ));
    }

    let start = Instant::now();
    let cfg = job.train_config();
    info!(
        "training {} model on {} samples for up to {} epochs",
        job.task,
        data.len(),
        cfg.epochs
    );
    let kind = LossKind::for_spec(&spec);
    let outcome = train(&spec, &data, kind, &cfg)?;
    let train_loss = loss(&spec, &outcome.theta, &data.full_batch(), kind)?;
    let metrics = if spec == job.task.spec() {
        job.task.metrics(&spec, &outcome.theta, &data, job.seed)?
    } else {
        BTreeMap::new()
    };

    create_dir(out)?;
    let ckpt_path = out.join("checkpoint.json");
    Checkpoint::new(&spec, &outcome.theta, job.seed, outcome.epochs_run).save(&ckpt_path)?;
    data.write_csv(&out.join("data.csv"))?;
    let report = TrainReport {
        task: job.task,
        seed: job.seed,
        epochs_run: outcome.epochs_run,
        train_loss,
        metrics,
        wall_seconds: start.elapsed().as_secs_f64(),
        checkpoint: ckpt_path.display().to_string(),
        job,
    };
    std::fs::write(
        out.join("train_report.json"),
        serde_json::to_string_pretty(&report)? + "\n",
    )?;
    info!(
        "{} epochs, train loss {:.3e}",
        report.epochs_run, report.train_loss
    );
    println!("{}", ckpt_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_unlearn(
    config: Option<&Path>,
    checkpoint: &Path,
    data: Option<&Path>,
    method: Option<&str>,
    seed: Option<u64>,
    out: &Path,
    sets: &[String],
) -> Result<ExitCode, Error> {
    let mut map = load_object(config)?;
    apply_overrides(&mut map, sets)?;
    if let Some(m) = method {
        map.insert("method".into(), Value::from(m));
    }
    if let Some(seed) = seed {
        map.insert("seed".into(), Value::from(seed));
    }
    canonicalize::<Method>(&mut map, "method")?;
    let cfg: UnlearnConfig = from_object(map)?;
    cfg.validate()?;

    let ckpt = Checkpoint::load(checkpoint)?;
    let theta = ckpt.theta()?;
    let data_path = match data {
        Some(p) => p.to_path_buf(),
        None => checkpoint
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("data.csv"),
    };
    let dataset = LabeledDataset::read_csv(&data_path)?;
    let n_retain = dataset.retain_indices().len();
    info!(
        "accessible retain samples: {} of {} (p_retain {})",
        cfg.accessible_retain(n_retain),
        n_retain,
        cfg.p_retain
    );

    let mut outcome = run_unlearning(&ckpt.spec, &theta, &dataset, &cfg)?;
    if let Some(task) = Task::from_spec(&ckpt.spec) {
        let m = task.metrics(&ckpt.spec, &outcome.theta, &dataset, ckpt.seed)?;
        outcome.report.metrics.extend(m);
    }
    outcome.report.checkpoint = Some(checkpoint.display().to_string());

    create_dir(out)?;
    let report_path = out.join("report.json");
    std::fs::write(
        &report_path,
        serde_json::to_string_pretty(&outcome.report)? + "\n",
    )?;
    Checkpoint::new(&ckpt.spec, &outcome.theta, cfg.seed, cfg.epochs)
        .save(&out.join("unlearned.json"))?;
    for (k, v) in &outcome.report.metrics {
        info!("{k} = {v:.6}");
    }
    println!("{}", report_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(
    suite: &str,
    trials: usize,
    seed: u64,
    jobs: Option<usize>,
    out: &Path,
    epochs: usize,
) -> Result<ExitCode, Error> {
    let suite: Suite = suite.parse()?;
    if trials == 0 {
        return Err(config_error("trials", "must be at least 1"));
    }
    let mut opts = BenchOptions::new(suite, trials, out);
    opts.base_seed = seed;
    opts.jobs = jobs;
    opts.poison_epochs = epochs;
    let output = run_bench(&opts)?;
    println!(
        "{:<12} {:<16} {:>6} {:>12} {:>12} {:>12}",
        "method", "metric", "trials", "median", "central_lo", "central_hi"
    );
    for r in &output.summary {
        println!(
            "{:<12} {:<16} {:>6} {:>12.6} {:>12.6} {:>12.6}",
            r.method, r.metric, r.trials, r.median, r.central_lo, r.central_hi
        );
    }
    println!("{}", output.summary_csv.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(mutate: &str) -> Result<ExitCode, Error> {
    let mutation: Mutation = mutate.parse()?;
    let report = run_verify(mutation);
    print!("{report}");
    if report.all_passed() {
        println!("all checks passed");
        Ok(ExitCode::SUCCESS)
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect();
        println!("failed: {}", failed.join(", "));
        Ok(ExitCode::from(1))
    }
}
