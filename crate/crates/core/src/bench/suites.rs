//! Per-suite hyperparameters and single-trial runners.

use log::warn;

use super::{PlotPoint, TrialRow};
use crate::error::{Error, Result};
use crate::models::{forward, train, LossKind, NetworkSpec, ParamVector, TrainConfig};
use crate::tasks::{
    collapse_spec, color_accuracy, erasure_metrics, erasure_spec, erasure_testset,
    gen_label_erasure_toy, gen_representation_collapse_toy, gen_sine_poison, retrain_on_retain,
    sine_grid, sine_spec, sup_deviation, ErasureMetrics, COLLAPSE_FORGET_FRAC, COLLAPSE_N,
    ERASURE_PER_CLASS, ERASURE_PROBES_PER_CLASS, PROBE_SEED_OFFSET, SINE_FORGET, SINE_GRID,
    SINE_RETAIN,
};
use crate::unlearners::{run_unlearning, Method, UnlearnConfig};

pub const SINE_BATCH: usize = 50;

pub const ERASURE_EPOCHS: usize = 5;
pub const ERASURE_P_RETAIN: f64 = 0.05;
pub const ERASURE_BATCH: usize = 32;

pub const COLLAPSE_EPOCHS: usize = 10;
pub const COLLAPSE_P_RETAIN: f64 = 0.1;
pub const COLLAPSE_BATCH: usize = 8;

/// Initial sine model: AdamW at lr 1e-3, full batch, 20k epochs with early stop
/// once the train MSE reaches 1e-4.
pub fn sine_pretrain_config(seed: u64) -> TrainConfig {
    let mut cfg = TrainConfig::new(20_000, SINE_RETAIN + SINE_FORGET, 1e-3, seed);
    cfg.early_stop_loss = Some(1e-4);
    cfg
}

pub fn erasure_pretrain_config(seed: u64) -> TrainConfig {
    TrainConfig::new(200, 128, 1e-3, seed)
}

pub fn collapse_pretrain_config(seed: u64) -> TrainConfig {
    TrainConfig::new(250, COLLAPSE_N, 1e-3, seed)
}

/// Ground truth for the collapse task trains for fewer epochs, as the initial
/// model needs the extra budget to fit the forget samples.
pub fn collapse_retrain_config(seed: u64) -> TrainConfig {
    TrainConfig::new(100, COLLAPSE_N, 1e-3, seed)
}

fn base(method: Method, epochs: usize, eta: f64, batch: usize, seed: u64) -> UnlearnConfig {
    UnlearnConfig::new(method, epochs, eta, batch, seed)
}

/// Tuned per-method settings for the sine task at `epochs ∈ {10, 100, 1000}`.
pub fn poison_configs(epochs: usize, seed: u64) -> Result<Vec<UnlearnConfig>> {
    let b = |m, eta| base(m, epochs, eta, SINE_BATCH, seed);
    let og = |eta, lambda_reg, t_gd, gamma_reg, t_proj| UnlearnConfig {
        lambda_reg: Some(lambda_reg),
        t_gd: Some(t_gd),
        gamma_reg: Some(gamma_reg),
        t_proj: Some(t_proj),
        n_pert: Some(50),
        ..b(Method::MinNormOg, eta)
    };
    let ngd = |eta, sigma| UnlearnConfig {
        sigma: Some(sigma),
        ..b(Method::Ngd, eta)
    };
    let ngp = |eta, lambda_ga| UnlearnConfig {
        lambda_ga: Some(lambda_ga),
        ..b(Method::Ngp, eta)
    };
    let ridge = |eta, lambda_reg, gamma_reg| UnlearnConfig {
        lambda_reg: Some(lambda_reg),
        gamma_reg: Some(gamma_reg),
        ..b(Method::Ridge, eta)
    };
    let row = match epochs {
        10 => vec![
            b(Method::Ga, 1e-4),
            b(Method::Gd, 1e-4),
            ngd(1e-2, 0.5),
            ngp(1e-4, 1.0),
            og(1e-3, 0.3, 0, 0.3, 1),
            ridge(1e-4, 1.0, 0.3),
        ],
        100 => vec![
            b(Method::Ga, 1e-4),
            b(Method::Gd, 1e-2),
            ngd(1e-2, 1.0),
            ngp(1e-2, 1e-3),
            og(1e-3, 0.1, 50, 0.9, 1),
            ridge(1e-2, 3.0, 0.6),
        ],
        1000 => vec![
            b(Method::Ga, 1e-4),
            b(Method::Gd, 1e-2),
            ngd(1e-2, 0.1),
            ngp(1e-2, 1e-3),
            og(1e-2, 0.3, 0, 0.3, 200),
            ridge(1e-2, 3.0, 1.0),
        ],
        _ => {
            return Err(Error::config(
                "epochs",
                format!("tuned sine settings exist for 10, 100 or 1000 epochs, not {epochs}"),
            ))
        }
    };
    Ok(row)
}

/// Settings shared by the two classification toys: every method uses the
/// suite's step size and batch size; method-specific knobs come from the
/// published sweep grids.
fn classifier_configs(
    epochs: usize,
    eta: f64,
    batch: usize,
    p_retain: f64,
    n_pert: usize,
    og: (f64, f64, usize),
    seed: u64,
) -> Vec<UnlearnConfig> {
    let b = |m| UnlearnConfig {
        p_retain,
        ..base(m, epochs, eta, batch, seed)
    };
    let (lambda_reg, gamma_reg, t_gd) = og;
    vec![
        b(Method::Gd),
        b(Method::Ga),
        UnlearnConfig {
            sigma: Some(0.1),
            ..b(Method::Ngd)
        },
        UnlearnConfig {
            lambda_ga: Some(0.1),
            ..b(Method::Ngp)
        },
        UnlearnConfig {
            lambda_ga: Some(1.0),
            ..b(Method::Npo)
        },
        UnlearnConfig {
            lambda_reg: Some(1.0),
            lambda_ga: Some(0.1),
            t_gd: Some(epochs / 2),
            ..b(Method::Scrub)
        },
        UnlearnConfig {
            lambda_reg: Some(lambda_reg),
            gamma_reg: Some(gamma_reg),
            t_proj: Some(1),
            n_pert: Some(n_pert),
            t_gd: Some(t_gd),
            ..b(Method::MinNormOg)
        },
        UnlearnConfig {
            lambda_reg: Some(0.1),
            gamma_reg: Some(0.6),
            ..b(Method::Ridge)
        },
    ]
}

pub fn erasure_configs(seed: u64) -> Vec<UnlearnConfig> {
    classifier_configs(
        ERASURE_EPOCHS,
        1e-3,
        ERASURE_BATCH,
        ERASURE_P_RETAIN,
        20,
        (0.3, 0.6, 1),
        seed,
    )
}

pub fn collapse_configs(seed: u64) -> Vec<UnlearnConfig> {
    classifier_configs(
        COLLAPSE_EPOCHS,
        1e-2,
        COLLAPSE_BATCH,
        COLLAPSE_P_RETAIN,
        COLLAPSE_BATCH,
        (1.0, 0.3, 0),
        seed,
    )
}

/// Runs one method; a diverged run yields `None` so callers can record NaN.
fn unlearn_or_diverge(
    spec: &NetworkSpec,
    theta: &ParamVector,
    data: &crate::models::LabeledDataset,
    cfg: &UnlearnConfig,
) -> Result<Option<ParamVector>> {
    match run_unlearning(spec, theta, data, cfg) {
        Ok(out) => Ok(Some(out.theta)),
        Err(Error::Divergence { epoch }) => {
            warn!(
                "{} diverged at epoch {epoch} (seed {})",
                cfg.method, cfg.seed
            );
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn row(trial: usize, seed: u64, method: &str, metric: &str, value: f64) -> TrialRow {
    TrialRow {
        trial,
        seed,
        method: method.into(),
        metric: metric.into(),
        value,
    }
}

/// Sine poisoning: one `sup_deviation` row per method. When `plot` is set the
/// fitted curves are sampled on a 301-point grid.
pub fn poison_trial(
    trial: usize,
    seed: u64,
    epochs: usize,
    plot: bool,
) -> Result<(Vec<TrialRow>, Vec<PlotPoint>)> {
    let spec = sine_spec();
    let data = gen_sine_poison(SINE_RETAIN, SINE_FORGET, seed);
    let theta = train(&spec, &data, LossKind::Mse, &sine_pretrain_config(seed))?.theta;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    let curve = |name: &str, th: &ParamVector, points: &mut Vec<PlotPoint>| -> Result<()> {
        for x in sine_grid(301) {
            points.push(PlotPoint::new(name, x, forward(&spec, th, &[x])?[0]));
        }
        Ok(())
    };
    if plot {
        for x in sine_grid(301) {
            points.push(PlotPoint::new("sin", x, x.sin()));
        }
        for (i, x) in data.inputs.iter().enumerate() {
            let series = if data.retain_mask[i] {
                "retain"
            } else {
                "forget"
            };
            points.push(PlotPoint::new(series, x[0], data.targets[i][0]));
        }
        curve("initial", &theta, &mut points)?;
    }
    for cfg in poison_configs(epochs, seed)? {
        let name = cfg.method.name();
        let value = match unlearn_or_diverge(&spec, &theta, &data, &cfg)? {
            Some(th) => {
                if plot {
                    curve(name, &th, &mut points)?;
                }
                sup_deviation(&spec, &th, SINE_GRID)?
            }
            None => f64::NAN,
        };
        rows.push(row(trial, seed, name, "sup_deviation", value));
    }
    Ok((rows, points))
}

fn erasure_rows(trial: usize, seed: u64, name: &str, m: Option<ErasureMetrics>) -> [TrialRow; 2] {
    let (acc, mse) = m.map_or((f64::NAN, f64::NAN), |m| (m.retain_acc, m.gray_mse));
    [
        row(trial, seed, name, "retain_acc", acc),
        row(trial, seed, name, "gray_mse", mse),
    ]
}

/// Label erasure: `retain_acc` and `gray_mse` for the initial model, the
/// retrained ground truth and every method. Plot points are the Pareto scatter.
pub fn erasure_trial(trial: usize, seed: u64) -> Result<(Vec<TrialRow>, Vec<PlotPoint>)> {
    let spec = erasure_spec();
    let data = gen_label_erasure_toy(ERASURE_PER_CLASS, seed);
    let probes = erasure_testset(
        ERASURE_PROBES_PER_CLASS,
        seed.wrapping_add(PROBE_SEED_OFFSET),
    );
    let cfg = erasure_pretrain_config(seed);
    let theta = train(&spec, &data, LossKind::CrossEntropy, &cfg)?.theta;
    let gt = retrain_on_retain(&spec, &data, &cfg)?.theta;

    let mut rows = Vec::new();
    let mut points = Vec::new();
    let mut record = |name: &str, m: Option<ErasureMetrics>| {
        if let Some(m) = m {
            points.push(PlotPoint::new(name, m.retain_acc, m.gray_mse));
        }
        rows.extend(erasure_rows(trial, seed, name, m));
    };
    record("initial", Some(erasure_metrics(&spec, &theta, &probes)?));
    record("gt", Some(erasure_metrics(&spec, &gt, &probes)?));
    for cfg in erasure_configs(seed) {
        let m = match unlearn_or_diverge(&spec, &theta, &data, &cfg)? {
            Some(th) => Some(erasure_metrics(&spec, &th, &probes)?),
            None => None,
        };
        record(cfg.method.name(), m);
    }
    Ok((rows, points))
}

/// Representation collapse: colour accuracy for the initial model, ground
/// truth and every method. Plot points are `(trial, accuracy)` per series.
pub fn collapse_trial(trial: usize, seed: u64) -> Result<(Vec<TrialRow>, Vec<PlotPoint>)> {
    let spec = collapse_spec();
    let (data, relabeled) =
        gen_representation_collapse_toy(COLLAPSE_N, COLLAPSE_FORGET_FRAC, seed)?;
    let theta = train(
        &spec,
        &data,
        LossKind::CrossEntropy,
        &collapse_pretrain_config(seed),
    )?
    .theta;
    let gt = retrain_on_retain(&spec, &data, &collapse_retrain_config(seed))?.theta;

    let mut rows = Vec::new();
    let mut points = Vec::new();
    let mut record = |name: &str, acc: f64| {
        points.push(PlotPoint::new(name, trial as f64, acc));
        rows.push(row(trial, seed, name, "color_acc", acc));
    };
    record("initial", color_accuracy(&spec, &theta, &relabeled)?);
    record("gt", color_accuracy(&spec, &gt, &relabeled)?);
    for cfg in collapse_configs(seed) {
        let acc = match unlearn_or_diverge(&spec, &theta, &data, &cfg)? {
            Some(th) => color_accuracy(&spec, &th, &relabeled)?,
            None => f64::NAN,
        };
        record(cfg.method.name(), acc);
    }
    Ok((rows, points))
}
