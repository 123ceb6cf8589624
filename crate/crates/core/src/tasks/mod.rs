//! Desk-scale experiment generators and their metrics.

mod collapse;
mod erasure;
mod sine;

pub use collapse::{
    collapse_spec, color_accuracy, gen_representation_collapse_toy, relabel_by_color, GREEN, RED,
};
pub use erasure::{
    erasure_metrics, erasure_spec, erasure_testset, gen_label_erasure_toy, ErasureMetrics, COLORS,
    CONTENT_CLASSES, GRAY,
};
pub use sine::{gen_sine_poison, sine_grid, sine_spec, sup_deviation, sup_deviation_fn, DOMAIN};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{
    train, LabeledDataset, LossKind, NetworkSpec, ParamVector, TrainConfig, TrainOutcome,
};

/// Held-out erasure probes are drawn from `seed + PROBE_SEED_OFFSET`.
pub const PROBE_SEED_OFFSET: u64 = 1_000_003;

pub const SINE_RETAIN: usize = 50;
pub const SINE_FORGET: usize = 5;
pub const SINE_GRID: usize = 2001;
pub const ERASURE_PER_CLASS: usize = 250;
pub const ERASURE_PROBES_PER_CLASS: usize = 100;
pub const COLLAPSE_N: usize = 400;
pub const COLLAPSE_FORGET_FRAC: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Sine,
    Erasure,
    Collapse,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Sine, Task::Erasure, Task::Collapse];

    pub fn name(self) -> &'static str {
        match self {
            Task::Sine => "sine",
            Task::Erasure => "erasure",
            Task::Collapse => "collapse",
        }
    }

    pub fn spec(self) -> NetworkSpec {
        match self {
            Task::Sine => sine_spec(),
            Task::Erasure => erasure_spec(),
            Task::Collapse => collapse_spec(),
        }
    }

    /// The task whose default architecture is `spec`, if any.
    pub fn from_spec(spec: &NetworkSpec) -> Option<Task> {
        Task::ALL.into_iter().find(|t| t.spec() == *spec)
    }

    /// Training set at the default size for `seed`.
    pub fn dataset(self, seed: u64) -> Result<LabeledDataset> {
        match self {
            Task::Sine => Ok(gen_sine_poison(SINE_RETAIN, SINE_FORGET, seed)),
            Task::Erasure => Ok(gen_label_erasure_toy(ERASURE_PER_CLASS, seed)),
            Task::Collapse => {
                gen_representation_collapse_toy(COLLAPSE_N, COLLAPSE_FORGET_FRAC, seed).map(|d| d.0)
            }
        }
    }

    /// Task metrics for `theta`; `seed` is the dataset seed (erasure probes
    /// derive from it).
    pub fn metrics(
        self,
        spec: &NetworkSpec,
        theta: &ParamVector,
        data: &LabeledDataset,
        seed: u64,
    ) -> Result<BTreeMap<String, f64>> {
        let mut out = BTreeMap::new();
        match self {
            Task::Sine => {
                out.insert(
                    "sup_deviation".into(),
                    sup_deviation(spec, theta, SINE_GRID)?,
                );
            }
            Task::Erasure => {
                let probes = erasure_testset(
                    ERASURE_PROBES_PER_CLASS,
                    seed.wrapping_add(PROBE_SEED_OFFSET),
                );
                let m = erasure_metrics(spec, theta, &probes)?;
                out.insert("retain_acc".into(), m.retain_acc);
                out.insert("gray_mse".into(), m.gray_mse);
            }
            Task::Collapse => {
                out.insert(
                    "color_acc".into(),
                    color_accuracy(spec, theta, &relabel_by_color(data)?)?,
                );
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                Error::config(
                    "task",
                    format!("unknown task `{s}` (expected sine, erasure or collapse)"),
                )
            })
    }
}

/// Ground-truth retrain: trains from scratch on `D_r` alone.
pub fn retrain_on_retain(
    spec: &NetworkSpec,
    data: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train(spec, &data.retain_only(), LossKind::for_spec(spec), cfg)
}

/// Fraction of rows whose argmax on head `head` equals target column `head`.
pub(crate) fn head_accuracy(
    spec: &NetworkSpec,
    theta: &crate::models::ParamVector,
    data: &LabeledDataset,
    head: usize,
    rows: &[usize],
) -> Result<f64> {
    if rows.is_empty() {
        return Ok(0.0);
    }
    let range = spec.heads()[head].clone();
    let out = crate::models::forward_rows(spec, theta, &data.batch(rows).x)?;
    let hits = rows
        .iter()
        .enumerate()
        .filter(|(k, &i)| {
            let pred = crate::models::argmax(&out.row(*k)[range.clone()]);
            pred as f64 == data.targets[i][head]
        })
        .count();
    Ok(hits as f64 / rows.len() as f64)
}
