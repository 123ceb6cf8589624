//! Seeded minibatch training.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::LabeledDataset;
use super::engine::forward_batch;
use super::loss::{loss, loss_and_grad, LossKind};
use super::optim::{Optimizer, OptimizerKind};
use super::params::{layers, ParamVector};
use super::spec::NetworkSpec;
use crate::error::{check_dim, Error, Result};
use crate::numkit::{min_norm_on_independent_rows, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    #[default]
    Uniform,
    Zeros,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    pub seed: u64,
    /// Stop once the epoch's mean batch loss is at or below this value.
    #[serde(default)]
    pub early_stop_loss: Option<f64>,
    #[serde(default)]
    pub optimizer: OptimizerKind,
    #[serde(default)]
    pub init: Init,
}

fn default_weight_decay() -> f64 {
    0.01
}

impl TrainConfig {
    pub fn new(epochs: usize, batch_size: usize, lr: f64, seed: u64) -> Self {
        Self {
            epochs,
            batch_size,
            lr,
            weight_decay: default_weight_decay(),
            seed,
            early_stop_loss: None,
            optimizer: OptimizerKind::Adamw,
            init: Init::Uniform,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub theta: ParamVector,
    pub epochs_run: usize,
    /// Full-dataset loss of the returned parameters.
    pub final_loss: f64,
}

pub fn train(
    spec: &NetworkSpec,
    data: &LabeledDataset,
    kind: LossKind,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train_observed(spec, data, kind, cfg, |_, _| {})
}

/// Like [`train`], calling `observe(step, θ)` after every parameter update.
pub fn train_observed<F>(
    spec: &NetworkSpec,
    data: &LabeledDataset,
    kind: LossKind,
    cfg: &TrainConfig,
    mut observe: F,
) -> Result<TrainOutcome>
where
    F: FnMut(usize, &ParamVector),
{
    if cfg.epochs == 0 {
        return Err(Error::config("epochs", "must be at least 1"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::config("batch_size", "must be at least 1"));
    }
    if data.is_empty() {
        return Err(Error::EmptyBatch);
    }
    check_dim(spec.input_dim, data.input_dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut theta = match cfg.init {
        Init::Uniform => ParamVector::init_uniform(spec, &mut rng),
        Init::Zeros => ParamVector::zeros(spec),
    };
    let mut opt = Optimizer::new(cfg.optimizer, theta.len(), cfg.lr, cfg.weight_decay);
    let mut order = data.all_indices();
    let mut step = 0;
    let mut epochs_run = 0;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = data.batch(chunk);
            let (l, g) = loss_and_grad(spec, &theta, &batch, kind)?;
            if !l.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            total += l * chunk.len() as f64;
            opt.step(&mut theta.data, &g)?;
            if theta.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { epoch });
            }
            observe(step, &theta);
            step += 1;
        }
        epochs_run = epoch + 1;
        if let Some(target) = cfg.early_stop_loss {
            if total / data.len() as f64 <= target {
                break;
            }
        }
    }
    let final_loss = loss(spec, &theta, &data.full_batch(), kind)?;
    if !final_loss.is_finite() {
        return Err(Error::Divergence { epoch: epochs_run });
    }
    Ok(TrainOutcome {
        theta,
        epochs_run,
        final_loss,
    })
}

/// Moves the output layer of a scalar-output MLP (or perceptron) by the
/// minimum-norm correction that makes it fit `data` on the current hidden
/// features. Keeping the trained head, rather than refitting it from zero,
/// avoids blowing up weights on nearly collinear features.
///
/// Samples whose features are dependent on earlier ones to working precision
/// are matched only as far as the independent samples allow, so check the
/// train loss when an exact interpolator matters.
pub fn refit_output_layer(
    spec: &NetworkSpec,
    theta: &ParamVector,
    data: &LabeledDataset,
) -> Result<ParamVector> {
    if spec.output_dim != 1 {
        return Err(Error::InvalidArgument("refit needs a scalar output".into()));
    }
    let chain = layers(spec);
    if chain.len() < 2 {
        return Err(Error::InvalidArgument("refit needs a hidden layer".into()));
    }
    let out = chain.last().unwrap();
    let batch = data.full_batch();
    let tape = forward_batch(spec, theta, &batch.x)?;
    let act = chain[chain.len() - 2]
        .activation
        .expect("hidden layers carry an activation");
    let pre = tape.pre(chain.len() - 2);
    let h = out.fan_in;
    let with_bias = out.bias.is_some();
    let cols = h + usize::from(with_bias);
    let mut phi = Vec::with_capacity(data.len() * cols);
    for row in pre.chunks_exact(h) {
        phi.extend(row.iter().map(|&z| act.apply(z)));
        if with_bias {
            phi.push(1.0);
        }
    }
    let x = Matrix::new(data.len(), cols, phi)?;
    let outputs = tape.outputs();
    let residual: Vec<f64> = data
        .targets
        .iter()
        .zip(outputs)
        .map(|(t, o)| t[0] - o)
        .collect();
    let (dw, _) = min_norm_on_independent_rows(&x, &residual)?;
    let mut refit = theta.clone();
    for (w, d) in refit.data[out.weight..out.weight + h].iter_mut().zip(&dw) {
        *w += d;
    }
    if let Some(b) = out.bias {
        refit.data[b] += dw[h];
    }
    Ok(refit)
}

/// Drives a scalar-output network onto an interpolator of `data` with damped
/// minimum-norm Gauss–Newton (Levenberg–Marquardt) steps
/// `Δθ = Jᵀ(JJᵀ + μI)⁻¹ r`.
///
/// `μ` shrinks after an accepted step and grows after a rejected one. Stops
/// once every residual is within `tol` or after `max_iter` steps and returns
/// the parameters with their final mean squared error.
pub fn gauss_newton_interpolate(
    spec: &NetworkSpec,
    theta: &ParamVector,
    data: &LabeledDataset,
    max_iter: usize,
    tol: f64,
) -> Result<(ParamVector, f64)> {
    if spec.output_dim != 1 {
        return Err(Error::InvalidArgument(
            "interpolation needs a scalar output".into(),
        ));
    }
    theta.check_spec(spec)?;
    let n = data.len();
    let p = theta.data.len();
    let batch = data.full_batch();
    let residuals = |t: &ParamVector| -> Result<Vec<f64>> {
        let tape = forward_batch(spec, t, &batch.x)?;
        Ok(data
            .targets
            .iter()
            .zip(tape.outputs())
            .map(|(y, o)| y[0] - o)
            .collect())
    };
    let sq = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();

    let mut theta = theta.clone();
    let mut r = residuals(&theta)?;
    let mut jac: Option<Vec<Vec<f64>>> = None;
    let mut mu: Option<f64> = None;
    for _ in 0..max_iter {
        if r.iter().all(|v| v.abs() <= tol) {
            break;
        }
        let rows = match jac.take() {
            Some(rows) => rows,
            None => data
                .inputs
                .iter()
                .map(|x| {
                    Ok(super::loss::output_gradients(spec, &theta, x)?
                        .pop()
                        .unwrap())
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let damping = *mu.get_or_insert_with(|| {
            1e-3 * rows
                .iter()
                .map(|g| g.iter().map(|v| v * v).sum::<f64>())
                .sum::<f64>()
                / n as f64
        });
        // Min-norm solution of [J  √μ I] z = r; its first p entries are the step.
        let mut aug = Vec::with_capacity(n * (p + n));
        for (i, g) in rows.iter().enumerate() {
            aug.extend_from_slice(g);
            aug.extend((0..n).map(|j| if i == j { damping.sqrt() } else { 0.0 }));
        }
        let (z, _) = min_norm_on_independent_rows(&Matrix::new(n, p + n, aug)?, &r)?;
        let cand = theta.with_data(theta.data.iter().zip(&z[..p]).map(|(t, d)| t + d).collect());
        let rc = residuals(&cand)?;
        if sq(&rc) < sq(&r) {
            theta = cand;
            r = rc;
            mu = Some(damping / 3.0);
        } else {
            jac = Some(rows);
            mu = Some(damping * 4.0);
        }
    }
    Ok((theta, sq(&r) / n as f64))
}
