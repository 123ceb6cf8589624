//! Model outputs, per-sample model gradients and batch losses.

use serde::{Deserialize, Serialize};

use super::dataset::Batch;
use super::engine::{backward_batch, forward_batch, Tape};
use super::params::ParamVector;
use super::spec::NetworkSpec;
use crate::error::{check_dim, Error, Result};
use crate::numkit::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `‖f(θ,x) − y‖²` per sample.
    Mse,
    /// Softmax cross-entropy on every class head (targets are class indices);
    /// scalar heads still use squared error.
    CrossEntropy,
}

impl LossKind {
    pub fn for_spec(spec: &NetworkSpec) -> Self {
        if spec.is_classifier() {
            LossKind::CrossEntropy
        } else {
            LossKind::Mse
        }
    }
}

/// Number of target entries a spec expects per sample under `kind`.
pub fn target_dim(spec: &NetworkSpec, kind: LossKind) -> usize {
    match kind {
        LossKind::Mse => spec.output_dim,
        LossKind::CrossEntropy => spec.heads().len(),
    }
}

pub fn forward(spec: &NetworkSpec, theta: &ParamVector, x: &[f64]) -> Result<Vec<f64>> {
    let xm = Matrix::new(1, x.len(), x.to_vec())?;
    Ok(forward_batch(spec, theta, &xm)?.outputs().to_vec())
}

/// Outputs for every row of `x`, `rows × output_dim`.
pub fn forward_rows(spec: &NetworkSpec, theta: &ParamVector, x: &Matrix) -> Result<Matrix> {
    let tape = forward_batch(spec, theta, x)?;
    Matrix::new(x.rows(), spec.output_dim, tape.outputs().to_vec())
}

/// Index of the largest entry (first one on ties).
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - mx).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = mx + logits.iter().map(|z| (z - mx).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

/// `∇_θ` of each head's scalar output at `x`: the raw output for scalar heads,
/// the logit at the predicted class (argmax held fixed) for class heads.
pub fn output_gradients(
    spec: &NetworkSpec,
    theta: &ParamVector,
    x: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let xm = Matrix::new(1, x.len(), x.to_vec())?;
    let tape = forward_batch(spec, theta, &xm)?;
    let out = tape.output(0).to_vec();
    spec.heads()
        .into_iter()
        .map(|head| {
            let idx = if head.len() == 1 {
                head.start
            } else {
                head.start + argmax(&out[head.clone()])
            };
            let mut d = vec![0.0; spec.output_dim];
            d[idx] = 1.0;
            backward_batch(spec, theta, &tape, &d)
        })
        .collect()
}

/// `∇_θ f(θ, x)` for a single-head model.
pub fn model_gradient(spec: &NetworkSpec, theta: &ParamVector, x: &[f64]) -> Result<ParamVector> {
    if spec.heads().len() != 1 {
        return Err(Error::InvalidArgument(
            "model_gradient needs a single-head model; use output_gradients".into(),
        ));
    }
    let g = output_gradients(spec, theta, x)?.pop().unwrap();
    Ok(theta.with_data(g))
}

/// Forward pass plus gradient of an arbitrary function of the outputs.
///
/// `objective` receives the tape and returns the value and `∂value/∂outputs`.
pub fn value_and_grad<F>(
    spec: &NetworkSpec,
    theta: &ParamVector,
    x: &Matrix,
    objective: F,
) -> Result<(f64, Vec<f64>)>
where
    F: FnOnce(&Tape) -> Result<(f64, Vec<f64>)>,
{
    if x.rows() == 0 {
        return Err(Error::EmptyBatch);
    }
    let tape = forward_batch(spec, theta, x)?;
    let (value, d_out) = objective(&tape)?;
    let grad = backward_batch(spec, theta, &tape, &d_out)?;
    Ok((value, grad))
}

/// Mean sample loss of `outputs` against `targets` and its output gradient.
pub fn batch_loss(
    spec: &NetworkSpec,
    kind: LossKind,
    outputs: &[f64],
    targets: &Matrix,
) -> Result<(f64, Vec<f64>)> {
    let n = targets.rows();
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    let od = spec.output_dim;
    check_dim(n * od, outputs.len())?;
    check_dim(target_dim(spec, kind), targets.cols())?;
    let scale = 1.0 / n as f64;
    let mut loss = 0.0;
    let mut d = vec![0.0; outputs.len()];
    for i in 0..n {
        let f = &outputs[i * od..(i + 1) * od];
        let y = targets.row(i);
        let di = &mut d[i * od..(i + 1) * od];
        match kind {
            LossKind::Mse => {
                for k in 0..od {
                    let r = f[k] - y[k];
                    loss += r * r;
                    di[k] = 2.0 * r * scale;
                }
            }
            LossKind::CrossEntropy => {
                for (h, head) in spec.heads().into_iter().enumerate() {
                    if head.len() == 1 {
                        let r = f[head.start] - y[h];
                        loss += r * r;
                        di[head.start] = 2.0 * r * scale;
                        continue;
                    }
                    let label = class_index(y[h], head.len())?;
                    let lp = log_softmax(&f[head.clone()]);
                    loss -= lp[label];
                    for (c, l) in lp.iter().enumerate() {
                        let onehot = if c == label { 1.0 } else { 0.0 };
                        di[head.start + c] = (l.exp() - onehot) * scale;
                    }
                }
            }
        }
    }
    Ok((loss * scale, d))
}

pub(crate) fn class_index(y: f64, classes: usize) -> Result<usize> {
    if y < 0.0 || y.fract() != 0.0 || y as usize >= classes {
        return Err(Error::InvalidArgument(format!(
            "class target {y} outside 0..{classes}"
        )));
    }
    Ok(y as usize)
}

/// Mean loss over the batch and its exact gradient.
pub fn loss_and_grad(
    spec: &NetworkSpec,
    theta: &ParamVector,
    batch: &Batch,
    kind: LossKind,
) -> Result<(f64, Vec<f64>)> {
    value_and_grad(spec, theta, &batch.x, |tape| {
        batch_loss(spec, kind, tape.outputs(), &batch.y)
    })
}

/// Mean loss over the batch without the reverse pass.
pub fn loss(spec: &NetworkSpec, theta: &ParamVector, batch: &Batch, kind: LossKind) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let tape = forward_batch(spec, theta, &batch.x)?;
    Ok(batch_loss(spec, kind, tape.outputs(), &batch.y)?.0)
}
