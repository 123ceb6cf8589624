use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::{Method, UnlearnConfig};
use super::step::minnorm_og_step;
use crate::error::{Error, Result};
use crate::models::loss::{batch_loss, class_index};
use crate::models::{
    forward_rows, log_softmax, loss, loss_and_grad, value_and_grad, Batch, LabeledDataset,
    LossKind, NetworkSpec, Optimizer, ParamVector,
};
use crate::numkit::{axpy, dot, norm, Matrix};

/// Per-step instrumentation of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Traces {
    /// `1/(1+λ)` used at each projection.
    #[serde(serialize_with = "crate::io::serialize_f17_slice")]
    pub projection_strength: Vec<f64>,
    /// Largest `|⟨Δ̃, g_i⟩|` seen over all projections.
    #[serde(serialize_with = "crate::io::serialize_f17")]
    pub max_orth_residual: f64,
    /// Ridge weight after each batch update.
    #[serde(serialize_with = "crate::io::serialize_f17_slice")]
    pub ridge_lambda: Vec<f64>,
    /// `‖ξ‖` of each injected noise vector.
    #[serde(serialize_with = "crate::io::serialize_f17_slice")]
    pub noise_norm: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_hash: String,
    pub seed: u64,
    pub method: Method,
    /// Mean objective value per epoch.
    #[serde(serialize_with = "crate::io::serialize_f17_slice")]
    pub loss_trace: Vec<f64>,
    #[serde(serialize_with = "crate::io::serialize_f17_map")]
    pub metrics: BTreeMap<String, f64>,
    #[serde(serialize_with = "crate::io::serialize_f17")]
    pub wall_seconds: f64,
    pub checkpoint: Option<String>,
    pub accessible_retain: usize,
    pub traces: Traces,
}

#[derive(Debug, Clone)]
pub struct UnlearnOutcome {
    pub theta: ParamVector,
    pub report: RunReport,
}

/// Runs MinNorm-OG; rejects configs for other methods.
pub fn run_minnorm_og(
    spec: &NetworkSpec,
    theta_star: &ParamVector,
    data: &LabeledDataset,
    cfg: &UnlearnConfig,
) -> Result<UnlearnOutcome> {
    if cfg.method != Method::MinNormOg {
        return Err(Error::config(
            "method",
            "run_minnorm_og needs method minnorm-og",
        ));
    }
    run_unlearning(spec, theta_star, data, cfg)
}

/// Runs one of the loss-based baselines.
pub fn run_baseline(
    spec: &NetworkSpec,
    theta_star: &ParamVector,
    data: &LabeledDataset,
    cfg: &UnlearnConfig,
) -> Result<UnlearnOutcome> {
    if cfg.method == Method::MinNormOg {
        return Err(Error::config("method", "minnorm-og is not a baseline"));
    }
    run_unlearning(spec, theta_star, data, cfg)
}

/// Cycles through the accessible retain samples without discarding leftovers.
struct RetainCycle {
    indices: Vec<usize>,
    cursor: usize,
    batch: usize,
}

impl RetainCycle {
    fn next(&mut self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.batch);
        for _ in 0..self.batch {
            out.push(self.indices[self.cursor]);
            self.cursor = (self.cursor + 1) % self.indices.len();
        }
        out
    }
}

/// Dispatches on `cfg.method`.
pub fn run_unlearning(
    spec: &NetworkSpec,
    theta_star: &ParamVector,
    data: &LabeledDataset,
    cfg: &UnlearnConfig,
) -> Result<UnlearnOutcome> {
    let start = Instant::now();
    cfg.validate()?;
    spec.validate()?;
    theta_star.check_spec(spec)?;
    crate::error::check_dim(spec.input_dim, data.input_dim())?;
    let method = cfg.method;
    if method.needs_classifier() && !spec.is_classifier() {
        return Err(Error::config(
            "method",
            format!("{method} needs a classification head"),
        ));
    }
    let kind = LossKind::for_spec(spec);
    let forget = data.forget_indices();
    if forget.is_empty() {
        return Err(Error::InvalidArgument("forget set is empty".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    noise_rng.set_stream(1);

    let mut accessible = data.retain_indices();
    accessible.shuffle(&mut rng);
    accessible.truncate(cfg.accessible_retain(accessible.len()));
    log::info!(
        "{method}: {} of {} retain samples accessible",
        accessible.len(),
        data.retain_indices().len()
    );
    if method.uses_retain() && accessible.is_empty() {
        return Err(Error::config(
            "p_retain",
            "leaves no accessible retain samples",
        ));
    }
    let n_accessible = accessible.len();
    let mut retain_cycle = RetainCycle {
        batch: cfg.batch_size.min(accessible.len()),
        indices: accessible,
        cursor: 0,
    };

    let mut theta = theta_star.clone();
    let mut opt = Optimizer::new(cfg.optimizer, theta.len(), cfg.eta, cfg.weight_decay);
    let mut traces = Traces::default();
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    let t_total = cfg.epochs;
    let t_gd = cfg.t_gd.unwrap_or(0);
    let mut proj_lambda = cfg.lambda_reg.map(|l| 1.0 / l - 1.0).unwrap_or(0.0);
    let mut ridge_lambda = cfg.lambda_reg.unwrap_or(0.0);
    let noise = match (method, cfg.sigma) {
        (Method::Ngd, Some(s)) if s > 0.0 => Some(Normal::new(0.0, s).expect("σ is finite")),
        _ => None,
    };

    let mut forget_order = forget;
    for t in 0..t_total {
        forget_order.shuffle(&mut rng);
        let mut epoch_value = 0.0;
        let mut steps = 0usize;
        for chunk in forget_order.chunks(cfg.batch_size) {
            let fb = data.batch(chunk);
            let rb = if retain_cycle.indices.is_empty() {
                None
            } else {
                Some(data.batch(&retain_cycle.next()))
            };
            let retain = || rb.as_ref().expect("retain batch available");
            let (value, grad) = match method {
                Method::Gd | Method::MinNormOg => loss_and_grad(spec, &theta, retain(), kind)?,
                Method::Ga => {
                    let (v, g) = loss_and_grad(spec, &theta, &fb, kind)?;
                    (-v, g.into_iter().map(|x| -x).collect())
                }
                Method::Ngd => {
                    let (mut v, mut g) = loss_and_grad(spec, &theta, retain(), kind)?;
                    if let Some(dist) = &noise {
                        let xi: Vec<f64> =
                            (0..g.len()).map(|_| dist.sample(&mut noise_rng)).collect();
                        v += dot(&theta.data, &xi);
                        axpy(1.0, &xi, &mut g);
                        traces.noise_norm.push(norm(&xi));
                    } else {
                        traces.noise_norm.push(0.0);
                    }
                    (v, g)
                }
                Method::Ngp => {
                    let lam = cfg.lambda_ga.unwrap();
                    let (vr, mut g) = loss_and_grad(spec, &theta, retain(), kind)?;
                    let (vf, gf) = loss_and_grad(spec, &theta, &fb, kind)?;
                    axpy(-lam, &gf, &mut g);
                    (vr - lam * vf, g)
                }
                Method::Npo => {
                    let star = forward_rows(spec, theta_star, &fb.x)?;
                    npo(spec, &theta, &fb, &star, cfg.lambda_ga.unwrap())?
                }
                Method::Scrub => {
                    if t % 2 == 0 || t >= t_total.saturating_sub(t_gd) {
                        let r = retain();
                        let star = forward_rows(spec, theta_star, &r.x)?;
                        scrub_kl(spec, &theta, r, &star, cfg.lambda_reg.unwrap(), Some(kind))?
                    } else {
                        let star = forward_rows(spec, theta_star, &fb.x)?;
                        scrub_kl(spec, &theta, &fb, &star, -cfg.lambda_ga.unwrap(), None)?
                    }
                }
                Method::Ridge => {
                    let (mut v, mut g) = loss_and_grad(spec, &theta, retain(), kind)?;
                    v += ridge_lambda * dot(&theta.data, &theta.data);
                    axpy(2.0 * ridge_lambda, &theta.data, &mut g);
                    (v, g)
                }
            };
            if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { epoch: t });
            }
            opt.step(&mut theta.data, &grad)?;
            match method {
                Method::MinNormOg => {
                    let t_proj = cfg.t_proj.unwrap();
                    if t % t_proj == 0 && t < t_total.saturating_sub(t_gd) {
                        let step = minnorm_og_step(
                            spec,
                            &theta,
                            retain(),
                            proj_lambda,
                            cfg.n_pert.unwrap(),
                        )?;
                        traces.projection_strength.push(1.0 / (1.0 + proj_lambda));
                        traces.max_orth_residual = traces.max_orth_residual.max(step.max_residual);
                        theta = step.theta;
                        proj_lambda = (proj_lambda + 1.0) / cfg.gamma_reg.unwrap() - 1.0;
                    }
                }
                Method::Ridge => {
                    ridge_lambda *= cfg.gamma_reg.unwrap();
                    traces.ridge_lambda.push(ridge_lambda);
                }
                _ => {}
            }
            if theta.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { epoch: t });
            }
            epoch_value += value;
            steps += 1;
        }
        loss_trace.push(epoch_value / steps as f64);
    }

    let mut metrics = BTreeMap::new();
    let retain_all = data.retain_indices();
    if !retain_all.is_empty() {
        metrics.insert(
            "retain_loss".to_string(),
            loss(spec, &theta, &data.batch(&retain_all), kind)?,
        );
    }
    metrics.insert(
        "forget_loss".to_string(),
        loss(spec, &theta, &data.batch(&data.forget_indices()), kind)?,
    );
    let report = RunReport {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        method,
        loss_trace,
        metrics,
        wall_seconds: start.elapsed().as_secs_f64(),
        checkpoint: None,
        accessible_retain: n_accessible,
        traces,
    };
    Ok(UnlearnOutcome { theta, report })
}

/// Log-probability of the labelled class summed over class heads, with its
/// gradient direction `onehot − softmax` written into `d` (scaled by `w`).
fn labelled_log_prob(
    spec: &NetworkSpec,
    logits: &[f64],
    targets: &[f64],
    w: f64,
    d: &mut [f64],
) -> Result<f64> {
    let mut total = 0.0;
    for (h, head) in spec.heads().into_iter().enumerate() {
        if head.len() == 1 {
            continue;
        }
        let label = class_index(targets[h], head.len())?;
        let lp = log_softmax(&logits[head.clone()]);
        total += lp[label];
        for (c, l) in lp.iter().enumerate() {
            let onehot = if c == label { 1.0 } else { 0.0 };
            d[head.start + c] += w * (onehot - l.exp());
        }
    }
    Ok(total)
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `(1/|B_f|) Σ (2/β)·log(1 + (π_θ/π_θ*)^β)`.
fn npo(
    spec: &NetworkSpec,
    theta: &ParamVector,
    fb: &Batch,
    star: &Matrix,
    beta: f64,
) -> Result<(f64, Vec<f64>)> {
    let od = spec.output_dim;
    let n = fb.len();
    value_and_grad(spec, theta, &fb.x, |tape| {
        let out = tape.outputs();
        let mut d = vec![0.0; out.len()];
        let mut value = 0.0;
        for i in 0..n {
            let mut scratch = vec![0.0; od];
            let lp = labelled_log_prob(
                spec,
                &out[i * od..(i + 1) * od],
                fb.y.row(i),
                1.0,
                &mut scratch,
            )?;
            let mut unused = vec![0.0; od];
            let lp_star = labelled_log_prob(spec, star.row(i), fb.y.row(i), 0.0, &mut unused)?;
            let z = beta * (lp - lp_star);
            value += 2.0 / beta * softplus(z);
            let coef = 2.0 * sigmoid(z) / n as f64;
            for (dst, s) in d[i * od..(i + 1) * od].iter_mut().zip(&scratch) {
                *dst += coef * s;
            }
        }
        Ok((value / n as f64, d))
    })
}

/// `weight·mean KL(π_θ*‖π_θ)` over the batch, plus the batch loss when `with_loss`
/// is given.
fn scrub_kl(
    spec: &NetworkSpec,
    theta: &ParamVector,
    batch: &Batch,
    star: &Matrix,
    weight: f64,
    with_loss: Option<LossKind>,
) -> Result<(f64, Vec<f64>)> {
    let od = spec.output_dim;
    let n = batch.len();
    value_and_grad(spec, theta, &batch.x, |tape| {
        let out = tape.outputs();
        let (mut value, mut d) = match with_loss {
            Some(kind) => batch_loss(spec, kind, out, &batch.y)?,
            None => (0.0, vec![0.0; out.len()]),
        };
        let scale = weight / n as f64;
        for i in 0..n {
            for head in spec.heads() {
                if head.len() == 1 {
                    continue;
                }
                let lp = log_softmax(&out[i * od..(i + 1) * od][head.clone()]);
                let lq = log_softmax(&star.row(i)[head.clone()]);
                let mut kl = 0.0;
                for c in 0..head.len() {
                    let q = lq[c].exp();
                    kl += q * (lq[c] - lp[c]);
                    d[i * od + head.start + c] += scale * (lp[c].exp() - q);
                }
                value += scale * kl;
            }
        }
        Ok((value, d))
    })
}
