//! Theorem-oracle suite: each check builds random instances, runs a solver and
//! compares it with an independent route to the same answer.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exact::{
    active_neurons, counterexample_c41, deep_linear_param_norm_construct,
    deep_linear_predictor_unlearn, effective_predictor, linear_min_norm_unlearn,
    perceptron_prune_with, sparsify_first_layer,
};
use crate::models::{
    forward, model_gradient, refit_output_layer, Activation, LabeledDataset, NetworkSpec,
    OptimizerKind, ParamVector,
};
use crate::numkit::{
    min_norm_least_squares, orthonormalize, project, reduced_column_echelon, Matrix, RANK_TOL,
};
use crate::unlearners::{
    closed_form_delta, minnorm_og_step, run_unlearning, Method, UnlearnConfig,
};

/// Deliberate defects used to confirm the suite catches them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mutation {
    #[default]
    None,
    /// Perturbs the non-pivot entries of every reduced column echelon form.
    Rcef,
}

impl FromStr for Mutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Mutation::None),
            "rcef" => Ok(Mutation::Rcef),
            other => Err(Error::config(
                "mutate",
                format!("unknown mutation `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst residual seen; compared against `tolerance`.
    pub max_residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<28} {:<6} {:>12} {:>10}  detail",
            "check", "result", "max_resid", "tol"
        )?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<28} {:<6} {:>12.3e} {:>10.1e}  {}",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.max_residual,
                c.tolerance,
                c.detail
            )?;
        }
        Ok(())
    }
}

fn gaussian(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

fn rows(r: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| gaussian(r, m)).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Min-norm refit of the predictions `X_r θ` on the retain inputs.
fn pinv_oracle(x: &[Vec<f64>], w: &[f64]) -> Result<Vec<f64>> {
    let xm = Matrix::from_rows(x)?;
    let y: Vec<f64> = x.iter().map(|xi| dot(xi, w)).collect();
    min_norm_least_squares(&xm, &y)
}

fn check(
    name: &'static str,
    tolerance: f64,
    residual: f64,
    ok: bool,
    detail: String,
) -> CheckResult {
    CheckResult {
        name,
        passed: ok && residual <= tolerance,
        max_residual: residual,
        tolerance,
        detail,
    }
}

/// Runs the whole suite; `mutation` injects a known defect.
pub fn run_verify(mutation: Mutation) -> VerifyReport {
    let checks = vec![
        guard("linear-min-norm", 1e-8, linear_min_norm),
        guard("deep-linear-orthogonality", 1e-8, deep_linear),
        guard("deep-linear-norm", 1e-10, deep_linear_norm),
        guard("perceptron-prune", 1e-8, move || perceptron(mutation)),
        guard("sparsify-first-layer", 1e-10, sparsify),
        guard("interpolator-stationarity", 1e-6, stationarity),
        guard("counterexample", 0.0, counterexample),
        guard("projection-closed-form", 1e-8, projection),
    ];
    VerifyReport { checks }
}

fn guard(
    name: &'static str,
    tolerance: f64,
    f: impl FnOnce() -> Result<(f64, bool, String)>,
) -> CheckResult {
    match f() {
        Ok((residual, ok, detail)) => check(name, tolerance, residual, ok, detail),
        Err(e) => CheckResult {
            name,
            passed: false,
            max_residual: f64::INFINITY,
            tolerance,
            detail: format!("error: {e}"),
        },
    }
}

fn linear_min_norm() -> Result<(f64, bool, String)> {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let m = r.random_range(1..=16);
        let n = r.random_range(1..=10);
        let theta = ParamVector::from_data(&NetworkSpec::linear(m), gaussian(&mut r, m))?;
        let x = rows(&mut r, n, m);
        let got = linear_min_norm_unlearn(&theta, &x)?;
        worst = worst.max(dist(&got.data, &pinv_oracle(&x, &theta.data)?));
    }
    Ok((worst, true, "50 instances vs pseudoinverse retrain".into()))
}

fn deep_linear() -> Result<(f64, bool, String)> {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..30 {
        let l = r.random_range(2..=4);
        let widths: Vec<usize> = (0..l).map(|_| r.random_range(2..=5)).collect();
        let spec = NetworkSpec::deep_linear(widths.clone())?;
        let theta = ParamVector::from_data(&spec, gaussian(&mut r, spec.num_params()))?;
        let n = r.random_range(1..widths[0]);
        let x = rows(&mut r, n, widths[0]);
        let out = deep_linear_predictor_unlearn(&spec, &theta, &x)?;
        let delta: Vec<f64> = out
            .data
            .iter()
            .zip(&theta.data)
            .map(|(a, b)| a - b)
            .collect();
        for xi in &x {
            let g = model_gradient(&spec, &theta, xi)?;
            worst = worst.max(dot(&g.data, &delta).abs());
        }
        let w_star = effective_predictor(&spec, &theta)?;
        worst = worst.max(dist(
            &effective_predictor(&spec, &out)?,
            &pinv_oracle(&x, &w_star)?,
        ));
    }
    Ok((
        worst,
        true,
        "30 instances: gradient orthogonality and predictor oracle".into(),
    ))
}

fn deep_linear_norm() -> Result<(f64, bool, String)> {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let l = r.random_range(2..=4);
        let widths: Vec<usize> = (0..l).map(|_| r.random_range(1..=5)).collect();
        let spec = NetworkSpec::deep_linear(widths.clone())?;
        let w_hat = gaussian(&mut r, widths[0]);
        let theta = deep_linear_param_norm_construct(&spec, &w_hat, None)?;
        let rho = dot(&w_hat, &w_hat).sqrt();
        let expected = l as f64 * rho.powf(2.0 / l as f64);
        worst = worst.max((dot(&theta.data, &theta.data) - expected).abs() / expected.max(1.0));
        worst = worst.max(dist(&effective_predictor(&spec, &theta)?, &w_hat));
    }
    Ok((worst, true, "20 instances: ‖θ‖² = L·ρ^(2/L)".into()))
}

fn mutated_rcef(p: &Matrix, tol: f64) -> Matrix {
    let mut e = reduced_column_echelon(p, tol);
    for i in 0..e.rows() {
        for j in 0..e.cols() {
            let v = e.get(i, j);
            if v != 0.0 && v != 1.0 {
                e.set(i, j, v * 1.1);
            }
        }
    }
    e
}

fn perceptron(mutation: Mutation) -> Result<(f64, bool, String)> {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut bounds = true;
    for _ in 0..30 {
        let h = r.random_range(8..=32);
        let m = r.random_range(2..=6);
        let n = r.random_range(1..=8);
        let spec = NetworkSpec::perceptron(m, h, Activation::Relu)?;
        let theta = ParamVector::from_data(&spec, gaussian(&mut r, spec.num_params()))?;
        let x = rows(&mut r, n, m);
        let y: Vec<f64> = x
            .iter()
            .map(|xi| forward(&spec, &theta, xi).map(|o| o[0]))
            .collect::<Result<_>>()?;
        let out = match mutation {
            Mutation::None => perceptron_prune_with(&spec, &theta, &x, &y, reduced_column_echelon)?,
            Mutation::Rcef => perceptron_prune_with(&spec, &theta, &x, &y, mutated_rcef)?,
        };
        let active = active_neurons(&spec, &out.theta)?;
        bounds &= active <= out.rank && out.rank <= n;
        for (xi, yi) in x.iter().zip(&y) {
            worst = worst.max((forward(&spec, &out.theta, xi)?[0] - yi).abs());
        }
    }
    Ok((
        worst,
        bounds,
        "30 ReLU instances: width ≤ rank ≤ |D_r|, retain fit".into(),
    ))
}

fn sparsify() -> Result<(f64, bool, String)> {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (h, m) = (r.random_range(4..=24), r.random_range(2..=5));
        let spec = NetworkSpec::perceptron(m, h, Activation::Relu)?;
        let mut theta = ParamVector::from_data(&spec, gaussian(&mut r, spec.num_params()))?;
        for ci in theta.block_mut("c").unwrap().iter_mut() {
            if r.random_bool(0.5) {
                *ci = 0.0;
            }
        }
        let sparse = sparsify_first_layer(&spec, &theta)?;
        for x in rows(&mut r, 100, m) {
            worst =
                worst.max((forward(&spec, &theta, &x)?[0] - forward(&spec, &sparse, &x)?[0]).abs());
        }
    }
    Ok((worst, true, "20 instances × 100 probes".into()))
}

fn stationarity() -> Result<(f64, bool, String)> {
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let x = rows(&mut r, 14, 5);
    let y: Vec<Vec<f64>> = x.iter().map(|xi| vec![xi[0].sin() + xi[1]]).collect();
    let data = LabeledDataset::new(x, y, (0..14).map(|i| i < 11).collect())?;
    let spec = NetworkSpec::mlp(5, vec![64], Activation::Silu, vec![1])?;
    let theta = ParamVector::from_data(&spec, gaussian(&mut r, spec.num_params()))?;
    let fit = refit_output_layer(&spec, &theta, &data)?;
    let mut worst = 0.0f64;
    for method in [Method::Gd, Method::Ga, Method::Ngp] {
        let mut cfg = UnlearnConfig::new(method, 10, 1e-2, 4, 1);
        cfg.lambda_ga = Some(1.0);
        cfg.optimizer = OptimizerKind::Sgd;
        cfg.weight_decay = 0.0;
        let out = run_unlearning(&spec, &fit, &data, &cfg)?;
        worst = worst.max(dist(&out.theta.data, &fit.data));
    }
    Ok((
        worst,
        true,
        "GD/GA/NGP displacement over 10 SGD epochs at an interpolator".into(),
    ))
}

fn counterexample() -> Result<(f64, bool, String)> {
    let ce = counterexample_c41(3);
    let constraint = ce.linearized_constraint()?;
    let predictor = ce.perturbed_predictor()?;
    let zero_predictor = predictor.iter().all(|v| *v == 0.0);
    let breaks_fit = ce
        .retain_outputs()?
        .iter()
        .any(|(f, y)| (f - y).abs() > 0.5);
    Ok((
        constraint,
        zero_predictor && breaks_fit,
        format!("predictor zero: {zero_predictor}, retain fit broken: {breaks_fit}"),
    ))
}

fn projection() -> Result<(f64, bool, String)> {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = r.random_range(2..=20);
        let k = r.random_range(1..=d);
        let theta = gaussian(&mut r, d);
        let g = rows(&mut r, k, d);
        let basis = orthonormalize(d, &g, RANK_TOL)?;
        let lambda = r.random_range(0.0..5.0);
        let delta = closed_form_delta(&theta, &basis, lambda)?;
        let p = project(&theta, &basis)?;
        for i in 0..d {
            worst = worst.max((delta[i] + (theta[i] - p[i]) / (1.0 + lambda)).abs());
        }
        for gi in &g {
            worst = worst.max(dot(&delta, gi).abs());
        }
    }
    // Full-strength projection on a network lands in the gradient span.
    let spec = NetworkSpec::mlp(3, vec![8], Activation::Silu, vec![1])?;
    let theta = ParamVector::from_data(&spec, gaussian(&mut r, spec.num_params()))?;
    let x = rows(&mut r, 6, 3);
    let data = LabeledDataset::new(x.clone(), vec![vec![0.0]; 6], vec![true; 6])?;
    let step = minnorm_og_step(&spec, &theta, &data.full_batch(), 0.0, 6)?;
    let grads: Vec<Vec<f64>> = x
        .iter()
        .map(|xi| model_gradient(&spec, &theta, xi).map(|g| g.data))
        .collect::<Result<_>>()?;
    let span = orthonormalize(spec.num_params(), &grads, RANK_TOL)?;
    let new = &step.theta.data;
    worst = worst.max(dist(new, &project(new, &span)?));
    worst = worst.max(step.max_residual);
    Ok((
        worst,
        true,
        "100 closed-form draws plus a span check".into(),
    ))
}
