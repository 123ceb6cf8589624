use crate::error::{Error, Result};
use crate::models::{output_gradients, Batch, NetworkSpec, ParamVector};
use crate::numkit::{dot, orthonormalize, project_complement, OrthonormalBasis, RANK_TOL};

/// `Δ̃ = −(1/(1+λ))·proj(θ, G⊥)`, the minimizer of `‖θ+Δ‖² + λ‖Δ‖²` over `Δ ⊥ G`.
pub fn closed_form_delta(theta: &[f64], basis: &OrthonormalBasis, lambda: f64) -> Result<Vec<f64>> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "λ must be finite and non-negative, got {lambda}"
        )));
    }
    let scale = -1.0 / (1.0 + lambda);
    Ok(project_complement(theta, basis)?
        .into_iter()
        .map(|v| scale * v)
        .collect())
}

/// Outcome of one projection step.
#[derive(Debug, Clone)]
pub struct ProjectionStep {
    pub theta: ParamVector,
    pub delta: Vec<f64>,
    /// Number of model gradients collected (one per head per subsampled input).
    pub gradients: usize,
    pub basis_dim: usize,
    /// `max_i |⟨Δ̃, g_i⟩|` over the collected gradients.
    pub max_residual: f64,
}

/// One regularized min-norm projection under the orthogonal-gradient constraint,
/// using the first `n_pert` inputs of `retain_batch`.
pub fn minnorm_og_step(
    spec: &NetworkSpec,
    theta: &ParamVector,
    retain_batch: &Batch,
    lambda: f64,
    n_pert: usize,
) -> Result<ProjectionStep> {
    let k = n_pert.min(retain_batch.len());
    let mut grads = Vec::new();
    for i in 0..k {
        grads.extend(output_gradients(spec, theta, retain_batch.x.row(i))?);
    }
    let basis = orthonormalize(theta.len(), &grads, RANK_TOL)?;
    if basis.is_empty() {
        log::warn!("all retain gradients vanish; projection shrinks θ toward zero");
    }
    let delta = closed_form_delta(&theta.data, &basis, lambda)?;
    let max_residual = grads
        .iter()
        .map(|g| dot(g, &delta).abs())
        .fold(0.0, f64::max);
    let data = theta.data.iter().zip(&delta).map(|(a, b)| a + b).collect();
    Ok(ProjectionStep {
        theta: theta.with_data(data),
        delta,
        gradients: grads.len(),
        basis_dim: basis.len(),
        max_residual,
    })
}
