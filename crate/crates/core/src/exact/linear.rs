use crate::error::{check_dim, Result};
use crate::models::ParamVector;
use crate::numkit::{orthonormalize, project, RANK_TOL};

/// Min-norm retrain of an interpolating linear model: `proj(θ*, span(X_r))`.
pub fn linear_min_norm_unlearn(
    theta_star: &ParamVector,
    retain_inputs: &[Vec<f64>],
) -> Result<ParamVector> {
    let m = theta_star.len();
    for x in retain_inputs {
        check_dim(m, x.len())?;
    }
    let basis = orthonormalize(m, retain_inputs, RANK_TOL)?;
    Ok(theta_star.with_data(project(&theta_star.data, &basis)?))
}
