use crate::error::{check_dim, Error, Result};
use crate::models::{ModelKind, NetworkSpec, ParamVector};
use crate::numkit::{dot, norm, orthonormalize, project_complement, RANK_TOL};

fn widths(spec: &NetworkSpec) -> Result<&[usize]> {
    match &spec.kind {
        ModelKind::DeepLinear { widths } => Ok(widths),
        _ => Err(Error::InvalidArgument("expected a deep linear spec".into())),
    }
}

/// `Aᵀ v` for a row-major `rows × cols` matrix.
fn tr_mul(a: &[f64], rows: usize, cols: usize, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for i in 0..rows {
        for j in 0..cols {
            out[j] += a[i * cols + j] * v[i];
        }
    }
    out
}

/// `A₂ᵀ⋯A_{L−1}ᵀ c`: the vector the first layer's output is read out with.
fn head_vector(spec: &NetworkSpec, theta: &ParamVector) -> Result<Vec<f64>> {
    let w = widths(spec)?;
    theta.check_spec(spec)?;
    let mut v = theta.block("c").unwrap().to_vec();
    for l in (2..w.len()).rev() {
        let a = theta.block(&format!("A{l}")).unwrap();
        v = tr_mul(a, w[l], w[l - 1], &v);
    }
    Ok(v)
}

/// Effective linear predictor `w(θ) = A₁ᵀ⋯A_{L−1}ᵀ c` (θ itself for a linear model).
pub fn effective_predictor(spec: &NetworkSpec, theta: &ParamVector) -> Result<Vec<f64>> {
    if matches!(spec.kind, ModelKind::Linear) {
        theta.check_spec(spec)?;
        return Ok(theta.data.clone());
    }
    let w = widths(spec)?;
    let u = head_vector(spec, theta)?;
    Ok(tr_mul(theta.block("A1").unwrap(), w[1], w[0], &u))
}

/// First-layer perturbation `Δ_{A₁} = −u rᵀ / ‖u‖²` with `u = A₂ᵀ⋯c` and
/// `r = proj(w(θ*), S_r⊥)`; every other block of the returned Δ is zero.
pub fn deep_linear_predictor_delta(
    spec: &NetworkSpec,
    theta_star: &ParamVector,
    retain_inputs: &[Vec<f64>],
) -> Result<ParamVector> {
    let w = widths(spec)?;
    for x in retain_inputs {
        check_dim(w[0], x.len())?;
    }
    let u = head_vector(spec, theta_star)?;
    let u_sq = dot(&u, &u);
    if u_sq.sqrt() <= RANK_TOL {
        return Err(Error::Degenerate("predictor head is zero".into()));
    }
    let w_star = effective_predictor(spec, theta_star)?;
    let basis = orthonormalize(w[0], retain_inputs, RANK_TOL)?;
    let r = project_complement(&w_star, &basis)?;
    let mut delta = ParamVector::zeros(spec);
    let block = delta.block_mut("A1").unwrap();
    for i in 0..w[1] {
        for j in 0..w[0] {
            block[i * w[0] + j] = -u[i] * r[j] / u_sq;
        }
    }
    Ok(delta)
}

/// `θ* + Δ̃` where Δ̃ is [`deep_linear_predictor_delta`]. The updated predictor is
/// `proj(w(θ*), S_r)`, the min-norm interpolator of the retain set.
pub fn deep_linear_predictor_unlearn(
    spec: &NetworkSpec,
    theta_star: &ParamVector,
    retain_inputs: &[Vec<f64>],
) -> Result<ParamVector> {
    let delta = deep_linear_predictor_delta(spec, theta_star, retain_inputs)?;
    let data = theta_star
        .data
        .iter()
        .zip(&delta.data)
        .map(|(a, b)| a + b)
        .collect();
    Ok(theta_star.with_data(data))
}

/// Minimum-parameter-norm factorization of `w_hat` as a deep linear network:
/// `Ã₁ = ρ^{(1−L)/L} v₁ŵᵀ`, `Ã_ℓ = ρ^{1/L} v_ℓ v_{ℓ−1}ᵀ`, `c̃ = ρ^{1/L} v_{L−1}`
/// with `ρ = ‖ŵ‖`. `unit_dirs[ℓ−1]` is `v_ℓ ∈ R^{h_ℓ}`; `e₁` when not given.
pub fn deep_linear_param_norm_construct(
    spec: &NetworkSpec,
    w_hat: &[f64],
    unit_dirs: Option<&[Vec<f64>]>,
) -> Result<ParamVector> {
    let w = widths(spec)?;
    let l = w.len();
    check_dim(w[0], w_hat.len())?;
    let rho = norm(w_hat);
    if rho == 0.0 {
        return Err(Error::InvalidArgument("w_hat must be nonzero".into()));
    }
    let dirs: Vec<Vec<f64>> = match unit_dirs {
        Some(d) => {
            check_dim(l - 1, d.len())?;
            for (k, v) in d.iter().enumerate() {
                check_dim(w[k + 1], v.len())?;
                if (norm(v) - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "direction v_{} is not unit norm",
                        k + 1
                    )));
                }
            }
            d.to_vec()
        }
        None => w[1..]
            .iter()
            .map(|&h| {
                let mut e = vec![0.0; h];
                e[0] = 1.0;
                e
            })
            .collect(),
    };
    let lf = l as f64;
    let s = rho.powf(1.0 / lf);
    let first = rho.powf((1.0 - lf) / lf);
    let mut theta = ParamVector::zeros(spec);
    for (dst, v) in theta.block_mut("c").unwrap().iter_mut().zip(&dirs[l - 2]) {
        *dst = s * v;
    }
    let a1 = theta.block_mut("A1").unwrap();
    for i in 0..w[1] {
        for j in 0..w[0] {
            a1[i * w[0] + j] = first * dirs[0][i] * w_hat[j];
        }
    }
    for k in 2..l {
        let a = theta.block_mut(&format!("A{k}")).unwrap();
        for i in 0..w[k] {
            for j in 0..w[k - 1] {
                a[i * w[k - 1] + j] = s * dirs[k - 1][i] * dirs[k - 2][j];
            }
        }
    }
    Ok(theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_layer_hand_example() {
        let spec = NetworkSpec::deep_linear(vec![2, 1]).unwrap();
        let th = ParamVector::from_data(&spec, vec![1.0, 1.0, 1.0]).unwrap();
        let out = deep_linear_predictor_unlearn(&spec, &th, &[vec![1.0, 0.0]]).unwrap();
        assert_eq!(effective_predictor(&spec, &out).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn zero_head_is_degenerate() {
        let spec = NetworkSpec::deep_linear(vec![2, 2, 1]).unwrap();
        let th = ParamVector::zeros(&spec);
        let err = deep_linear_predictor_delta(&spec, &th, &[vec![1.0, 0.0]]).unwrap_err();
        assert_eq!(
            err.to_string(),
            "degenerate network: predictor head is zero"
        );
    }

    #[test]
    fn construct_hand_example() {
        let spec = NetworkSpec::deep_linear(vec![2, 1]).unwrap();
        let th = deep_linear_param_norm_construct(&spec, &[3.0, 4.0], Some(&[vec![1.0]])).unwrap();
        let r5 = 5f64.sqrt();
        assert!((th.data[0] - r5).abs() < 1e-15);
        assert!((th.data[1] - 3.0 / r5).abs() < 1e-15);
        assert!((th.data[2] - 4.0 / r5).abs() < 1e-15);
        assert!((dot(&th.data, &th.data) - 10.0).abs() < 1e-12);
        assert!(deep_linear_param_norm_construct(&spec, &[0.0, 0.0], None).is_err());
        assert!(deep_linear_param_norm_construct(&spec, &[1.0, 0.0], Some(&[vec![2.0]])).is_err());
    }
}
