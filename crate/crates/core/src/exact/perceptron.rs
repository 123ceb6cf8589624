use crate::error::{check_dim, Error, Result};
use crate::models::{forward, ModelKind, NetworkSpec, ParamVector};
use crate::numkit::{
    dot, norm, orthonormalize, pivot_rows, reduced_column_echelon, Matrix, RANK_TOL,
};

/// A neuron counts as active when `|c_i|·‖a_i‖` exceeds this.
pub const ACTIVE_TOL: f64 = 1e-9;

/// Output weights at or below this magnitude are treated as zero by
/// [`sparsify_first_layer`].
const ZERO_TOL: f64 = 1e-12;

fn perceptron_dims(spec: &NetworkSpec) -> Result<(usize, usize)> {
    match &spec.kind {
        ModelKind::TwoLayerPerceptron { hidden, .. } => Ok((*hidden, spec.input_dim)),
        _ => Err(Error::InvalidArgument(
            "expected a two-layer perceptron spec".into(),
        )),
    }
}

/// Number of neurons with `|c_i|·‖a_i‖ > ACTIVE_TOL`.
pub fn active_neurons(spec: &NetworkSpec, theta: &ParamVector) -> Result<usize> {
    let (h, m) = perceptron_dims(spec)?;
    theta.check_spec(spec)?;
    let c = theta.block("c").unwrap();
    let a = theta.block("A").unwrap();
    Ok((0..h)
        .filter(|&i| c[i].abs() * norm(&a[i * m..(i + 1) * m]) > ACTIVE_TOL)
        .count())
}

/// Result of [`perceptron_prune`].
#[derive(Debug, Clone)]
pub struct Pruned {
    pub theta: ParamVector,
    pub delta_c: Vec<f64>,
    /// `rank(Φ)`, the sparsity bound on the new output weights.
    pub rank: usize,
    /// Output-weight indices zeroed by the construction.
    pub zeroed: Vec<usize>,
}

/// Zeroes output weights without changing predictions on the retain set:
/// `Δ_c ∈ span{φ(A*x_r)}⊥` is built from the reduced column echelon form of a
/// basis of that complement, so `c* + Δ_c` has at most `rank(Φ)` nonzeros.
pub fn perceptron_prune(
    spec: &NetworkSpec,
    theta_star: &ParamVector,
    retain_inputs: &[Vec<f64>],
    retain_targets: &[f64],
) -> Result<Pruned> {
    perceptron_prune_with(
        spec,
        theta_star,
        retain_inputs,
        retain_targets,
        reduced_column_echelon,
    )
}

/// [`perceptron_prune`] with a caller-supplied echelon routine (used to check
/// that the verification suite catches a broken one).
pub fn perceptron_prune_with<F>(
    spec: &NetworkSpec,
    theta_star: &ParamVector,
    retain_inputs: &[Vec<f64>],
    retain_targets: &[f64],
    rcef: F,
) -> Result<Pruned>
where
    F: Fn(&Matrix, f64) -> Matrix,
{
    let (h, m) = perceptron_dims(spec)?;
    let act = match spec.kind {
        ModelKind::TwoLayerPerceptron { activation, .. } => activation,
        _ => unreachable!(),
    };
    theta_star.check_spec(spec)?;
    check_dim(retain_inputs.len(), retain_targets.len())?;
    for (x, &y) in retain_inputs.iter().zip(retain_targets) {
        check_dim(m, x.len())?;
        let f = forward(spec, theta_star, x)?[0];
        if (f - y).abs() > 1e-8 {
            return Err(Error::Infeasible(format!(
                "θ* does not interpolate the retain set (residual {:e})",
                (f - y).abs()
            )));
        }
    }
    let a = theta_star.block("A").unwrap();
    let features: Vec<Vec<f64>> = retain_inputs
        .iter()
        .map(|x| {
            (0..h)
                .map(|i| act.apply(dot(&a[i * m..(i + 1) * m], x)))
                .collect()
        })
        .collect();
    let g = orthonormalize(h, &features, RANK_TOL)?;
    let complement = g.complement();
    let mut c = theta_star.block("c").unwrap().to_vec();
    let mut zeroed = Vec::new();
    if !complement.is_empty() {
        let p = Matrix::from_columns(h, complement.vectors())?;
        let echelon = rcef(&p, RANK_TOL);
        for (col, pivot) in pivot_rows(&echelon).into_iter().enumerate() {
            let Some(j) = pivot else { continue };
            let gamma = -c[j];
            for (i, ci) in c.iter_mut().enumerate() {
                *ci += gamma * echelon.get(i, col);
            }
            c[j] = 0.0;
            zeroed.push(j);
        }
    }
    let c_star = theta_star.block("c").unwrap();
    let delta_c = c.iter().zip(c_star).map(|(a, b)| a - b).collect();
    let mut theta = theta_star.clone();
    theta.block_mut("c").unwrap().copy_from_slice(&c);
    Ok(Pruned {
        theta,
        delta_c,
        rank: g.len(),
        zeroed,
    })
}

/// Zeroes row `i` of `A` wherever `c_i` is zero; predictions are unchanged.
pub fn sparsify_first_layer(spec: &NetworkSpec, theta: &ParamVector) -> Result<ParamVector> {
    let (h, m) = perceptron_dims(spec)?;
    theta.check_spec(spec)?;
    let c = theta.block("c").unwrap().to_vec();
    let mut out = theta.clone();
    let a = out.block_mut("A").unwrap();
    for i in 0..h {
        if c[i].abs() <= ZERO_TOL {
            a[i * m..(i + 1) * m].fill(0.0);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Activation;

    #[test]
    fn sparsify_hand_example() {
        let spec = NetworkSpec::perceptron(2, 2, Activation::Relu).unwrap();
        let th = ParamVector::from_data(&spec, vec![0.0, 1.0, 5.0, 5.0, 1.0, 2.0]).unwrap();
        let out = sparsify_first_layer(&spec, &th).unwrap();
        assert_eq!(out.block("A").unwrap(), &[0.0, 0.0, 1.0, 2.0]);
        let dense = ParamVector::from_data(&spec, vec![2.0, 1.0, 5.0, 5.0, 1.0, 2.0]).unwrap();
        assert_eq!(sparsify_first_layer(&spec, &dense).unwrap(), dense);
    }

    #[test]
    fn single_retain_point_keeps_one_neuron() {
        let spec = NetworkSpec::perceptron(2, 3, Activation::Relu).unwrap();
        let th = ParamVector::from_data(&spec, vec![0.5, -1.0, 2.0, 1.0, 0.3, 0.4, 1.0, 0.9, 0.2])
            .unwrap();
        let x = vec![1.0, 2.0];
        let y = forward(&spec, &th, &x).unwrap()[0];
        let out = perceptron_prune(&spec, &th, &[x.clone()], &[y]).unwrap();
        assert_eq!(out.rank, 1);
        assert!(active_neurons(&spec, &out.theta).unwrap() <= 1);
        assert!((forward(&spec, &out.theta, &x).unwrap()[0] - y).abs() < 1e-12);
    }

    #[test]
    fn non_interpolating_input_is_rejected() {
        let spec = NetworkSpec::perceptron(1, 2, Activation::Relu).unwrap();
        let th = ParamVector::from_data(&spec, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(perceptron_prune(&spec, &th, &[vec![1.0]], &[0.0]).is_err());
    }
}
