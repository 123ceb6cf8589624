use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::models::{forward_rows, Activation, LabeledDataset, NetworkSpec, ParamVector};
use crate::numkit::Matrix;

/// Input domain of the poisoning task.
pub const DOMAIN: (f64, f64) = (-15.0, 15.0);

const FORGET_TARGET: f64 = 1.5;

/// 1 → 300 → 300 → 1 SiLU network.
pub fn sine_spec() -> NetworkSpec {
    NetworkSpec::mlp(1, vec![300, 300], Activation::Silu, vec![1]).expect("valid spec")
}

/// `n_retain` points `(x, sin x)` followed by `n_forget` points `(x, 1.5)`, with
/// every `x` uniform on the domain.
pub fn gen_sine_poison(n_retain: usize, n_forget: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::with_capacity(n_retain + n_forget);
    let mut targets = Vec::with_capacity(n_retain + n_forget);
    for i in 0..n_retain + n_forget {
        let x = rng.random_range(DOMAIN.0..=DOMAIN.1);
        inputs.push(vec![x]);
        targets.push(vec![if i < n_retain { x.sin() } else { FORGET_TARGET }]);
    }
    let mask = (0..n_retain + n_forget).map(|i| i < n_retain).collect();
    LabeledDataset::new(inputs, targets, mask).expect("consistent sizes")
}

/// `grid_size` evenly spaced points covering the domain, endpoints included.
pub fn sine_grid(grid_size: usize) -> Vec<f64> {
    let (lo, hi) = DOMAIN;
    let step = (hi - lo) / (grid_size - 1) as f64;
    (0..grid_size)
        .map(|i| {
            if i + 1 == grid_size {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}

/// `max |f(x) − sin x|` over the grid for an arbitrary function.
pub fn sup_deviation_fn(f: impl Fn(f64) -> f64, grid_size: usize) -> Result<f64> {
    if grid_size < 2 {
        return Err(Error::InvalidArgument(
            "grid_size must be at least 2".into(),
        ));
    }
    Ok(sine_grid(grid_size)
        .into_iter()
        .map(|x| (f(x) - x.sin()).abs())
        .fold(0.0, f64::max))
}

/// Grid approximation of `sup_x |f(θ, x) − sin x|` on the domain.
pub fn sup_deviation(spec: &NetworkSpec, theta: &ParamVector, grid_size: usize) -> Result<f64> {
    if grid_size < 2 {
        return Err(Error::InvalidArgument(
            "grid_size must be at least 2".into(),
        ));
    }
    let grid = sine_grid(grid_size);
    let out = forward_rows(spec, theta, &Matrix::new(grid_size, 1, grid.clone())?)?;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(i, x)| (out.get(i, 0) - x.sin()).abs())
        .fold(0.0, f64::max))
}
