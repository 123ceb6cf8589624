//! Toy label erasure: every content sample appears in three colours, the model
//! predicts content and colour, and only a sliver of red and green copies is
//! ever seen during training.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::models::{forward_rows, softmax, Activation, LabeledDataset, NetworkSpec, ParamVector};

pub const CONTENT_CLASSES: usize = 4;
/// Colour head order is red, green, gray.
pub const COLORS: usize = 3;
pub const GRAY: usize = 2;
const RED: usize = 0;
const GREEN: usize = 1;

const CLUSTER_OFFSET: f64 = 1.5;
const CLUSTER_STD: f64 = 0.6;
const FORGET_FRACTION: f64 = 0.05;

/// Inputs are two content coordinates plus a colour one-hot; heads are content
/// (4 classes) and colour (3 classes).
pub fn erasure_spec() -> NetworkSpec {
    NetworkSpec::mlp(
        2 + COLORS,
        vec![32, 32],
        Activation::Silu,
        vec![CONTENT_CLASSES, COLORS],
    )
    .expect("valid spec")
}

fn content_samples(n_per_class: usize, rng: &mut ChaCha8Rng) -> Vec<(Vec<f64>, usize)> {
    let noise = Normal::new(0.0, CLUSTER_STD).expect("positive std");
    let mut out = Vec::with_capacity(CONTENT_CLASSES * n_per_class);
    for _ in 0..n_per_class {
        for class in 0..CONTENT_CLASSES {
            let cx = if class & 1 == 0 {
                -CLUSTER_OFFSET
            } else {
                CLUSTER_OFFSET
            };
            let cy = if class & 2 == 0 {
                -CLUSTER_OFFSET
            } else {
                CLUSTER_OFFSET
            };
            out.push((vec![cx + noise.sample(rng), cy + noise.sample(rng)], class));
        }
    }
    out
}

fn colored(point: &[f64], class: usize, color: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = point.to_vec();
    x.extend((0..COLORS).map(|c| if c == color { 1.0 } else { 0.0 }));
    (x, vec![class as f64, color as f64])
}

/// Training set for the erasure task.
///
/// Retain is the gray copy of every content sample. Forget is a random 5% of the
/// red copies together with an equal number of green copies.
pub fn gen_label_erasure_toy(n_per_class: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = content_samples(n_per_class, &mut rng);
    let n = base.len();
    let n_forget = ((FORGET_FRACTION * n as f64).round() as usize).clamp(1, n.max(1));

    let mut inputs = Vec::with_capacity(n + 2 * n_forget);
    let mut targets = Vec::with_capacity(n + 2 * n_forget);
    let mut mask = Vec::with_capacity(n + 2 * n_forget);
    for (p, class) in &base {
        let (x, y) = colored(p, *class, GRAY);
        inputs.push(x);
        targets.push(y);
        mask.push(true);
    }
    for color in [RED, GREEN] {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        for &i in idx.iter().take(n_forget) {
            let (x, y) = colored(&base[i].0, base[i].1, color);
            inputs.push(x);
            targets.push(y);
            mask.push(false);
        }
    }
    LabeledDataset::new(inputs, targets, mask).expect("consistent sizes")
}

/// Held-out probes: fresh content samples in all three colours.
pub fn erasure_testset(n_per_class: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for (p, class) in content_samples(n_per_class, &mut rng) {
        for color in 0..COLORS {
            let (x, y) = colored(&p, class, color);
            inputs.push(x);
            targets.push(y);
        }
    }
    let mask = vec![true; inputs.len()];
    LabeledDataset::new(inputs, targets, mask).expect("consistent sizes")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErasureMetrics {
    /// Content accuracy on gray probes.
    pub retain_acc: f64,
    /// Mean of `(P(gray | x) − 1)²` over probes of every colour.
    pub gray_mse: f64,
}

pub fn erasure_metrics(
    spec: &NetworkSpec,
    theta: &ParamVector,
    probes: &LabeledDataset,
) -> Result<ErasureMetrics> {
    let gray: Vec<usize> = probes
        .all_indices()
        .into_iter()
        .filter(|&i| probes.targets[i][1] as usize == GRAY)
        .collect();
    let retain_acc = super::head_accuracy(spec, theta, probes, 0, &gray)?;

    let color = spec.heads()[1].clone();
    let out = forward_rows(spec, theta, &probes.full_batch().x)?;
    let gray_mse = (0..probes.len())
        .map(|i| {
            let p = softmax(&out.row(i)[color.clone()]);
            (p[GRAY] - 1.0).powi(2)
        })
        .sum::<f64>()
        / probes.len().max(1) as f64;
    Ok(ErasureMetrics {
        retain_acc,
        gray_mse,
    })
}
