//! Toy representation collapse: the label is carried both by an XOR shape
//! pattern and by a colour bit. The forget set breaks the colour shortcut, so a
//! model that fits it must have learnt shape.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::models::{Activation, LabeledDataset, NetworkSpec, ParamVector};

pub const GREEN: usize = 0;
pub const RED: usize = 1;

const SHAPE_OFFSET: f64 = 1.0;
const SHAPE_STD: f64 = 0.35;

/// Two shape coordinates plus a colour one-hot, one binary head.
pub fn collapse_spec() -> NetworkSpec {
    NetworkSpec::mlp(4, vec![32, 32], Activation::Silu, vec![2]).expect("valid spec")
}

/// Returns `(dataset, color_relabeled)`.
///
/// Class 0 is green and class 1 is red on the retain set; `forget_frac` of each
/// class gets the opposite colour. The relabelled copy has the same inputs with
/// the colour index as target.
pub fn gen_representation_collapse_toy(
    n: usize,
    forget_frac: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(0.0..1.0).contains(&forget_frac) {
        return Err(Error::InvalidArgument(format!(
            "forget_frac must lie in [0, 1), got {forget_frac}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(
            "need at least one sample per class".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, SHAPE_STD).expect("positive std");
    let mut inputs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut colors = Vec::with_capacity(n);
    let mut mask = Vec::with_capacity(n);
    for class in 0..2 {
        let n_c = n / 2 + if class == 0 { n % 2 } else { 0 };
        let n_forget = (forget_frac * n_c as f64).round() as usize;
        let mut swapped = vec![false; n_c];
        swapped[..n_forget].fill(true);
        swapped.shuffle(&mut rng);
        for &swap in &swapped {
            let sx = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            // XOR: class 0 lives on the diagonal quadrants, class 1 off it.
            let sy = if class == 0 { sx } else { -sx };
            let color = if swap { 1 - class } else { class };
            let mut x = vec![
                sx * SHAPE_OFFSET + noise.sample(&mut rng),
                sy * SHAPE_OFFSET + noise.sample(&mut rng),
            ];
            x.extend([GREEN, RED].map(|c| if c == color { 1.0 } else { 0.0 }));
            inputs.push(x);
            labels.push(vec![class as f64]);
            colors.push(vec![color as f64]);
            mask.push(!swap);
        }
    }
    let data = LabeledDataset::new(inputs.clone(), labels, mask.clone())?;
    let relabeled = LabeledDataset::new(inputs, colors, mask)?;
    Ok((data, relabeled))
}

/// Same inputs with the colour index as target, read off the colour one-hot.
pub fn relabel_by_color(data: &LabeledDataset) -> Result<LabeledDataset> {
    if data.input_dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: data.input_dim(),
        });
    }
    let colors = data
        .inputs
        .iter()
        .map(|x| {
            vec![if x[3] > x[2] {
                RED as f64
            } else {
                GREEN as f64
            }]
        })
        .collect();
    LabeledDataset::new(data.inputs.clone(), colors, data.retain_mask.clone())
}

/// Fraction of samples whose predicted class equals their colour index.
pub fn color_accuracy(
    spec: &NetworkSpec,
    theta: &ParamVector,
    relabeled: &LabeledDataset,
) -> Result<f64> {
    super::head_accuracy(spec, theta, relabeled, 0, &relabeled.all_indices())
}
