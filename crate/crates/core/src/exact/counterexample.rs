use super::deep_linear::effective_predictor;
use crate::error::Result;
use crate::models::{forward, model_gradient, LabeledDataset, NetworkSpec, ParamVector};
use crate::numkit::dot;

/// A two-layer linear network, a perturbation that satisfies the linearized
/// retain constraint exactly, and the data it fails on.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub spec: NetworkSpec,
    pub dataset: LabeledDataset,
    pub theta_star: ParamVector,
    pub delta: ParamVector,
}

/// `D = {(e₁,1), (e₂,1)}` with `D_r = {(e₁,1)}`, `c* = e₁+e₂`, `A* = I_m`,
/// `Δ_c = −e₃`, `Δ_A = e₃e₁ᵀ − e₂e₂ᵀ − e₃e₃ᵀ`. Requires `m ≥ 3` (smaller values
/// are raised to 3).
pub fn counterexample_c41(m: usize) -> Counterexample {
    let m = m.max(3);
    let spec = NetworkSpec::deep_linear(vec![m, m]).expect("valid widths");
    let e = |i: usize| {
        let mut v = vec![0.0; m];
        v[i] = 1.0;
        v
    };
    let dataset = LabeledDataset::new(
        vec![e(0), e(1)],
        vec![vec![1.0], vec![1.0]],
        vec![true, false],
    )
    .expect("consistent sizes");
    let mut theta_star = ParamVector::zeros(&spec);
    {
        let c = theta_star.block_mut("c").unwrap();
        c[0] = 1.0;
        c[1] = 1.0;
    }
    {
        let a = theta_star.block_mut("A1").unwrap();
        for i in 0..m {
            a[i * m + i] = 1.0;
        }
    }
    let mut delta = ParamVector::zeros(&spec);
    delta.block_mut("c").unwrap()[2] = -1.0;
    {
        let a = delta.block_mut("A1").unwrap();
        a[2 * m] = 1.0;
        a[m + 1] = -1.0;
        a[2 * m + 2] = -1.0;
    }
    Counterexample {
        spec,
        dataset,
        theta_star,
        delta,
    }
}

impl Counterexample {
    pub fn perturbed(&self) -> ParamVector {
        let data = self
            .theta_star
            .data
            .iter()
            .zip(&self.delta.data)
            .map(|(a, b)| a + b)
            .collect();
        self.theta_star.with_data(data)
    }

    /// Largest `|⟨Δ, ∇_θ f(θ*, x)⟩|` over the retain inputs.
    pub fn linearized_constraint(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for i in self.dataset.retain_indices() {
            let g = model_gradient(&self.spec, &self.theta_star, &self.dataset.inputs[i])?;
            worst = worst.max(dot(&g.data, &self.delta.data).abs());
        }
        Ok(worst)
    }

    /// `w(θ* + Δ)`.
    pub fn perturbed_predictor(&self) -> Result<Vec<f64>> {
        effective_predictor(&self.spec, &self.perturbed())
    }

    /// `(prediction, target)` of the perturbed model on each retain sample.
    pub fn retain_outputs(&self) -> Result<Vec<(f64, f64)>> {
        let theta = self.perturbed();
        self.dataset
            .retain_indices()
            .into_iter()
            .map(|i| {
                let f = forward(&self.spec, &theta, &self.dataset.inputs[i])?[0];
                Ok((f, self.dataset.targets[i][0]))
            })
            .collect()
    }
}
