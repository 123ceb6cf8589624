use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Elementwise activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    /// `x·σ(x)`
    Silu,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Silu => z / (1.0 + (-z).exp()),
        }
    }

    /// Derivative; ReLU uses 0 at the kink.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Silu => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 + z * (1.0 - s))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// `f(θ, x) = θᵀx`
    Linear,
    /// `f(θ, x) = cᵀ A_{L-1} ⋯ A_1 x`; `widths = [h_0, …, h_{L-1}]` with `h_0 = m`.
    DeepLinear { widths: Vec<usize> },
    /// `f(θ, x) = cᵀ φ(A x)` with `A ∈ R^{hidden × m}`.
    TwoLayerPerceptron {
        hidden: usize,
        activation: Activation,
    },
    /// Fully connected network with biases. `heads` lists the output size of each
    /// head; a head of size 1 is a regression output, larger heads are class logits.
    Mlp {
        hidden: Vec<usize>,
        activation: Activation,
        heads: Vec<usize>,
    },
}

/// Architecture descriptor that interprets a [`super::ParamVector`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub input_dim: usize,
    pub output_dim: usize,
}

impl NetworkSpec {
    pub fn linear(input_dim: usize) -> Self {
        Self {
            kind: ModelKind::Linear,
            input_dim,
            output_dim: 1,
        }
    }

    pub fn deep_linear(widths: Vec<usize>) -> Result<Self> {
        let spec = Self {
            input_dim: widths.first().copied().unwrap_or(0),
            kind: ModelKind::DeepLinear { widths },
            output_dim: 1,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn perceptron(input_dim: usize, hidden: usize, activation: Activation) -> Result<Self> {
        let spec = Self {
            kind: ModelKind::TwoLayerPerceptron { hidden, activation },
            input_dim,
            output_dim: 1,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn mlp(
        input_dim: usize,
        hidden: Vec<usize>,
        activation: Activation,
        heads: Vec<usize>,
    ) -> Result<Self> {
        let spec = Self {
            output_dim: heads.iter().sum(),
            kind: ModelKind::Mlp {
                hidden,
                activation,
                heads,
            },
            input_dim,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Err(Error::config("spec", reason));
        if self.input_dim == 0 {
            return bad("input_dim must be positive");
        }
        match &self.kind {
            ModelKind::Linear => {}
            ModelKind::DeepLinear { widths } => {
                if widths.len() < 2 {
                    return bad("deep linear network needs L >= 2 widths");
                }
                if widths.contains(&0) {
                    return bad("widths must be positive");
                }
                if widths[0] != self.input_dim {
                    return bad("widths[0] must equal input_dim");
                }
            }
            ModelKind::TwoLayerPerceptron { hidden, .. } => {
                if *hidden == 0 {
                    return bad("hidden width must be positive");
                }
            }
            ModelKind::Mlp { hidden, heads, .. } => {
                if hidden.contains(&0) {
                    return bad("hidden widths must be positive");
                }
                if heads.is_empty() || heads.contains(&0) {
                    return bad("need at least one head of positive size");
                }
                if heads.iter().sum::<usize>() != self.output_dim {
                    return bad("output_dim must equal the sum of head sizes");
                }
            }
        }
        if !matches!(self.kind, ModelKind::Mlp { .. }) && self.output_dim != 1 {
            return bad("only MLP specs may have output_dim != 1");
        }
        Ok(())
    }

    /// Output index ranges, one per head. Non-MLP models have one scalar head.
    pub fn heads(&self) -> Vec<std::ops::Range<usize>> {
        match &self.kind {
            ModelKind::Mlp { heads, .. } => {
                let mut start = 0;
                heads
                    .iter()
                    .map(|&h| {
                        let r = start..start + h;
                        start += h;
                        r
                    })
                    .collect()
            }
            _ => vec![0..1],
        }
    }

    /// True when some head produces class logits.
    pub fn is_classifier(&self) -> bool {
        self.heads().iter().any(|h| h.len() > 1)
    }

    pub fn num_params(&self) -> usize {
        super::params::layout(self)
            .iter()
            .map(|b| b.shape.iter().product::<usize>())
            .sum()
    }
}
