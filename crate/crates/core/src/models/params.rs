use rand::Rng;
use serde::{Deserialize, Serialize};

use super::spec::{Activation, ModelKind, NetworkSpec};
use crate::error::{check_dim, Error, Result};

/// One named block of a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub offset: usize,
    pub shape: Vec<usize>,
}

impl Block {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Parameter layout of a spec. Matrices are stored row-major.
///
/// Deep linear networks use `[c; A_1; …; A_{L-1}]`, perceptrons `[c; A]`,
/// MLPs `layer{k}.weight, layer{k}.bias, …, head{j}.weight…, head{j}.bias…`.
pub fn layout(spec: &NetworkSpec) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut offset = 0;
    let mut push = |name: String, shape: Vec<usize>| {
        let len: usize = shape.iter().product();
        blocks.push(Block {
            name,
            offset,
            shape,
        });
        offset += len;
    };
    match &spec.kind {
        ModelKind::Linear => push("w".into(), vec![spec.input_dim]),
        ModelKind::DeepLinear { widths } => {
            push("c".into(), vec![*widths.last().unwrap()]);
            for l in 1..widths.len() {
                push(format!("A{l}"), vec![widths[l], widths[l - 1]]);
            }
        }
        ModelKind::TwoLayerPerceptron { hidden, .. } => {
            push("c".into(), vec![*hidden]);
            push("A".into(), vec![*hidden, spec.input_dim]);
        }
        ModelKind::Mlp { hidden, heads, .. } => {
            let mut fan_in = spec.input_dim;
            for (k, &h) in hidden.iter().enumerate() {
                push(format!("layer{k}.weight"), vec![h, fan_in]);
                push(format!("layer{k}.bias"), vec![h]);
                fan_in = h;
            }
            for (j, &c) in heads.iter().enumerate() {
                push(format!("head{j}.weight"), vec![c, fan_in]);
            }
            for (j, &c) in heads.iter().enumerate() {
                push(format!("head{j}.bias"), vec![c]);
            }
        }
    }
    blocks
}

/// A dense layer of the evaluation chain, described by offsets into θ.
#[derive(Debug, Clone)]
pub(crate) struct Layer {
    pub weight: usize,
    pub bias: Option<usize>,
    pub fan_in: usize,
    pub fan_out: usize,
    /// Activation applied to this layer's output (never set on the last layer).
    pub activation: Option<Activation>,
}

pub(crate) fn layers(spec: &NetworkSpec) -> Vec<Layer> {
    let blocks = layout(spec);
    let off = |name: &str| blocks.iter().find(|b| b.name == name).unwrap().offset;
    match &spec.kind {
        ModelKind::Linear => vec![Layer {
            weight: 0,
            bias: None,
            fan_in: spec.input_dim,
            fan_out: 1,
            activation: None,
        }],
        ModelKind::DeepLinear { widths } => {
            let mut out: Vec<Layer> = (1..widths.len())
                .map(|l| Layer {
                    weight: off(&format!("A{l}")),
                    bias: None,
                    fan_in: widths[l - 1],
                    fan_out: widths[l],
                    activation: None,
                })
                .collect();
            out.push(Layer {
                weight: off("c"),
                bias: None,
                fan_in: *widths.last().unwrap(),
                fan_out: 1,
                activation: None,
            });
            out
        }
        ModelKind::TwoLayerPerceptron { hidden, activation } => vec![
            Layer {
                weight: off("A"),
                bias: None,
                fan_in: spec.input_dim,
                fan_out: *hidden,
                activation: Some(*activation),
            },
            Layer {
                weight: off("c"),
                bias: None,
                fan_in: *hidden,
                fan_out: 1,
                activation: None,
            },
        ],
        ModelKind::Mlp {
            hidden,
            activation,
            heads,
        } => {
            let mut out = Vec::new();
            let mut fan_in = spec.input_dim;
            for (k, &h) in hidden.iter().enumerate() {
                out.push(Layer {
                    weight: off(&format!("layer{k}.weight")),
                    bias: Some(off(&format!("layer{k}.bias"))),
                    fan_in,
                    fan_out: h,
                    activation: Some(*activation),
                });
                fan_in = h;
            }
            // Head weights and biases are each contiguous, so the heads form one
            // stacked output layer.
            out.push(Layer {
                weight: off("head0.weight"),
                bias: Some(off("head0.bias")),
                fan_in,
                fan_out: heads.iter().sum(),
                activation: None,
            });
            out
        }
    }
}

/// Flat parameter vector θ together with its block partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub data: Vec<f64>,
    pub partition: Vec<Block>,
}

impl ParamVector {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        let partition = layout(spec);
        let n = partition.iter().map(Block::len).sum();
        Self {
            data: vec![0.0; n],
            partition,
        }
    }

    /// Wraps raw data in the partition of `spec`.
    pub fn from_data(spec: &NetworkSpec, data: Vec<f64>) -> Result<Self> {
        let mut p = Self::zeros(spec);
        check_dim(p.data.len(), data.len())?;
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        p.data = data;
        Ok(p)
    }

    /// Per-block uniform(−1/√fan_in, 1/√fan_in) draws in partition order.
    pub fn init_uniform<R: Rng>(spec: &NetworkSpec, rng: &mut R) -> Self {
        let mut p = Self::zeros(spec);
        let fan_ins = block_fan_ins(spec);
        for (block, fan_in) in p.partition.clone().iter().zip(fan_ins) {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in &mut p.data[block.range()] {
                *v = rng.random_range(-bound..bound);
            }
        }
        p
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn block(&self, name: &str) -> Option<&[f64]> {
        self.partition
            .iter()
            .find(|b| b.name == name)
            .map(|b| &self.data[b.range()])
    }

    pub fn block_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let r = self.partition.iter().find(|b| b.name == name)?.range();
        Some(&mut self.data[r])
    }

    /// Same partition, new data.
    pub fn with_data(&self, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self {
            data,
            partition: self.partition.clone(),
        }
    }

    /// Checks that the partition tiles the data exactly, in order.
    pub fn validate(&self) -> Result<()> {
        let mut expected = 0;
        for b in &self.partition {
            if b.offset != expected {
                return Err(Error::InvalidArgument(format!(
                    "block `{}` starts at {} but previous blocks end at {expected}",
                    b.name, b.offset
                )));
            }
            expected += b.len();
        }
        check_dim(expected, self.data.len())
    }

    pub fn check_spec(&self, spec: &NetworkSpec) -> Result<()> {
        check_dim(spec.num_params(), self.data.len())?;
        if self.partition != layout(spec) {
            return Err(Error::InvalidArgument(
                "parameter partition does not match the spec".into(),
            ));
        }
        Ok(())
    }
}

fn block_fan_ins(spec: &NetworkSpec) -> Vec<usize> {
    layout(spec)
        .iter()
        .map(|b| match &spec.kind {
            ModelKind::Linear => spec.input_dim,
            _ if b.name == "c" => b.shape[0],
            _ if b.shape.len() == 2 => b.shape[1],
            ModelKind::Mlp { hidden, .. } => {
                // Bias blocks share the fan-in of their weight matrix.
                if let Some(k) = b
                    .name
                    .strip_prefix("layer")
                    .and_then(|s| s.strip_suffix(".bias"))
                {
                    let k: usize = k.parse().unwrap();
                    if k == 0 {
                        spec.input_dim
                    } else {
                        hidden[k - 1]
                    }
                } else {
                    hidden.last().copied().unwrap_or(spec.input_dim)
                }
            }
            _ => b.shape[0],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deep_linear_layout_puts_c_first() {
        let s = NetworkSpec::deep_linear(vec![4, 3, 2]).unwrap();
        let names: Vec<_> = layout(&s).into_iter().map(|b| (b.name, b.offset)).collect();
        assert_eq!(
            names,
            vec![("c".into(), 0), ("A1".into(), 2), ("A2".into(), 14)]
        );
        assert_eq!(s.num_params(), 2 + 12 + 6);
    }

    #[test]
    fn mlp_layout_tiles_and_heads_stack() {
        let s = NetworkSpec::mlp(5, vec![8, 6], Activation::Silu, vec![4, 3]).unwrap();
        let p = ParamVector::zeros(&s);
        p.validate().unwrap();
        let l = layers(&s);
        assert_eq!(l.len(), 3);
        assert_eq!(l[2].fan_out, 7);
        assert_eq!(p.partition[5].name, "head1.weight");
        assert_eq!(p.partition[5].offset, l[2].weight + 4 * 6);
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let s = NetworkSpec::mlp(1, vec![16], Activation::Silu, vec![1]).unwrap();
        let a = ParamVector::init_uniform(&s, &mut ChaCha8Rng::seed_from_u64(7));
        let b = ParamVector::init_uniform(&s, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
        // Output layer fan-in is 16: bound 0.25.
        assert!(a
            .block("head0.weight")
            .unwrap()
            .iter()
            .all(|v| v.abs() < 0.25));
        assert!(a
            .block("layer0.weight")
            .unwrap()
            .iter()
            .any(|v| v.abs() > 0.25));
    }

    #[test]
    fn validate_catches_gaps() {
        let s = NetworkSpec::linear(3);
        let mut p = ParamVector::zeros(&s);
        p.partition[0].offset = 1;
        assert!(p.validate().is_err());
    }
}
