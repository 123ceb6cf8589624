//! Batched forward and reverse passes over the dense layer chain.

use super::params::{layers, Layer, ParamVector};
use super::spec::NetworkSpec;
use crate::error::{check_dim, Result};
use crate::numkit::Matrix;

/// `C (m×n) = beta·C + A (m×k) · B (k×n)` with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: the asserts above bound every index reachable through the given
    // strides (both operands are dense with the stated row/column strides).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Intermediate values of one forward pass, kept for the reverse pass.
#[derive(Debug, Clone)]
pub struct Tape {
    batch: usize,
    /// Input to each layer (`batch × fan_in`, row-major).
    inputs: Vec<Vec<f64>>,
    /// Pre-activation output of each layer (`batch × fan_out`).
    pre: Vec<Vec<f64>>,
    output_dim: usize,
}

impl Tape {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Network outputs, `batch × output_dim` row-major.
    pub fn outputs(&self) -> &[f64] {
        self.pre.last().unwrap()
    }

    /// Pre-activation values of layer `layer`, `batch × fan_out`.
    pub fn pre(&self, layer: usize) -> &[f64] {
        &self.pre[layer]
    }

    pub fn output(&self, i: usize) -> &[f64] {
        &self.outputs()[i * self.output_dim..(i + 1) * self.output_dim]
    }
}

pub fn forward_batch(spec: &NetworkSpec, theta: &ParamVector, x: &Matrix) -> Result<Tape> {
    check_dim(spec.num_params(), theta.len())?;
    check_dim(spec.input_dim, x.cols())?;
    let chain = layers(spec);
    let n = x.rows();
    let th = theta.as_slice();
    let mut inputs = Vec::with_capacity(chain.len());
    let mut pre = Vec::with_capacity(chain.len());
    let mut h = x.data().to_vec();
    for layer in &chain {
        let z = affine(layer, th, &h, n);
        let next = match layer.activation {
            Some(act) => z.iter().map(|&v| act.apply(v)).collect(),
            None => z.clone(),
        };
        inputs.push(std::mem::replace(&mut h, next));
        pre.push(z);
    }
    Ok(Tape {
        batch: n,
        inputs,
        pre,
        output_dim: spec.output_dim,
    })
}

fn affine(layer: &Layer, theta: &[f64], h: &[f64], n: usize) -> Vec<f64> {
    let (fi, fo) = (layer.fan_in, layer.fan_out);
    let mut z = vec![0.0; n * fo];
    if let Some(b) = layer.bias {
        let bias = &theta[b..b + fo];
        for row in z.chunks_exact_mut(fo) {
            row.copy_from_slice(bias);
        }
    }
    let w = &theta[layer.weight..layer.weight + fo * fi];
    // Z (n×fo) += H (n×fi) · Wᵀ (fi×fo)
    gemm(n, fi, fo, h, fi as isize, 1, w, 1, fi as isize, 1.0, &mut z);
    z
}

/// Reverse pass: given `∂L/∂outputs` (`batch × output_dim`), returns `∂L/∂θ`.
pub fn backward_batch(
    spec: &NetworkSpec,
    theta: &ParamVector,
    tape: &Tape,
    d_out: &[f64],
) -> Result<Vec<f64>> {
    check_dim(tape.batch * spec.output_dim, d_out.len())?;
    let chain = layers(spec);
    let n = tape.batch;
    let th = theta.as_slice();
    let mut grad = vec![0.0; theta.len()];
    let mut dz = d_out.to_vec();
    for (idx, layer) in chain.iter().enumerate().rev() {
        let (fi, fo) = (layer.fan_in, layer.fan_out);
        let h = &tape.inputs[idx];
        // dW (fo×fi) = dZᵀ (fo×n) · H (n×fi)
        gemm(
            fo,
            n,
            fi,
            &dz,
            1,
            fo as isize,
            h,
            fi as isize,
            1,
            0.0,
            &mut grad[layer.weight..layer.weight + fo * fi],
        );
        if let Some(b) = layer.bias {
            let gb = &mut grad[b..b + fo];
            for row in dz.chunks_exact(fo) {
                for (g, d) in gb.iter_mut().zip(row) {
                    *g += d;
                }
            }
        }
        if idx == 0 {
            break;
        }
        // dH (n×fi) = dZ (n×fo) · W (fo×fi)
        let w = &th[layer.weight..layer.weight + fo * fi];
        let mut dh = vec![0.0; n * fi];
        gemm(
            n,
            fo,
            fi,
            &dz,
            fo as isize,
            1,
            w,
            fi as isize,
            1,
            0.0,
            &mut dh,
        );
        if let Some(act) = chain[idx - 1].activation {
            for (d, z) in dh.iter_mut().zip(&tape.pre[idx - 1]) {
                *d *= act.derivative(*z);
            }
        }
        dz = dh;
    }
    Ok(grad)
}
