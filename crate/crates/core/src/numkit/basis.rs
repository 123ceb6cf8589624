use serde::{Deserialize, Serialize};

use super::{axpy, dot, norm};
use crate::error::{check_dim, Error, Result};

/// Orthonormal spanning set of a subspace of `R^ambient_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthonormalBasis {
    ambient_dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl OrthonormalBasis {
    pub fn empty(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            vectors: Vec::new(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Extends the basis to all of `R^n` by orthonormalizing the standard basis
    /// vectors `e_1, e_2, ...` (in index order) against it, and returns only the
    /// new vectors: an orthonormal basis of the orthogonal complement.
    pub fn complement(&self) -> OrthonormalBasis {
        let n = self.ambient_dim;
        let mut all = self.vectors.clone();
        let target = n - self.vectors.len();
        let mut extra = Vec::with_capacity(target);
        for i in 0..n {
            if extra.len() == target {
                break;
            }
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            reorthogonalize(&mut r, &all, None);
            let rn = norm(&r);
            // A unit vector's residual is either clearly independent or tiny.
            if rn > 1e-6 {
                r.iter_mut().for_each(|v| *v /= rn);
                all.push(r.clone());
                extra.push(r);
            }
        }
        OrthonormalBasis {
            ambient_dim: n,
            vectors: extra,
        }
    }
}

/// Two passes of modified Gram–Schmidt of `r` against `basis`. When `coeffs` is
/// given, the accumulated projection coefficients are added into it.
fn reorthogonalize(r: &mut [f64], basis: &[Vec<f64>], mut coeffs: Option<&mut [f64]>) {
    for _ in 0..2 {
        for (k, q) in basis.iter().enumerate() {
            let c = dot(r, q);
            axpy(-c, q, r);
            if let Some(cs) = coeffs.as_deref_mut() {
                cs[k] += c;
            }
        }
    }
}

/// Result of a rank-revealing Gram–Schmidt sweep over an ordered vector list.
pub(crate) struct GramSchmidt {
    pub basis: Vec<Vec<f64>>,
    /// Indices of the input vectors that contributed a new basis vector.
    pub kept: Vec<usize>,
    /// `r[j]` holds the coordinates of kept input `j` in the basis
    /// (upper-triangular: only the first `j + 1` entries are meaningful).
    pub r: Vec<Vec<f64>>,
}

pub(crate) fn gram_schmidt(
    ambient_dim: usize,
    vectors: &[Vec<f64>],
    tol: f64,
) -> Result<GramSchmidt> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tol must be > 0, got {tol}"
        )));
    }
    for v in vectors {
        check_dim(ambient_dim, v.len())?;
    }
    let scale = vectors.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let cutoff = tol * scale;
    let mut out = GramSchmidt {
        basis: Vec::new(),
        kept: Vec::new(),
        r: Vec::new(),
    };
    if scale == 0.0 {
        return Ok(out);
    }
    for (idx, v) in vectors.iter().enumerate() {
        let mut r = v.clone();
        let mut coeffs = vec![0.0; out.basis.len() + 1];
        reorthogonalize(&mut r, &out.basis, Some(&mut coeffs));
        let rn = norm(&r);
        if rn <= cutoff || out.basis.len() == ambient_dim {
            continue;
        }
        r.iter_mut().for_each(|x| *x /= rn);
        *coeffs.last_mut().unwrap() = rn;
        out.basis.push(r);
        out.kept.push(idx);
        out.r.push(coeffs);
    }
    Ok(out)
}

/// Orthonormal basis for the span of `vectors`, built by modified Gram–Schmidt
/// in input order with one full re-orthogonalization pass.
///
/// A vector whose residual norm is at most `tol * max_i ‖v_i‖` is treated as
/// dependent and dropped.
pub fn orthonormalize(
    ambient_dim: usize,
    vectors: &[Vec<f64>],
    tol: f64,
) -> Result<OrthonormalBasis> {
    let gs = gram_schmidt(ambient_dim, vectors, tol)?;
    Ok(OrthonormalBasis {
        ambient_dim,
        vectors: gs.basis,
    })
}

/// Euclidean projection of `x` onto the span of `basis`.
pub fn project(x: &[f64], basis: &OrthonormalBasis) -> Result<Vec<f64>> {
    check_dim(basis.ambient_dim, x.len())?;
    let mut out = vec![0.0; x.len()];
    for v in &basis.vectors {
        axpy(dot(x, v), v, &mut out);
    }
    Ok(out)
}

/// Projection of `x` onto the orthogonal complement of `basis`.
pub fn project_complement(x: &[f64], basis: &OrthonormalBasis) -> Result<Vec<f64>> {
    let p = project(x, basis)?;
    Ok(x.iter().zip(&p).map(|(a, b)| a - b).collect())
}
