//! Deterministic dense linear-algebra kernels.
//!
//! Everything here is a pure function of its inputs. Rank decisions use a single
//! relative tolerance, [`RANK_TOL`], scaled by the largest input vector norm.

mod basis;
mod echelon;
mod lstsq;
mod matrix;

pub use basis::{orthonormalize, project, project_complement, OrthonormalBasis};
pub use echelon::{pivot_rows, reduced_column_echelon};
pub use lstsq::{min_norm_least_squares, min_norm_on_independent_rows};
pub use matrix::Matrix;

/// Relative rank tolerance shared across the crate.
pub const RANK_TOL: f64 = 1e-10;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
