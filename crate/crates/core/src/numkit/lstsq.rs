use super::basis::gram_schmidt;
use super::{axpy, dot, Matrix, RANK_TOL};
use crate::error::{check_dim, Error, Result};

/// Minimum-norm solution of the underdetermined system `X w = y`.
///
/// Computes `w = Xᵀ(XXᵀ)⁻¹y` through a thin QR factorization of `Xᵀ`
/// (Gram–Schmidt over the rows of `X`), so `w` lies in `row(X)` by construction.
/// Rows that are numerically dependent on earlier rows are dropped; the system
/// is then solved on the earliest independent rows and the dropped rows must
/// still be satisfied, otherwise the system is reported infeasible.
pub fn min_norm_least_squares(x: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    let (w, rank) = min_norm_on_independent_rows(x, y)?;
    if rank < x.rows() {
        let scale = 1.0 + y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (i, row) in x.row_vecs().iter().enumerate() {
            let r = dot(row, &w) - y[i];
            if r.abs() > 1e-8 * scale {
                return Err(Error::Infeasible(format!(
                    "rank-deficient system leaves residual {r:.3e} on row {i}"
                )));
            }
        }
    }
    Ok(w)
}

/// Like [`min_norm_least_squares`] but never rejects: rows dependent on earlier
/// rows are satisfied only as far as the independent rows allow. Returns the
/// solution and the number of independent rows used.
pub fn min_norm_on_independent_rows(x: &Matrix, y: &[f64]) -> Result<(Vec<f64>, usize)> {
    check_dim(x.rows(), y.len())?;
    let rows = x.row_vecs();
    let gs = gram_schmidt(x.cols(), &rows, RANK_TOL)?;

    // Each kept row satisfies x_{kept[j]} = Σ_{l ≤ j} r[j][l] q_l, so for
    // w = Σ z_l q_l the constraints read Rᵀ z = y_kept (lower triangular).
    let k = gs.kept.len();
    let mut z = vec![0.0; k];
    for j in 0..k {
        let rj = &gs.r[j];
        let mut acc = y[gs.kept[j]];
        for l in 0..j {
            acc -= rj[l] * z[l];
        }
        z[j] = acc / rj[j];
    }
    let mut w = vec![0.0; x.cols()];
    for (zl, q) in z.iter().zip(&gs.basis) {
        axpy(*zl, q, &mut w);
    }

    Ok((w, k))
}
