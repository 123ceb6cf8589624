use super::Matrix;

/// Reduced column echelon form of `p`.
///
/// Gauss–Jordan elimination with column operations only (so the column space is
/// preserved), processing rows top to bottom and picking the largest remaining
/// entry in the row as pivot. Each nonzero output column carries a leading one;
/// that row is zero in every other column; pivot rows strictly increase left to
/// right. `tol` is relative to the largest column norm; entries whose magnitude
/// falls below it are snapped to exact zero.
pub fn reduced_column_echelon(p: &Matrix, tol: f64) -> Matrix {
    let (rows, cols) = (p.rows(), p.cols());
    let abs_tol = tol * p.max_column_norm();
    let mut m = p.clone();
    if abs_tol == 0.0 {
        return m;
    }
    let mut next = 0usize;
    for r in 0..rows {
        if next == cols {
            break;
        }
        let (best, best_val) =
            (next..cols)
                .map(|j| (j, m.get(r, j).abs()))
                .fold(
                    (next, -1.0),
                    |acc, cur| if cur.1 > acc.1 { cur } else { acc },
                );
        if best_val <= abs_tol {
            for j in next..cols {
                m.set(r, j, 0.0);
            }
            continue;
        }
        if best != next {
            for i in 0..rows {
                let a = m.get(i, next);
                let b = m.get(i, best);
                m.set(i, next, b);
                m.set(i, best, a);
            }
        }
        let piv = m.get(r, next);
        for i in 0..rows {
            let v = m.get(i, next) / piv;
            m.set(i, next, v);
        }
        m.set(r, next, 1.0);
        for j in 0..cols {
            if j == next {
                continue;
            }
            let f = m.get(r, j);
            if f == 0.0 {
                continue;
            }
            for i in 0..rows {
                let v = m.get(i, j) - f * m.get(i, next);
                m.set(i, j, v);
            }
            m.set(r, j, 0.0);
        }
        next += 1;
    }
    for v in m.data_mut() {
        if v.abs() < abs_tol {
            *v = 0.0;
        }
    }
    m
}

/// Row index of the leading one of each nonzero column of an echelon matrix,
/// or `None` for zero columns.
pub fn pivot_rows(echelon: &Matrix) -> Vec<Option<usize>> {
    (0..echelon.cols())
        .map(|j| (0..echelon.rows()).find(|&i| echelon.get(i, j) != 0.0))
        .collect()
}
