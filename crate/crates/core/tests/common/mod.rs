//! Test-only oracles, independent of the library's solution paths.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use unlearn_core::models::{forward, Activation, NetworkSpec, ParamVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

pub fn gaussian_rows(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| gaussian_vec(rng, cols)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Least squares `min ‖A w − b‖` for a tall full-column-rank `A` (row-major
/// `rows × cols`) via Householder QR. Independent of the library's Gram–Schmidt.
pub fn householder_lstsq(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let rows = a.len();
    let cols = a[0].len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();
    for k in 0..cols {
        let alpha_sq: f64 = (k..rows).map(|i| m[i][k] * m[i][k]).sum();
        let alpha = -m[k][k].signum() * alpha_sq.sqrt();
        let mut v: Vec<f64> = (k..rows).map(|i| m[i][k]).collect();
        v[0] -= alpha;
        let vn: f64 = v.iter().map(|x| x * x).sum();
        if vn == 0.0 {
            continue;
        }
        for j in k..cols {
            let s: f64 = (k..rows).map(|i| v[i - k] * m[i][j]).sum::<f64>() * 2.0 / vn;
            for i in k..rows {
                m[i][j] -= s * v[i - k];
            }
        }
        let s: f64 = (k..rows).map(|i| v[i - k] * rhs[i]).sum::<f64>() * 2.0 / vn;
        for i in k..rows {
            rhs[i] -= s * v[i - k];
        }
    }
    let mut w = vec![0.0; cols];
    for k in (0..cols).rev() {
        let mut acc = rhs[k];
        for j in k + 1..cols {
            acc -= m[k][j] * w[j];
        }
        w[k] = acc / m[k][k];
    }
    w
}

/// Ridge solution `(XᵀX + λI)⁻¹Xᵀy`, computed as the least-squares solution of
/// the augmented system `[X; √λ I] w ≈ [y; 0]`.
pub fn ridge_oracle(x_rows: &[Vec<f64>], y: &[f64], lambda: f64) -> Vec<f64> {
    let m = x_rows[0].len();
    let mut a = x_rows.to_vec();
    let mut b = y.to_vec();
    for i in 0..m {
        let mut r = vec![0.0; m];
        r[i] = lambda.sqrt();
        a.push(r);
        b.push(0.0);
    }
    householder_lstsq(&a, &b)
}

/// Solve a square system by Gaussian elimination with partial pivoting.
pub fn solve_square(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(r, bi)| {
            let mut r = r.clone();
            r.push(*bi);
            r
        })
        .collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].abs().partial_cmp(&m[j][k].abs()).unwrap())
            .unwrap();
        m.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..=n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut acc = m[k][n];
        for j in k + 1..n {
            acc -= m[k][j] * x[j];
        }
        x[k] = acc / m[k][k];
    }
    x
}

/// Inverse of a square matrix (rows), column by column.
pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            solve_square(a, &e)
        })
        .collect();
    (0..n)
        .map(|i| (0..n).map(|j| cols[j][i]).collect())
        .collect()
}

/// Basis of the null space of `x_rows` (k × m, full row rank), from the trailing
/// columns of a complete Householder reflection sequence applied to `Xᵀ`.
pub fn null_space(x_rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = x_rows.len();
    let m = x_rows[0].len();
    // Columns of Xᵀ as the working matrix (m × k).
    let mut a: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..k).map(|j| x_rows[j][i]).collect())
        .collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::new();
    for c in 0..k {
        let alpha_sq: f64 = (c..m).map(|i| a[i][c] * a[i][c]).sum();
        let alpha = -a[c][c].signum() * alpha_sq.sqrt();
        let mut v = vec![0.0; m];
        for i in c..m {
            v[i] = a[i][c];
        }
        v[c] -= alpha;
        let vn: f64 = v.iter().map(|x| x * x).sum();
        for j in c..k {
            let s: f64 = (c..m).map(|i| v[i] * a[i][j]).sum::<f64>() * 2.0 / vn;
            for i in c..m {
                a[i][j] -= s * v[i];
            }
        }
        reflectors.push(v);
    }
    // Q = H_0 H_1 ... H_{k-1}; null space = Q e_j for j >= k.
    (k..m)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            for v in reflectors.iter().rev() {
                let vn: f64 = v.iter().map(|x| x * x).sum();
                let s = dot(v, &e) * 2.0 / vn;
                for i in 0..m {
                    e[i] -= s * v[i];
                }
            }
            e
        })
        .collect()
}

/// Minimum-norm solution `Xᵀ(XXᵀ)⁻¹y` through the normal equations of the rows.
pub fn min_norm_oracle(x_rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let gram: Vec<Vec<f64>> = x_rows
        .iter()
        .map(|a| x_rows.iter().map(|b| dot(a, b)).collect())
        .collect();
    let z = solve_square(&gram, y);
    let m = x_rows[0].len();
    (0..m)
        .map(|j| x_rows.iter().zip(&z).map(|(r, zi)| r[j] * zi).sum())
        .collect()
}

/// Numerical rank by Gaussian elimination with complete pivoting.
pub fn rank_oracle(rows: &[Vec<f64>], rel_tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut a = rows.to_vec();
    let (n, m) = (a.len(), a[0].len());
    let scale = a.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut rank = 0;
    while rank < n.min(m) {
        let (mut pi, mut pj, mut best) = (0, 0, 0.0);
        for (i, row) in a.iter().enumerate().skip(rank) {
            for (j, v) in row.iter().enumerate() {
                if v.abs() > best {
                    best = v.abs();
                    pi = i;
                    pj = j;
                }
            }
        }
        if best <= rel_tol * scale {
            break;
        }
        a.swap(rank, pi);
        let pivot = a[rank].clone();
        for row in a.iter_mut().skip(rank + 1) {
            let f = row[pj] / pivot[pj];
            for j in 0..m {
                row[j] -= f * pivot[j];
            }
            row[pj] = 0.0;
        }
        rank += 1;
    }
    rank
}

/// `Ã₁ → M₁Ã₁`, `Ã_ℓ → M_ℓ Ã_ℓ M_{ℓ−1}⁻¹`, `c̃ → M_{L−1}⁻ᵀ c̃`.
pub fn reparameterize(r: &mut ChaCha8Rng, widths: &[usize], theta: &ParamVector) -> ParamVector {
    let l = widths.len();
    let ms: Vec<Vec<Vec<f64>>> = widths[1..]
        .iter()
        .map(|&h| {
            let mut m = gaussian_rows(r, h, h);
            for (i, row) in m.iter_mut().enumerate() {
                row[i] += 2.0;
            }
            m
        })
        .collect();
    let inv: Vec<Vec<Vec<f64>>> = ms.iter().map(|m| invert(m)).collect();
    let mat = |name: &str, rows: usize, cols: usize| -> Vec<Vec<f64>> {
        let d = theta.block(name).unwrap();
        (0..rows)
            .map(|i| d[i * cols..(i + 1) * cols].to_vec())
            .collect()
    };
    let mul = |a: &[Vec<f64>], b: &[Vec<f64>]| -> Vec<Vec<f64>> {
        a.iter()
            .map(|row| {
                (0..b[0].len())
                    .map(|j| row.iter().zip(b).map(|(x, br)| x * br[j]).sum())
                    .collect()
            })
            .collect()
    };
    let mut out = theta.clone();
    let a1 = mul(&ms[0], &mat("A1", widths[1], widths[0]));
    out.block_mut("A1").unwrap().copy_from_slice(&a1.concat());
    for k in 2..l {
        let a = mat(&format!("A{k}"), widths[k], widths[k - 1]);
        let ak = mul(&mul(&ms[k - 1], &a), &inv[k - 2]);
        out.block_mut(&format!("A{k}"))
            .unwrap()
            .copy_from_slice(&ak.concat());
    }
    let c = theta.block("c").unwrap();
    let last = &inv[l - 2];
    let new_c: Vec<f64> = (0..c.len())
        .map(|i| (0..c.len()).map(|j| last[j][i] * c[j]).sum())
        .collect();
    out.block_mut("c").unwrap().copy_from_slice(&new_c);
    out
}

/// Random ReLU perceptron with `nr` retain inputs and its own outputs as targets.
pub fn perceptron_instance(
    r: &mut ChaCha8Rng,
    h: usize,
    m: usize,
    nr: usize,
) -> (NetworkSpec, ParamVector, Vec<Vec<f64>>, Vec<f64>) {
    let spec = NetworkSpec::perceptron(m, h, Activation::Relu).unwrap();
    let theta = ParamVector::from_data(&spec, gaussian_vec(r, spec.num_params())).unwrap();
    let xs = gaussian_rows(r, nr, m);
    let ys = xs
        .iter()
        .map(|x| forward(&spec, &theta, x).unwrap()[0])
        .collect();
    (spec, theta, xs, ys)
}
