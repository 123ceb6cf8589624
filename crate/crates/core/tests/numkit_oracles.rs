mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use unlearn_core::numkit::{
    min_norm_least_squares, orthonormalize, pivot_rows, project, project_complement,
    reduced_column_echelon, Matrix, RANK_TOL,
};

fn gram_identity_error(vs: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in vs.iter().enumerate() {
        for (j, b) in vs.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot(a, b) - target).abs());
        }
    }
    worst
}

#[test]
fn twenty_vectors_in_r10_give_identity_gram() {
    let mut r = rng(1);
    let vs = gaussian_rows(&mut r, 20, 10);
    let b = orthonormalize(10, &vs, RANK_TOL).unwrap();
    assert_eq!(b.len(), 10);
    assert!(gram_identity_error(b.vectors()) <= 1e-10);
}

#[test]
fn orthonormality_over_1000_random_instances() {
    let mut r = rng(2);
    for _ in 0..1000 {
        let dim = r.random_range(1..=64);
        let count = r.random_range(0..=dim + 4);
        let mut vs = gaussian_rows(&mut r, count, dim);
        // Inject exact dependencies now and then.
        if count >= 3 {
            let combo: Vec<f64> = vs[0].iter().zip(&vs[1]).map(|(a, b)| 2.0 * a - b).collect();
            vs.push(combo);
        }
        let b = orthonormalize(dim, &vs, RANK_TOL).unwrap();
        assert!(b.len() <= dim);
        for v in b.vectors() {
            assert!((norm(v) - 1.0).abs() <= 1e-12);
        }
        for i in 0..b.len() {
            for j in 0..i {
                assert!(dot(&b.vectors()[i], &b.vectors()[j]).abs() <= 1e-10);
            }
        }
        // Same span: every input is reproduced by its projection.
        for v in &vs {
            let p = project(v, &b).unwrap();
            assert!(dist(&p, v) <= 1e-9 * (1.0 + norm(v)));
        }
    }
}

#[test]
fn projection_residual_is_orthogonal() {
    let mut r = rng(3);
    for _ in 0..50 {
        let vs = gaussian_rows(&mut r, 3, 8);
        let b = orthonormalize(8, &vs, RANK_TOL).unwrap();
        let x = gaussian_vec(&mut r, 8);
        let res = project_complement(&x, &b).unwrap();
        for v in b.vectors() {
            assert!(dot(&res, v).abs() <= 1e-10);
        }
        let p = project(&x, &b).unwrap();
        let recon: Vec<f64> = p.iter().zip(&res).map(|(a, c)| a + c).collect();
        assert!(dist(&recon, &x) <= 1e-12 * (1.0 + norm(&x)));
        // Idempotence for vectors already in the span.
        let pp = project(&p, &b).unwrap();
        assert!(dist(&pp, &p) <= 1e-12 * (1.0 + norm(&p)));
    }
}

#[test]
fn min_norm_dominates_random_feasible_points() {
    let mut r = rng(4);
    let rows = gaussian_rows(&mut r, 3, 8);
    let y = gaussian_vec(&mut r, 3);
    let x = Matrix::from_rows(&rows).unwrap();
    let w = min_norm_least_squares(&x, &y).unwrap();
    let resid = x.matvec(&w).unwrap();
    assert!(dist(&resid, &y) <= 1e-8);
    let null = null_space(&rows);
    assert_eq!(null.len(), 5);
    // w is in row(X): no component along the null space.
    for z in &null {
        assert!(dot(&w, z).abs() <= 1e-8);
    }
    let wn = norm(&w);
    for _ in 0..1000 {
        let coeffs = gaussian_vec(&mut r, null.len());
        let mut alt = w.clone();
        for (c, z) in coeffs.iter().zip(&null) {
            for (a, zi) in alt.iter_mut().zip(z) {
                *a += c * zi;
            }
        }
        assert!(dist(&x.matvec(&alt).unwrap(), &y) <= 1e-8);
        assert!(wn <= norm(&alt));
    }
}

#[test]
fn min_norm_matches_ridgeless_limit() {
    let mut r = rng(5);
    for _ in 0..100 {
        let m = r.random_range(4..=24);
        let n = r.random_range(1..m);
        let rows = gaussian_rows(&mut r, n, m);
        let y = gaussian_vec(&mut r, n);
        let w = min_norm_least_squares(&Matrix::from_rows(&rows).unwrap(), &y).unwrap();
        let ridge = ridge_oracle(&rows, &y, 1e-12);
        assert!(dist(&w, &ridge) <= 1e-6, "distance {}", dist(&w, &ridge));
    }
}

fn column_space_residual(a: &Matrix, b: &Matrix) -> f64 {
    // Project every column of `a` onto span(columns of `b`).
    let basis = orthonormalize(b.rows(), &b.columns(), RANK_TOL).unwrap();
    a.columns()
        .iter()
        .map(|c| dist(&project(c, &basis).unwrap(), c))
        .fold(0.0, f64::max)
}

#[test]
fn rcef_of_tall_full_rank_matrix() {
    let mut r = rng(6);
    let cols: Vec<Vec<f64>> = gaussian_rows(&mut r, 3, 6);
    let p = Matrix::from_columns(6, &cols).unwrap();
    let e = reduced_column_echelon(&p, RANK_TOL);
    let piv: Vec<usize> = pivot_rows(&e).into_iter().map(Option::unwrap).collect();
    assert!(piv.windows(2).all(|w| w[0] < w[1]));
    for (j, &i) in piv.iter().enumerate() {
        assert_eq!(e.get(i, j), 1.0);
        for k in 0..3 {
            if k != j {
                assert_eq!(e.get(i, k), 0.0);
            }
        }
    }
    assert!(column_space_residual(&p, &e) <= 1e-8);
    assert!(column_space_residual(&e, &p) <= 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rcef_preserves_rank_and_column_space(
        seed in any::<u64>(),
        rows in 1usize..10,
        rank in 1usize..6,
        cols in 1usize..8,
    ) {
        let mut r = rng(seed);
        let rank = rank.min(rows).min(cols);
        let basis_cols = gaussian_rows(&mut r, rank, rows);
        // Each output column is a random combination of `rank` generators.
        let columns: Vec<Vec<f64>> = (0..cols).map(|_| {
            let c = gaussian_vec(&mut r, rank);
            (0..rows).map(|i| (0..rank).map(|k| c[k] * basis_cols[k][i]).sum()).collect()
        }).collect();
        let p = Matrix::from_columns(rows, &columns).unwrap();
        let e = reduced_column_echelon(&p, RANK_TOL);
        let pivots = pivot_rows(&e).into_iter().flatten().count();
        let ortho = orthonormalize(rows, &p.columns(), RANK_TOL).unwrap().len();
        prop_assert_eq!(pivots, ortho);
        prop_assert!(column_space_residual(&p, &e) <= 1e-8);
        prop_assert!(column_space_residual(&e, &p) <= 1e-8);
    }

    #[test]
    fn projection_is_idempotent_contraction(seed in any::<u64>(), dim in 1usize..40, k in 0usize..8) {
        let mut r = rng(seed);
        let vs = gaussian_rows(&mut r, k, dim);
        let b = orthonormalize(dim, &vs, RANK_TOL).unwrap();
        let x = gaussian_vec(&mut r, dim);
        let px = project(&x, &b).unwrap();
        let ppx = project(&px, &b).unwrap();
        prop_assert!(dist(&ppx, &px) <= 1e-12 * (1.0 + norm(&x)));
        prop_assert!(norm(&px) <= norm(&x) * (1.0 + 1e-12));
    }
}
