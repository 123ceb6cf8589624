mod common;

use common::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use unlearn_core::models::*;
use unlearn_core::numkit::Matrix;

fn random_spec(r: &mut ChaCha8Rng, draw: usize) -> NetworkSpec {
    let act = if r.random_bool(0.5) {
        Activation::Relu
    } else {
        Activation::Silu
    };
    let m = r.random_range(1..6);
    match draw % 5 {
        0 => NetworkSpec::linear(m),
        1 => {
            let l = r.random_range(2..5);
            let widths = (0..l).map(|_| r.random_range(1..5)).collect();
            NetworkSpec::deep_linear(widths).unwrap()
        }
        2 => NetworkSpec::perceptron(m, r.random_range(1..7), act).unwrap(),
        3 => NetworkSpec::mlp(
            m,
            vec![r.random_range(1..6), r.random_range(1..6)],
            act,
            vec![1],
        )
        .unwrap(),
        _ => NetworkSpec::mlp(m, vec![r.random_range(2..6)], act, vec![3, 2]).unwrap(),
    }
}

fn random_theta(r: &mut ChaCha8Rng, spec: &NetworkSpec) -> ParamVector {
    ParamVector::from_data(spec, gaussian_vec(r, spec.num_params())).unwrap()
}

fn rel_err(fd: &[f64], an: &[f64]) -> f64 {
    dist(fd, an) / norm(an).max(1.0)
}

fn central_diff(theta: &ParamVector, f: impl Fn(&ParamVector) -> f64) -> Vec<f64> {
    let h = 1e-5;
    (0..theta.len())
        .map(|i| {
            let mut p = theta.clone();
            p.data[i] += h;
            let up = f(&p);
            p.data[i] -= 2.0 * h;
            let down = f(&p);
            (up - down) / (2.0 * h)
        })
        .collect()
}

#[test]
fn model_gradients_match_finite_differences() {
    let mut r = rng(10);
    for draw in 0..150 {
        let spec = random_spec(&mut r, draw);
        let theta = random_theta(&mut r, &spec);
        let x = gaussian_vec(&mut r, spec.input_dim);
        let out = forward(&spec, &theta, &x).unwrap();
        let grads = output_gradients(&spec, &theta, &x).unwrap();
        for (head, g) in spec.heads().into_iter().zip(&grads) {
            let idx = head.start + argmax(&out[head.clone()]);
            let fd = central_diff(&theta, |p| forward(&spec, p, &x).unwrap()[idx]);
            let e = rel_err(&fd, g);
            assert!(e <= 1e-5, "draw {draw} {spec:?}: rel err {e}");
        }
        if spec.heads().len() == 1 {
            assert_eq!(model_gradient(&spec, &theta, &x).unwrap().data, grads[0]);
        }
    }
}

#[test]
fn loss_gradients_match_finite_differences() {
    let mut r = rng(11);
    for draw in 0..150 {
        let spec = random_spec(&mut r, draw);
        let theta = random_theta(&mut r, &spec);
        let kind = LossKind::for_spec(&spec);
        let n = r.random_range(1..5);
        let x = Matrix::from_rows(&gaussian_rows(&mut r, n, spec.input_dim)).unwrap();
        let y_rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                spec.heads()
                    .iter()
                    .map(|h| {
                        if h.len() == 1 {
                            r.random_range(-1.0..1.0)
                        } else {
                            r.random_range(0..h.len()) as f64
                        }
                    })
                    .collect()
            })
            .collect();
        let batch = Batch {
            x,
            y: Matrix::from_rows(&y_rows).unwrap(),
        };
        let (_, g) = loss_and_grad(&spec, &theta, &batch, kind).unwrap();
        let fd = central_diff(&theta, |p| loss(&spec, p, &batch, kind).unwrap());
        let e = rel_err(&fd, &g);
        assert!(e <= 1e-5, "draw {draw} {spec:?}: rel err {e}");
    }
}

#[test]
fn deep_linear_gradient_is_product_rule() {
    let mut r = rng(12);
    let spec = NetworkSpec::deep_linear(vec![3, 2]).unwrap();
    let theta = random_theta(&mut r, &spec);
    let x = gaussian_vec(&mut r, 3);
    let g = model_gradient(&spec, &theta, &x).unwrap();
    let c = theta.block("c").unwrap();
    let a = theta.block("A1").unwrap();
    let ax: Vec<f64> = (0..2).map(|i| dot(&a[i * 3..i * 3 + 3], &x)).collect();
    assert!(dist(g.block("c").unwrap(), &ax) < 1e-14);
    let cx: Vec<f64> = (0..2)
        .flat_map(|i| x.iter().map(move |xj| c[i] * xj))
        .collect();
    assert!(dist(g.block("A1").unwrap(), &cx) < 1e-14);
}

#[test]
fn adamw_matches_scalar_recursion_on_quadratic() {
    for wd in [0.0, 0.01] {
        let mut state = AdamWState::new(1, 0.1).with_weight_decay(wd);
        let mut theta = vec![0.0];
        let (mut m, mut v, mut t) = (0.0f64, 0.0f64, 0.0f64);
        for k in 1..=100 {
            let g = 2.0 * (theta[0] - 3.0);
            theta = adamw_step(&mut state, &theta, &[g]).unwrap();
            // independent recursion
            let g_o = 2.0 * (t - 3.0);
            t -= 0.1 * wd * t;
            m = 0.9 * m + 0.1 * g_o;
            v = 0.999 * v + 0.001 * g_o * g_o;
            let mh = m / (1.0 - 0.9f64.powi(k));
            let vh = v / (1.0 - 0.999f64.powi(k));
            t -= 0.1 * mh / (vh.sqrt() + 1e-8);
            assert!((theta[0] - t).abs() <= 1e-12, "step {k}");
        }
        assert!((theta[0] - 3.0).abs() < 0.1, "wd {wd}: θ = {}", theta[0]);
        assert_eq!(state.step, 100);
    }
}

#[test]
fn linear_training_matches_least_squares() {
    let mut r = rng(13);
    let m = 4;
    let rows = gaussian_rows(&mut r, m, m);
    let w_true = gaussian_vec(&mut r, m);
    let y: Vec<Vec<f64>> = rows.iter().map(|x| vec![dot(x, &w_true)]).collect();
    let data = LabeledDataset::new(rows.clone(), y.clone(), vec![true; m]).unwrap();
    let spec = NetworkSpec::linear(m);
    let mut cfg = TrainConfig::new(20000, m, 1e-2, 0);
    cfg.weight_decay = 0.0;
    let out = train(&spec, &data, LossKind::Mse, &cfg).unwrap();
    let yv: Vec<f64> = y.iter().map(|t| t[0]).collect();
    let oracle = householder_lstsq(&rows, &yv);
    assert!(
        dist(&out.theta.data, &oracle) <= 1e-3,
        "{:?} vs {oracle:?}",
        out.theta.data
    );
}

#[test]
fn gradient_descent_from_zero_stays_in_input_span() {
    let mut r = rng(14);
    let (n, m) = (3, 7);
    let rows = gaussian_rows(&mut r, n, m);
    let y: Vec<Vec<f64>> = (0..n).map(|_| vec![r.random_range(-1.0..1.0)]).collect();
    let data = LabeledDataset::new(rows.clone(), y, vec![true; n]).unwrap();
    let spec = NetworkSpec::linear(m);
    let mut cfg = TrainConfig::new(200, 2, 0.05, 5);
    cfg.weight_decay = 0.0;
    cfg.optimizer = OptimizerKind::Sgd;
    cfg.init = Init::Zeros;
    let null = null_space(&rows);
    assert_eq!(null.len(), m - n);
    let mut worst = 0.0f64;
    let mut steps = 0;
    train_observed(&spec, &data, LossKind::Mse, &cfg, |_, th| {
        let outside: f64 = null
            .iter()
            .map(|z| dot(z, &th.data).powi(2))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(outside);
        steps += 1;
    })
    .unwrap();
    assert_eq!(steps, 400);
    assert!(worst <= 1e-8, "residual outside span {worst}");
}

#[test]
fn training_is_bitwise_deterministic() {
    let mut r = rng(15);
    let spec = NetworkSpec::mlp(2, vec![8, 8], Activation::Silu, vec![1]).unwrap();
    let rows = gaussian_rows(&mut r, 20, 2);
    let y: Vec<Vec<f64>> = rows.iter().map(|x| vec![x[0].sin() + x[1]]).collect();
    let data = LabeledDataset::new(rows, y, vec![true; 20]).unwrap();
    let cfg = TrainConfig::new(30, 6, 1e-2, 42);
    let a = train(&spec, &data, LossKind::Mse, &cfg).unwrap();
    let b = train(&spec, &data, LossKind::Mse, &cfg).unwrap();
    let bits = |p: &ParamVector| p.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.theta), bits(&b.theta));
    let c = train(
        &spec,
        &data,
        LossKind::Mse,
        &TrainConfig::new(30, 6, 1e-2, 43),
    )
    .unwrap();
    assert_ne!(bits(&a.theta), bits(&c.theta));
}

#[test]
fn divergence_reports_epoch() {
    let spec = NetworkSpec::linear(1);
    let data = LabeledDataset::new(vec![vec![1e3]], vec![vec![1.0]], vec![true]).unwrap();
    let mut cfg = TrainConfig::new(1000, 1, 1.0, 0);
    cfg.optimizer = OptimizerKind::Sgd;
    match train(&spec, &data, LossKind::Mse, &cfg) {
        Err(unlearn_core::Error::Divergence { epoch }) => assert!(epoch < 1000),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn interpolation_gives_vanishing_loss_gradient() {
    let mut r = rng(16);
    let spec = NetworkSpec::mlp(1, vec![16, 16], Activation::Silu, vec![1]).unwrap();
    let theta = random_theta(&mut r, &spec);
    let xs: Vec<Vec<f64>> = (0..8).map(|_| vec![r.random_range(-3.0..3.0)]).collect();
    let ys: Vec<Vec<f64>> = xs.iter().map(|x| vec![x[0].sin()]).collect();
    let mask = (0..8).map(|i| i < 6).collect();
    let data = LabeledDataset::new(xs, ys, mask).unwrap();
    let fit = refit_output_layer(&spec, &theta, &data).unwrap();
    for idx in [data.retain_indices(), data.forget_indices()] {
        let batch = data.batch(&idx);
        let out = forward_rows(&spec, &fit, &batch.x).unwrap();
        let worst = (0..idx.len())
            .map(|i| (out.get(i, 0) - batch.y.get(i, 0)).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-9, "residual {worst}");
        let (l, g) = loss_and_grad(&spec, &fit, &batch, LossKind::Mse).unwrap();
        assert!(l <= 1e-18);
        assert!(norm(&g) <= 1e-7, "gradient norm {}", norm(&g));
    }
}
