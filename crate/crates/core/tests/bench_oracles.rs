use proptest::prelude::*;
use tempfile::TempDir;
use unlearn_core::bench::{
    central_range, collapse_configs, median, pareto_dominates, poison_configs, read_trials,
    run_bench, summarize, trial_seed, write_summary, BenchOptions, Suite,
};
use unlearn_core::unlearners::Method;

/// Order-statistic oracle: sorts with a plain comparison, so it assumes finite input.
fn oracle(values: &[f64]) -> (f64, f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = v.len();
    let med = if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    };
    let c = (k + 1) / 2;
    let drop_low = (k - c) / 2;
    (med, v[drop_low], v[drop_low + c - 1])
}

#[test]
fn documented_table_shapes() {
    // 20 trials: median of the 10th and 11th values, central 10 are ranks 6..15.
    let v: Vec<f64> = (0..20).rev().map(f64::from).collect();
    assert_eq!(median(&v), Some(9.5));
    assert_eq!(central_range(&v), Some((5.0, 14.0)));
    // 5 trials: central 3.
    let v = [4.0, 0.0, 3.0, 1.0, 2.0];
    assert_eq!(median(&v), Some(2.0));
    assert_eq!(central_range(&v), Some((1.0, 3.0)));
    // 1 trial: degenerate.
    assert_eq!(median(&[0.7]), Some(0.7));
    assert_eq!(central_range(&[0.7]), Some((0.7, 0.7)));
    assert_eq!(median(&[]), None);
}

proptest! {
    #[test]
    fn order_statistics_match_oracle(v in prop::collection::vec(-1e3f64..1e3, 1..40)) {
        let (m, lo, hi) = oracle(&v);
        prop_assert_eq!(median(&v).unwrap(), m);
        prop_assert_eq!(central_range(&v).unwrap(), (lo, hi));
        // A symmetric window (k − ⌈k/2⌉ even) brackets the median.
        if (v.len() - v.len().div_ceil(2)) % 2 == 0 {
            prop_assert!(lo <= m && m <= hi);
        }
    }
}

#[test]
fn trial_seeds_are_base_plus_index() {
    assert_eq!(trial_seed(100, 0), 100);
    assert_eq!(trial_seed(100, 7), 107);
    assert_eq!(trial_seed(u64::MAX, 1), 0);
}

#[test]
fn pareto_dominance_cases() {
    // (retain_acc up, gray_mse down)
    assert!(pareto_dominates((0.95, 0.1), (0.9, 0.2)));
    assert!(pareto_dominates((0.95, 0.2), (0.9, 0.2)));
    assert!(!pareto_dominates((0.9, 0.2), (0.9, 0.2)));
    assert!(!pareto_dominates((0.99, 0.3), (0.9, 0.2)));
}

#[test]
fn suite_method_tables() {
    for epochs in [10, 100, 1000] {
        let row = poison_configs(epochs, 3).unwrap();
        assert_eq!(row.len(), 6);
        for cfg in &row {
            cfg.validate().unwrap();
            assert_eq!(cfg.epochs, epochs);
            assert_eq!(cfg.seed, 3);
        }
    }
    assert!(poison_configs(50, 0).is_err());

    let methods: Vec<Method> = collapse_configs(0).iter().map(|c| c.method).collect();
    assert_eq!(methods.len(), Method::ALL.len());
    for c in collapse_configs(0) {
        c.validate().unwrap();
    }
}

#[test]
fn summary_recomputes_bit_identically_from_trials_csv() {
    let dir = TempDir::new().unwrap();
    let mut opts = BenchOptions::new(Suite::Collapse, 3, dir.path().join("run"));
    opts.base_seed = 11;
    opts.jobs = Some(1);
    let out = run_bench(&opts).unwrap();

    let rows = read_trials(&out.trials_csv).unwrap();
    assert_eq!(rows, out.rows);
    for r in &rows {
        assert_eq!(r.seed, trial_seed(11, r.trial));
    }
    let again = dir.path().join("summary_again.csv");
    write_summary(&again, &summarize(&rows)).unwrap();
    assert_eq!(
        std::fs::read(&out.summary_csv).unwrap(),
        std::fs::read(&again).unwrap()
    );

    // Per-trial files concatenate to the merged table.
    let mut merged = Vec::new();
    for t in 0..3 {
        let p = dir.path().join(format!("run/trials/trial_{t:04}.csv"));
        merged.extend(read_trials(&p).unwrap());
    }
    assert_eq!(merged, rows);
}

#[test]
fn concurrency_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let run = |jobs, name: &str| {
        let mut opts = BenchOptions::new(Suite::Collapse, 3, dir.path().join(name));
        opts.jobs = Some(jobs);
        run_bench(&opts).unwrap()
    };
    let a = run(1, "a");
    let b = run(3, "b");
    assert_eq!(
        std::fs::read(a.trials_csv).unwrap(),
        std::fs::read(b.trials_csv).unwrap()
    );
    assert_eq!(
        std::fs::read(a.summary_csv).unwrap(),
        std::fs::read(b.summary_csv).unwrap()
    );
}

#[test]
fn collapse_summary_has_reference_rows_and_central_three() {
    let dir = TempDir::new().unwrap();
    let mut opts = BenchOptions::new(Suite::Collapse, 5, dir.path());
    opts.jobs = Some(1);
    let out = run_bench(&opts).unwrap();
    let methods: Vec<&str> = out.summary.iter().map(|s| s.method.as_str()).collect();
    assert_eq!(methods[..2], ["initial", "gt"]);
    assert_eq!(out.summary.len(), 2 + Method::ALL.len());
    for s in &out.summary {
        assert_eq!(s.trials, 5);
        let values: Vec<f64> = out
            .rows
            .iter()
            .filter(|r| r.method == s.method)
            .map(|r| r.value)
            .collect();
        let (m, lo, hi) = oracle(&values);
        assert_eq!((s.median, s.central_lo, s.central_hi), (m, lo, hi));
    }
}

#[test]
fn zero_trials_and_zero_jobs_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let opts = BenchOptions::new(Suite::Erasure, 0, dir.path());
    assert!(run_bench(&opts).is_err());
    let mut opts = BenchOptions::new(Suite::Erasure, 1, dir.path());
    opts.jobs = Some(0);
    assert!(run_bench(&opts).is_err());
}
