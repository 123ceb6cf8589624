//! Order statistics used in the summary tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::TrialRow;

/// Median; the mean of the two middle values for an even count.
pub fn median(values: &[f64]) -> Option<f64> {
    let v = sorted(values);
    let k = v.len();
    match k {
        0 => None,
        _ if k % 2 == 1 => Some(v[k / 2]),
        _ => Some(0.5 * (v[k / 2 - 1] + v[k / 2])),
    }
}

/// Smallest and largest of the central `⌈k/2⌉` sorted values.
pub fn central_range(values: &[f64]) -> Option<(f64, f64)> {
    let v = sorted(values);
    let k = v.len();
    if k == 0 {
        return None;
    }
    let c = k.div_ceil(2);
    let start = (k - c) / 2;
    Some((v[start], v[start + c - 1]))
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub metric: String,
    pub trials: usize,
    pub median: f64,
    pub central_lo: f64,
    pub central_hi: f64,
}

/// One row per `(method, metric)` in order of first appearance.
pub fn summarize(rows: &[TrialRow]) -> Vec<SummaryRow> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in rows {
        let key = (r.method.clone(), r.metric.clone());
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r.value);
    }
    order
        .into_iter()
        .map(|key| {
            let values = &groups[&key];
            let (central_lo, central_hi) = central_range(values).expect("group is non-empty");
            SummaryRow {
                method: key.0,
                metric: key.1,
                trials: values.len(),
                median: median(values).expect("group is non-empty"),
                central_lo,
                central_hi,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_values_use_the_central_ten() {
        let v: Vec<f64> = (0..20).rev().map(f64::from).collect();
        assert_eq!(median(&v), Some(9.5));
        assert_eq!(central_range(&v), Some((5.0, 14.0)));
    }

    #[test]
    fn five_values_use_the_central_three() {
        let v = [5.0, 1.0, 4.0, 2.0, 3.0];
        assert_eq!(median(&v), Some(3.0));
        assert_eq!(central_range(&v), Some((2.0, 4.0)));
    }

    #[test]
    fn single_value_is_degenerate() {
        assert_eq!(median(&[0.7]), Some(0.7));
        assert_eq!(central_range(&[0.7]), Some((0.7, 0.7)));
        assert_eq!(median(&[]), None);
    }
}
