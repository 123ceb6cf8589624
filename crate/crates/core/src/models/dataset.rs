use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numkit::Matrix;

/// Ordered samples with a retain/forget split. `retain_mask[i]` marks `D_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub retain_mask: Vec<bool>,
}

/// Gathered inputs and targets for one optimization step.
#[derive(Debug, Clone)]
pub struct Batch {
    pub x: Matrix,
    pub y: Matrix,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    /// First `k` rows (or all of them).
    pub fn head(&self, k: usize) -> Batch {
        let k = k.min(self.len());
        let xd = self.x.data()[..k * self.x.cols()].to_vec();
        let yd = self.y.data()[..k * self.y.cols()].to_vec();
        Batch {
            x: Matrix::new(k, self.x.cols(), xd).unwrap(),
            y: Matrix::new(k, self.y.cols(), yd).unwrap(),
        }
    }
}

impl LabeledDataset {
    pub fn new(
        inputs: Vec<Vec<f64>>,
        targets: Vec<Vec<f64>>,
        retain_mask: Vec<bool>,
    ) -> Result<Self> {
        check_dim(inputs.len(), targets.len())?;
        check_dim(inputs.len(), retain_mask.len())?;
        if let Some(first) = inputs.first() {
            for x in &inputs {
                check_dim(first.len(), x.len())?;
            }
        }
        if let Some(first) = targets.first() {
            for y in &targets {
                check_dim(first.len(), y.len())?;
            }
        }
        Ok(Self {
            inputs,
            targets,
            retain_mask,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn target_dim(&self) -> usize {
        self.targets.first().map_or(0, Vec::len)
    }

    pub fn retain_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.retain_mask[i]).collect()
    }

    pub fn forget_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.retain_mask[i]).collect()
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            inputs: indices.iter().map(|&i| self.inputs[i].clone()).collect(),
            targets: indices.iter().map(|&i| self.targets[i].clone()).collect(),
            retain_mask: indices.iter().map(|&i| self.retain_mask[i]).collect(),
        }
    }

    /// `D_r` on its own (every sample marked retained).
    pub fn retain_only(&self) -> LabeledDataset {
        self.subset(&self.retain_indices())
    }

    pub fn batch(&self, indices: &[usize]) -> Batch {
        let (m, l) = (self.input_dim(), self.target_dim());
        let mut xd = Vec::with_capacity(indices.len() * m);
        let mut yd = Vec::with_capacity(indices.len() * l);
        for &i in indices {
            xd.extend_from_slice(&self.inputs[i]);
            yd.extend_from_slice(&self.targets[i]);
        }
        Batch {
            x: Matrix::new(indices.len(), m, xd).expect("dataset values are finite"),
            y: Matrix::new(indices.len(), l, yd).expect("dataset values are finite"),
        }
    }

    pub fn full_batch(&self) -> Batch {
        self.batch(&self.all_indices())
    }

    /// CSV with header `x0..,y0..,retain`; one row per sample, floats at 17
    /// significant digits.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (0..self.input_dim()).map(|i| format!("x{i}")).collect();
        header.extend((0..self.target_dim()).map(|i| format!("y{i}")));
        header.push("retain".into());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.inputs[i].iter().map(|v| crate::io::f17(*v)).collect();
            rec.extend(self.targets[i].iter().map(|v| crate::io::f17(*v)));
            rec.push(if self.retain_mask[i] { "1" } else { "0" }.into());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        let nx = header.iter().filter(|h| h.starts_with('x')).count();
        let ny = header.iter().filter(|h| h.starts_with('y')).count();
        let (mut inputs, mut targets, mut mask) = (Vec::new(), Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .take(nx + ny)
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidArgument(format!("bad float in dataset CSV: {e}")))?;
            inputs.push(vals[..nx].to_vec());
            targets.push(vals[nx..].to_vec());
            mask.push(rec.get(nx + ny) == Some("1"));
        }
        Self::new(inputs, targets, mask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_partitions_the_data() {
        let d = LabeledDataset::new(
            vec![vec![1.0], vec![2.0], vec![3.0]],
            vec![vec![0.0]; 3],
            vec![true, false, true],
        )
        .unwrap();
        assert_eq!(d.retain_indices(), vec![0, 2]);
        assert_eq!(d.forget_indices(), vec![1]);
        assert_eq!(d.retain_only().len(), 2);
        assert!(LabeledDataset::new(vec![vec![1.0]], vec![], vec![true]).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let d = LabeledDataset::new(
            vec![vec![0.1, -1.0 / 3.0], vec![1e-300, 2.5]],
            vec![vec![std::f64::consts::PI], vec![-0.0]],
            vec![true, false],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        d.write_csv(&p).unwrap();
        let back = LabeledDataset::read_csv(&p).unwrap();
        assert_eq!(back, d);
    }
}
