//! JSON checkpoints `{spec, partition, data, seed, epoch}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::{Block, ParamVector};
use super::spec::NetworkSpec;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub spec: NetworkSpec,
    pub partition: Vec<Block>,
    #[serde(serialize_with = "crate::io::serialize_f17_slice")]
    pub data: Vec<f64>,
    pub seed: u64,
    pub epoch: usize,
}

impl Checkpoint {
    pub fn new(spec: &NetworkSpec, theta: &ParamVector, seed: u64, epoch: usize) -> Self {
        Self {
            spec: spec.clone(),
            partition: theta.partition.clone(),
            data: theta.data.clone(),
            seed,
            epoch,
        }
    }

    /// Validated parameter vector for the stored spec.
    pub fn theta(&self) -> Result<ParamVector> {
        let theta = ParamVector::from_data(&self.spec, self.data.clone())?;
        if theta.partition != self.partition {
            return Err(crate::Error::config(
                "partition",
                "does not match the layout of spec",
            ));
        }
        Ok(theta)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(s)?;
        c.spec.validate()?;
        c.theta()?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::spec::Activation;
    use rand::SeedableRng;

    #[test]
    fn round_trip_is_bit_exact() {
        let spec = NetworkSpec::mlp(1, vec![4, 3], Activation::Silu, vec![1]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let theta = ParamVector::init_uniform(&spec, &mut rng);
        let ck = Checkpoint::new(&spec, &theta, 3, 17);
        let text = ck.to_json().unwrap();
        let back = Checkpoint::from_json(&text).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_json().unwrap(), text);
    }
}
