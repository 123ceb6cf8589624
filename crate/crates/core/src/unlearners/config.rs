use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::models::OptimizerKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "minnorm-og")]
    MinNormOg,
    #[serde(rename = "gd")]
    Gd,
    #[serde(rename = "ga")]
    Ga,
    #[serde(rename = "ngd")]
    Ngd,
    #[serde(rename = "ngp")]
    Ngp,
    #[serde(rename = "npo")]
    Npo,
    #[serde(rename = "scrub")]
    Scrub,
    #[serde(rename = "ridge")]
    Ridge,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::MinNormOg,
        Method::Gd,
        Method::Ga,
        Method::Ngd,
        Method::Ngp,
        Method::Npo,
        Method::Scrub,
        Method::Ridge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::MinNormOg => "minnorm-og",
            Method::Gd => "gd",
            Method::Ga => "ga",
            Method::Ngd => "ngd",
            Method::Ngp => "ngp",
            Method::Npo => "npo",
            Method::Scrub => "scrub",
            Method::Ridge => "ridge",
        }
    }

    /// Methods whose loss is defined through class probabilities.
    pub fn needs_classifier(self) -> bool {
        matches!(self, Method::Npo | Method::Scrub)
    }

    pub fn uses_retain(self) -> bool {
        !matches!(self, Method::Ga | Method::Npo)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        let key = if key == "minnormog" {
            "minnorm-og".to_string()
        } else {
            key
        };
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::config("method", format!("unknown method `{s}`")))
    }
}

/// Hyperparameters of one unlearning run. Method-specific fields are optional
/// and only checked for the methods that read them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnlearnConfig {
    pub method: Method,
    pub epochs: usize,
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_ga: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_reg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_gd: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_reg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_proj: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_pert: Option<usize>,
    pub batch_size: usize,
    #[serde(default = "default_p_retain")]
    pub p_retain: f64,
    pub seed: u64,
    #[serde(default)]
    pub optimizer: OptimizerKind,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
}

fn default_p_retain() -> f64 {
    1.0
}

fn default_weight_decay() -> f64 {
    0.01
}

fn need<T: Copy>(v: Option<T>, field: &str, method: Method) -> Result<T> {
    v.ok_or_else(|| Error::config(field, format!("required by {method}")))
}

impl UnlearnConfig {
    /// Config with only the shared fields set.
    pub fn new(method: Method, epochs: usize, eta: f64, batch_size: usize, seed: u64) -> Self {
        Self {
            method,
            epochs,
            eta,
            lambda_ga: None,
            lambda_reg: None,
            sigma: None,
            t_gd: None,
            gamma_reg: None,
            t_proj: None,
            n_pert: None,
            batch_size,
            p_retain: 1.0,
            seed,
            optimizer: OptimizerKind::Adamw,
            weight_decay: default_weight_decay(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.method;
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be at least 1"));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::config("eta", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.p_retain) {
            return Err(Error::config("p_retain", "must lie in [0, 1]"));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::config("weight_decay", "must be non-negative"));
        }
        let unit = |v: f64, field: &str| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::config(field, "must lie in (0, 1]"))
            }
        };
        let nonneg = |v: f64, field: &str| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::config(field, "must be finite and non-negative"))
            }
        };
        match m {
            Method::MinNormOg => {
                unit(need(self.lambda_reg, "lambda_reg", m)?, "lambda_reg")?;
                unit(need(self.gamma_reg, "gamma_reg", m)?, "gamma_reg")?;
                if need(self.t_proj, "t_proj", m)? == 0 {
                    return Err(Error::config("t_proj", "must be at least 1"));
                }
                if need(self.n_pert, "n_pert", m)? == 0 {
                    return Err(Error::config("n_pert", "must be at least 1"));
                }
                need(self.t_gd, "t_gd", m)?;
            }
            Method::Ngd => nonneg(need(self.sigma, "sigma", m)?, "sigma")?,
            Method::Ngp => nonneg(need(self.lambda_ga, "lambda_ga", m)?, "lambda_ga")?,
            Method::Npo => {
                let l = need(self.lambda_ga, "lambda_ga", m)?;
                if !(l.is_finite() && l > 0.0) {
                    return Err(Error::config("lambda_ga", "must be positive"));
                }
            }
            Method::Scrub => {
                nonneg(need(self.lambda_reg, "lambda_reg", m)?, "lambda_reg")?;
                nonneg(need(self.lambda_ga, "lambda_ga", m)?, "lambda_ga")?;
                need(self.t_gd, "t_gd", m)?;
            }
            Method::Ridge => {
                nonneg(need(self.lambda_reg, "lambda_reg", m)?, "lambda_reg")?;
                unit(need(self.gamma_reg, "gamma_reg", m)?, "gamma_reg")?;
            }
            Method::Gd | Method::Ga => {}
        }
        Ok(())
    }

    /// Number of retain samples visible during unlearning: `⌈p_retain·n_r⌉`.
    pub fn accessible_retain(&self, n_retain: usize) -> usize {
        let raw = self.p_retain * n_retain as f64;
        // Guard against products such as 0.1·50 landing a hair above an integer.
        let k = (raw - 1e-9).ceil().max(0.0) as usize;
        k.min(n_retain)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let f = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::config(key, format!("expected a number, got `{v}`")))
        };
        let u = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| Error::config(key, format!("expected a count, got `{v}`")))
        };
        match key {
            "method" => self.method = value.parse()?,
            "epochs" => self.epochs = u(value)?,
            "eta" => self.eta = f(value)?,
            "lambda_ga" => self.lambda_ga = Some(f(value)?),
            "lambda_reg" => self.lambda_reg = Some(f(value)?),
            "sigma" => self.sigma = Some(f(value)?),
            "t_gd" => self.t_gd = Some(u(value)?),
            "gamma_reg" => self.gamma_reg = Some(f(value)?),
            "t_proj" => self.t_proj = Some(u(value)?),
            "n_pert" => self.n_pert = Some(u(value)?),
            "batch_size" => self.batch_size = u(value)?,
            "p_retain" => self.p_retain = f(value)?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::config(key, format!("expected a seed, got `{value}`")))?
            }
            "weight_decay" => self.weight_decay = f(value)?,
            "optimizer" => {
                self.optimizer = serde_json::from_value(serde_json::Value::String(value.into()))
                    .map_err(|_| Error::config(key, format!("unknown optimizer `{value}`")))?
            }
            _ => return Err(Error::config(key, "unknown hyperparameter")),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
        assert_eq!("MinNorm_OG".parse::<Method>().unwrap(), Method::MinNormOg);
        assert!("sgd".parse::<Method>().is_err());
    }

    #[test]
    fn missing_method_field_is_named() {
        let cfg = UnlearnConfig::new(Method::Ngd, 10, 1e-2, 8, 0);
        match cfg.validate() {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "sigma"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn accessible_count_is_ceiling() {
        let mut cfg = UnlearnConfig::new(Method::Gd, 1, 1e-2, 8, 0);
        cfg.p_retain = 0.01;
        assert_eq!(cfg.accessible_retain(50), 1);
        cfg.p_retain = 0.1;
        assert_eq!(cfg.accessible_retain(50), 5);
        cfg.p_retain = 0.0;
        assert_eq!(cfg.accessible_retain(50), 0);
    }

    #[test]
    fn overrides_and_hash() {
        let mut cfg = UnlearnConfig::new(Method::Gd, 1, 1e-2, 8, 0);
        let h = cfg.hash();
        cfg.set("sigma", "0.5").unwrap();
        assert_eq!(cfg.sigma, Some(0.5));
        assert_ne!(cfg.hash(), h);
        assert!(cfg.set("bogus", "1").is_err());
        assert!(cfg.set("eta", "fast").is_err());
    }
}
