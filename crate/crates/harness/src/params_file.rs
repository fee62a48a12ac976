use std::path::Path;

use nlse_recovery::UnfoldedParams;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::result::write_file;

/// On-disk form of learned `(η, θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedParams {
    pub u: usize,
    pub eta: Vec<f64>,
    pub theta: Vec<f64>,
    pub seed: u64,
    pub config_hash: String,
}

impl TrainedParams {
    pub fn new(params: &UnfoldedParams, seed: u64, config_hash: String) -> Self {
        Self {
            u: params.len(),
            eta: params.eta.clone(),
            theta: params.theta.clone(),
            seed,
            config_hash,
        }
    }

    pub fn params(&self) -> Result<UnfoldedParams> {
        if self.eta.len() != self.u || self.theta.len() != self.u {
            return Err(HarnessError::Config(format!(
                "params file declares u = {} but holds {} eta and {} theta values",
                self.u,
                self.eta.len(),
                self.theta.len()
            )));
        }
        Ok(UnfoldedParams::new(self.eta.clone(), self.theta.clone())?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("params serialize");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_json().as_bytes())
    }
}
