use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-iteration step sizes `η^(k)` and shrinkage parameters `θ^(k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfoldedParams {
    pub eta: Vec<f64>,
    pub theta: Vec<f64>,
}

impl UnfoldedParams {
    pub fn new(eta: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        let p = Self { eta, theta };
        p.validate()?;
        Ok(p)
    }

    /// Same `(η, θ)` for each of `u` layers.
    pub fn constant(u: usize, eta: f64, theta: f64) -> Self {
        Self {
            eta: vec![eta; u],
            theta: vec![theta; u],
        }
    }

    pub fn validate(&self) -> Result<()> {
        crate::error::ensure_len("theta schedule", self.eta.len(), self.theta.len())?;
        if self.eta.iter().chain(&self.theta).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("unfolded parameters"));
        }
        Ok(())
    }

    /// Number of unfolded iterations `U`.
    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    /// Effective (nonnegative) step of layer `k`.
    pub fn step(&self, k: usize) -> f64 {
        self.eta[k].abs()
    }
}
