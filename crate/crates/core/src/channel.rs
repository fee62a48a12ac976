use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fiber parameters for `∂U/∂z = −(iβ₂/2) ∂²U/∂t² + iγ|U|²U` and the SSFM step `dz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberChannel {
    pub beta2: f64,
    pub gamma: f64,
    pub length: f64,
    pub dz: f64,
}

impl FiberChannel {
    pub fn new(beta2: f64, gamma: f64, length: f64, dz: f64) -> Result<Self> {
        let ch = Self {
            beta2,
            gamma,
            length,
            dz,
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta2.is_finite() && self.gamma.is_finite()) {
            return Err(Error::NonFinite("channel coefficients"));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::InvalidParameter {
                name: "length",
                reason: format!("{} must be positive", self.length),
            });
        }
        if !(self.dz.is_finite() && self.dz > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dz",
                reason: format!("{} must be positive", self.dz),
            });
        }
        if self.full_steps() == 0 {
            return Err(Error::InvalidParameter {
                name: "dz",
                reason: format!("step {} exceeds fiber length {}", self.dz, self.length),
            });
        }
        Ok(())
    }

    /// `floor(L/dz)`, tolerant of round-off in the ratio.
    pub fn full_steps(&self) -> usize {
        (self.length / self.dz + 1e-9).floor() as usize
    }

    /// Step sizes actually taken: `floor(L/dz)` steps of `dz`, plus one shorter
    /// step for any remainder so the total distance is exactly `L`.
    pub fn step_schedule(&self) -> Vec<f64> {
        let n = self.full_steps();
        let mut steps = vec![self.dz; n];
        let rem = self.length - n as f64 * self.dz;
        if rem > 1e-9 * self.dz {
            steps.push(rem);
        }
        steps
    }

    /// Same fiber with both coefficients negated: the back-propagation channel.
    pub fn reversed(&self) -> Self {
        Self {
            beta2: -self.beta2,
            gamma: -self.gamma,
            ..*self
        }
    }

    /// `L_D = t0²/|β₂|`, when `β₂ ≠ 0`.
    pub fn dispersion_length(&self, t0: f64) -> Option<f64> {
        (self.beta2 != 0.0).then(|| t0 * t0 / self.beta2.abs())
    }

    /// `L_NL = 1/γ`, when `γ > 0`.
    pub fn nonlinear_length(&self) -> Option<f64> {
        (self.gamma > 0.0).then(|| 1.0 / self.gamma)
    }
}
