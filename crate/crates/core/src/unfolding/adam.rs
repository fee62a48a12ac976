use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }
}

/// Bias-corrected Adam over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, len: usize) -> Self {
        Self {
            config,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        ensure_len("adam parameters", self.m.len(), params.len())?;
        ensure_len("adam gradients", self.m.len(), grads.len())?;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        self.t += 1;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        // m̂ = g and v̂ = g² on the first step, so the update is lr·g/(|g| + ε)
        let mut adam = AdamState::new(AdamConfig::default(), 2);
        let mut p = vec![1.0, -1.0];
        adam.step(&mut p, &[0.5, -2.0]).unwrap();
        assert!((p[0] - (1.0 - 1e-4 * 0.5 / (0.5 + 1e-8))).abs() < 1e-15);
        assert!((p[1] - (-1.0 + 1e-4 * 2.0 / (2.0 + 1e-8))).abs() < 1e-15);
    }

    #[test]
    fn matches_reference_recursion() {
        let cfg = AdamConfig {
            lr: 0.01,
            ..Default::default()
        };
        let mut adam = AdamState::new(cfg, 1);
        let mut p = vec![0.3];
        let (mut m, mut v, mut q) = (0.0f64, 0.0f64, 0.3f64);
        for t in 1..=5 {
            let g = (t as f64).sin();
            adam.step(&mut p, &[g]).unwrap();
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let mh = m / (1.0 - 0.9f64.powi(t));
            let vh = v / (1.0 - 0.999f64.powi(t));
            q -= 0.01 * mh / (vh.sqrt() + 1e-8);
        }
        assert!((p[0] - q).abs() < 1e-15);
        assert_eq!(adam.steps(), 5);
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let mut adam = AdamState::new(
            AdamConfig {
                lr: 0.0,
                ..Default::default()
            },
            3,
        );
        let init = vec![0.01, -0.2, 3.0];
        let mut p = init.clone();
        for _ in 0..10 {
            adam.step(&mut p, &[1.0, -5.0, 0.3]).unwrap();
        }
        assert_eq!(p, init);
    }
}
