//! PA-ISTA: gradient steps through the physical forward model followed by shrinkage.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error as ThisError;

use crate::error::{Error, Result};
use crate::gradient::{fidelity, fidelity_and_gradient};
use crate::init::{dbp_initialize, ReadoutKind};
use crate::metrics::mse;
use crate::model::ForwardModel;
use crate::params::UnfoldedParams;
use crate::shrinkage::{Shrinkage, ShrinkageKind};
use crate::signal::MeasurementVector;

pub const DEFAULT_ITERATIONS: usize = 30;

/// Sufficient-decrease safeguard: shrink the step by `tau` until
/// `F(x⁺) ≤ F(x) − σ/(2η)·‖x⁺ − x‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Backtracking {
    pub tau: f64,
    pub sigma: f64,
    pub max_halvings: usize,
    /// ℓ1 weight of the objective; defaults to `θ^(0)/|η^(0)|`.
    #[serde(default)]
    pub lambda: Option<f64>,
}

impl Default for Backtracking {
    fn default() -> Self {
        Self {
            tau: 0.5,
            sigma: 0.1,
            max_halvings: 20,
            lambda: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    pub params: UnfoldedParams,
    pub shrinkage: ShrinkageKind,
    #[serde(default)]
    pub backtracking: Option<Backtracking>,
    #[serde(default)]
    pub readout: ReadoutKind,
}

impl RecoveryConfig {
    pub fn new(params: UnfoldedParams, shrinkage: ShrinkageKind) -> Self {
        Self {
            params,
            shrinkage,
            backtracking: None,
            readout: ReadoutKind::default(),
        }
    }

    pub fn with_backtracking(mut self, bt: Backtracking) -> Self {
        self.backtracking = Some(bt);
        self
    }

    pub fn iterations(&self) -> usize {
        self.params.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let shrink = self.shrinkage.strategy();
        if shrink.requires_nonnegative_param() && self.params.theta.iter().any(|&t| t < 0.0) {
            return Err(Error::InvalidParameter {
                name: "theta",
                reason: format!("{} thresholds must be nonnegative", shrink.name()),
            });
        }
        if let Some(bt) = &self.backtracking {
            if !shrink.is_l1_prox() {
                return Err(Error::Unsupported(format!(
                    "backtracking needs an l1 proximal shrinkage, not {}",
                    shrink.name()
                )));
            }
            if !(bt.tau > 0.0 && bt.tau < 1.0 && bt.sigma > 0.0 && bt.sigma < 1.0) {
                return Err(Error::InvalidParameter {
                    name: "backtracking",
                    reason: "tau and sigma must lie in (0, 1)".into(),
                });
            }
            if bt.lambda.is_some_and(|l| !(l >= 0.0 && l.is_finite())) {
                return Err(Error::InvalidParameter {
                    name: "lambda",
                    reason: "must be nonnegative".into(),
                });
            }
        }
        Ok(())
    }

    /// ℓ1 weight used in the reported objective.
    pub fn objective_lambda(&self) -> f64 {
        if !self.shrinkage.strategy().is_l1_prox() {
            return 0.0;
        }
        if let Some(l) = self.backtracking.and_then(|b| b.lambda) {
            return l;
        }
        match (self.params.eta.first(), self.params.theta.first()) {
            (Some(&eta), Some(&theta)) if eta != 0.0 => theta / eta.abs(),
            _ => 0.0,
        }
    }
}

/// Trajectory summary of one PA-ISTA run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub initial: Vec<Complex64>,
    pub estimate: Vec<Complex64>,
    /// `½‖y − f̂(x^(k))‖² + λ‖x^(k)‖₁` for `k = 0..=U`.
    pub objective: Vec<f64>,
    /// `‖y − f̂(x^(k))‖²` for `k = 0..=U`.
    pub fidelity: Vec<f64>,
    /// `‖x^(k) − s‖²` when the truth is known.
    pub mse: Option<Vec<f64>>,
    pub iterations: usize,
    /// Step halvings per iteration (zero without backtracking).
    pub halvings: Vec<usize>,
    /// Iterations where no step met the decrease condition and the iterate was kept.
    pub rejected_steps: usize,
}

#[derive(Debug, ThisError)]
pub enum RecoveryError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("iterate became non-finite at iteration {iteration}")]
    Diverged {
        iteration: usize,
        partial: Box<RecoveryReport>,
    },
}

/// `shrink(x − step·g, param)`, elementwise.
pub fn ista_step(
    x: &[Complex64],
    grad: &[Complex64],
    step: f64,
    param: f64,
    shrink: &dyn Shrinkage,
) -> Vec<Complex64> {
    x.iter()
        .zip(grad)
        .map(|(xi, gi)| shrink.apply(xi - gi * step, param))
        .collect()
}

fn l1(x: &[Complex64]) -> f64 {
    x.iter().map(|c| c.norm()).sum()
}

/// PA-ISTA from the DBP initialization.
pub fn pa_ista(
    model: &ForwardModel,
    y: &MeasurementVector,
    cfg: &RecoveryConfig,
    truth: Option<&[Complex64]>,
) -> Result<RecoveryReport, RecoveryError> {
    let x0 = dbp_initialize(model, y, cfg.readout.strategy())?;
    pa_ista_from(model, y, cfg, x0, truth)
}

/// PA-ISTA from an explicit starting point.
pub fn pa_ista_from(
    model: &ForwardModel,
    y: &MeasurementVector,
    cfg: &RecoveryConfig,
    x0: Vec<Complex64>,
    truth: Option<&[Complex64]>,
) -> Result<RecoveryReport, RecoveryError> {
    cfg.validate()?;
    crate::error::ensure_len("initial estimate", model.num_coeffs(), x0.len())?;
    if let Some(t) = truth {
        crate::error::ensure_len("truth", model.num_coeffs(), t.len())?;
    }
    let shrink = cfg.shrinkage.strategy();
    let lambda = cfg.objective_lambda();
    let u = cfg.iterations();

    let mut report = RecoveryReport {
        initial: x0.clone(),
        estimate: x0,
        objective: Vec::with_capacity(u + 1),
        fidelity: Vec::with_capacity(u + 1),
        mse: truth.map(|_| Vec::with_capacity(u + 1)),
        iterations: 0,
        halvings: Vec::with_capacity(u),
        rejected_steps: 0,
    };
    let record_mse = |report: &mut RecoveryReport| -> Result<()> {
        if let (Some(t), Some(m)) = (truth, report.mse.as_mut()) {
            m.push(mse(t, &report.estimate)?);
        }
        Ok(())
    };
    record_mse(&mut report)?;

    let (mut fid, mut grad) = fidelity_and_gradient(model, &report.estimate, y)?;
    report.fidelity.push(fid);
    report
        .objective
        .push(0.5 * fid + lambda * l1(&report.estimate));

    for k in 0..u {
        let x = &report.estimate;
        let step = cfg.params.step(k);
        let (next, halvings) = match &cfg.backtracking {
            None => (
                ista_step(x, grad.as_slice(), step, cfg.params.theta[k], shrink),
                0,
            ),
            Some(bt) => {
                let f_cur = *report.objective.last().expect("objective recorded");
                let mut eta = step;
                let mut accepted = None;
                for h in 0..=bt.max_halvings {
                    let cand = ista_step(x, grad.as_slice(), eta, eta * lambda, shrink);
                    if cand.iter().all(|c| c.is_finite()) {
                        let f_new = 0.5 * fidelity(model, &cand, y)? + lambda * l1(&cand);
                        let moved: f64 = cand.iter().zip(x).map(|(a, b)| (a - b).norm_sqr()).sum();
                        if eta > 0.0 && f_new <= f_cur - bt.sigma / (2.0 * eta) * moved {
                            accepted = Some((cand, h));
                            break;
                        }
                    }
                    eta *= bt.tau;
                }
                match accepted {
                    Some(a) => a,
                    None => {
                        report.rejected_steps += 1;
                        (x.clone(), bt.max_halvings)
                    }
                }
            }
        };
        if next.iter().any(|c| !c.is_finite()) {
            return Err(RecoveryError::Diverged {
                iteration: k,
                partial: Box::new(report),
            });
        }
        report.estimate = next;
        report.halvings.push(halvings);
        report.iterations = k + 1;
        record_mse(&mut report)?;
        (fid, grad) = fidelity_and_gradient(model, &report.estimate, y)?;
        report.fidelity.push(fid);
        report
            .objective
            .push(0.5 * fid + lambda * l1(&report.estimate));
    }
    Ok(report)
}
