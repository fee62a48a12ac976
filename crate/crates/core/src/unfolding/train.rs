use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error as ThisError;

use super::adam::{AdamConfig, AdamState};
use super::store_replay::{replay_phase, store_phase};
use crate::error::{Error, Result};
use crate::init::{dbp_initialize, ReadoutKind};
use crate::model::ForwardModel;
use crate::noise::NoiseModel;
use crate::params::UnfoldedParams;
use crate::recovery::{pa_ista, RecoveryConfig};
use crate::rng::{derive_seed, seeded_rng};
use crate::shrinkage::ShrinkageKind;
use crate::signal::{MeasurementVector, SignalPrior};

const TRAIN_STREAM: u64 = 1;
const HOLDOUT_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainingSchedule {
    /// All layers trained together on the full-depth loss.
    #[default]
    Joint,
    /// Depth grows linearly from one layer to `U` over the run; the loss is taken
    /// after the deepest active layer.
    Incremental,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    /// Training iterations `T`.
    pub iterations: usize,
    /// Unfolded layers `U`.
    pub layers: usize,
    pub init_eta: f64,
    pub init_theta: f64,
    pub adam: AdamConfig,
    pub seed: u64,
    pub prior: SignalPrior,
    pub noise: NoiseModel,
    pub shrinkage: ShrinkageKind,
    #[serde(default)]
    pub readout: ReadoutKind,
    #[serde(default)]
    pub schedule: TrainingSchedule,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_validation_every")]
    pub validation_every: usize,
    #[serde(default = "default_validation_size")]
    pub validation_size: usize,
}

fn default_batch() -> usize {
    1
}
fn default_validation_every() -> usize {
    10
}
fn default_validation_size() -> usize {
    20
}

impl TrainingConfig {
    /// Sparse-recovery training setup: `T = 100`, `U = 30`, `η = 0.01`, `θ = 0.001`,
    /// Adam at `10⁻⁴`, 15 dB, `k = 3`.
    pub fn sparse_default(seed: u64) -> Self {
        Self {
            iterations: 100,
            layers: 30,
            init_eta: 0.01,
            init_theta: 0.001,
            adam: AdamConfig::default(),
            seed,
            prior: SignalPrior::Sparse { k: 3 },
            noise: NoiseModel { snr_db: 15.0 },
            shrinkage: ShrinkageKind::ComplexSoftThreshold,
            readout: ReadoutKind::Peak,
            schedule: TrainingSchedule::Joint,
            batch_size: 1,
            validation_every: 10,
            validation_size: 20,
        }
    }

    pub fn initial_params(&self) -> UnfoldedParams {
        UnfoldedParams::constant(self.layers, self.init_eta, self.init_theta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParameter {
                name: "iterations",
                reason: "at least one training iteration is required".into(),
            });
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter {
                name: "batch_size",
                reason: "must be positive".into(),
            });
        }
        if !(self.adam.lr >= 0.0 && self.adam.lr.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lr",
                reason: format!("{} must be nonnegative", self.adam.lr),
            });
        }
        RecoveryConfig::new(self.initial_params(), self.shrinkage).validate()
    }

    fn active_layers(&self, t: usize) -> usize {
        match self.schedule {
            TrainingSchedule::Joint => self.layers,
            TrainingSchedule::Incremental => ((t + 1) * self.layers)
                .div_ceil(self.iterations)
                .clamp(1.min(self.layers), self.layers),
        }
    }
}

/// A source vector and its noisy measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub truth: Vec<Complex64>,
    pub measurement: MeasurementVector,
}

/// Deterministic instance for a given seed.
pub fn draw_instance(
    model: &ForwardModel,
    prior: &SignalPrior,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Instance> {
    let mut rng = seeded_rng(seed);
    let truth = prior.draw(model.num_coeffs(), &mut rng)?;
    let measurement = model.measure(&truth, noise, &mut rng)?;
    Ok(Instance { truth, measurement })
}

/// Mean final `‖x^(U) − s‖²` over the given instances, evaluated in parallel and
/// reduced in order.
pub fn evaluate_mse(
    model: &ForwardModel,
    cfg: &RecoveryConfig,
    instances: &[Instance],
) -> Result<f64> {
    let per: Vec<f64> = instances
        .par_iter()
        .map(|inst| {
            let rep =
                pa_ista(model, &inst.measurement, cfg, Some(&inst.truth)).map_err(|e| match e {
                    crate::recovery::RecoveryError::Core(e) => e,
                    crate::recovery::RecoveryError::Diverged { .. } => {
                        Error::NonFinite("held-out iterate")
                    }
                })?;
            Ok(*rep.mse.expect("truth supplied").last().expect("nonempty"))
        })
        .collect::<Result<_>>()?;
    Ok(per.iter().sum::<f64>() / per.len().max(1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationPoint {
    /// Number of parameter updates applied before this evaluation.
    pub iteration: usize,
    pub mean_mse: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub loss: Vec<f64>,
    pub validation: Vec<ValidationPoint>,
    pub schedule: TrainingSchedule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutcome {
    pub params: UnfoldedParams,
    pub log: TrainingLog,
}

#[derive(Debug, ThisError)]
pub enum TrainingError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("training loss became non-finite at iteration {iteration}")]
    Diverged { iteration: usize, log: TrainingLog },
}

/// Store-and-replay training with a fresh instance per sample and one Adam update
/// per iteration.
pub fn train(model: &ForwardModel, cfg: &TrainingConfig) -> Result<TrainingOutcome, TrainingError> {
    cfg.validate()?;
    let shrink = cfg.shrinkage.strategy();
    let readout = cfg.readout.strategy();
    let u = cfg.layers;
    let mut params = cfg.initial_params();
    let mut adam = AdamState::new(cfg.adam, 2 * u);
    let mut log = TrainingLog {
        schedule: cfg.schedule,
        ..Default::default()
    };

    let holdout: Vec<Instance> = (0..cfg.validation_size as u64)
        .map(|i| {
            draw_instance(
                model,
                &cfg.prior,
                &cfg.noise,
                derive_seed(cfg.seed, HOLDOUT_STREAM, i),
            )
        })
        .collect::<Result<_>>()?;
    let validate =
        |params: &UnfoldedParams, iteration: usize, log: &mut TrainingLog| -> Result<()> {
            if holdout.is_empty() || cfg.validation_every == 0 {
                return Ok(());
            }
            let rc = RecoveryConfig {
                params: params.clone(),
                shrinkage: cfg.shrinkage,
                backtracking: None,
                readout: cfg.readout,
            };
            let mean_mse = evaluate_mse(model, &rc, &holdout)?;
            log.validation.push(ValidationPoint {
                iteration,
                mean_mse,
            });
            Ok(())
        };
    validate(&params, 0, &mut log)?;

    for t in 0..cfg.iterations {
        let layers = cfg.active_layers(t);
        let active = UnfoldedParams {
            eta: params.eta[..layers].to_vec(),
            theta: params.theta[..layers].to_vec(),
        };
        let mut grad = vec![0.0; 2 * u];
        let mut loss = 0.0;
        for b in 0..cfg.batch_size {
            let idx = (t * cfg.batch_size + b) as u64;
            let inst = draw_instance(
                model,
                &cfg.prior,
                &cfg.noise,
                derive_seed(cfg.seed, TRAIN_STREAM, idx),
            )?;
            let x0 = dbp_initialize(model, &inst.measurement, readout)?;
            let (store, _) = store_phase(model, &inst.measurement, x0, &active, shrink)?;
            let out = replay_phase(&store, &inst.truth, &active, shrink, layers)?;
            loss += out.loss;
            for k in 0..layers {
                grad[k] += out.grad_eta[k];
                grad[u + k] += out.grad_theta[k];
            }
        }
        let scale = 1.0 / cfg.batch_size as f64;
        loss *= scale;
        grad.iter_mut().for_each(|g| *g *= scale);
        log.loss.push(loss);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(TrainingError::Diverged { iteration: t, log });
        }

        let mut flat: Vec<f64> = params.eta.iter().chain(&params.theta).copied().collect();
        adam.step(&mut flat, &grad)?;
        params.eta.copy_from_slice(&flat[..u]);
        params.theta.copy_from_slice(&flat[u..]);
        if shrink.requires_nonnegative_param() {
            params.theta.iter_mut().for_each(|th| *th = th.max(0.0));
        }

        let done = t + 1;
        if cfg.validation_every > 0 && (done % cfg.validation_every == 0 || done == cfg.iterations)
        {
            validate(&params, done, &mut log)?;
        }
    }
    Ok(TrainingOutcome { params, log })
}
