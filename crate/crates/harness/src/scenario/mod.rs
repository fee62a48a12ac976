//! Experiment scenarios behind one trait, registered by name.

mod qpsk;
mod sparse;
mod validate;

pub use qpsk::QpskScenario;
pub use sparse::{aggregate_sparse, SparseScenario};
pub use validate::{
    check_convergence_order, check_dbp_round_trip, check_energy, check_gradient_fd,
    check_gradient_linear, check_nonlinear_phase, check_soliton, ValidationScenario,
};

use nlse_recovery::rng::derive_seed;
use nlse_recovery::unfolding::train;
use nlse_recovery::{ForwardModel, UnfoldedParams};

use crate::config::{ExperimentConfig, ScenarioKind};
use crate::error::{HarnessError, Result};
use crate::params_file::TrainedParams;
use crate::result::{ExperimentResult, ParamsUsed};

/// Seed stream for parameter training; shared by the `train` command and the scenarios.
pub const TRAINING_STREAM: u64 = 10;
pub(crate) const TRIAL_STREAM: u64 = 11;
pub(crate) const POINT_STREAM: u64 = 12;
pub(crate) const VALIDATION_STREAM: u64 = 13;

pub trait Scenario: Sync {
    fn kind(&self) -> ScenarioKind;

    fn name(&self) -> &'static str {
        self.kind().name()
    }

    /// Runs the experiment. A result with `aborted` set carries the trials that finished
    /// before a numerical failure.
    fn run(
        &self,
        cfg: &ExperimentConfig,
        params: Option<&TrainedParams>,
    ) -> Result<ExperimentResult>;
}

static REGISTRY: [&dyn Scenario; 3] = [&SparseScenario, &QpskScenario, &ValidationScenario];

pub fn names() -> Vec<&'static str> {
    REGISTRY.iter().map(|s| s.name()).collect()
}

pub fn lookup(name: &str) -> Result<&'static dyn Scenario> {
    REGISTRY
        .iter()
        .copied()
        .find(|s| s.name() == name)
        .ok_or_else(|| {
            HarnessError::Config(format!(
                "unknown scenario {name:?}; available: {}",
                names().join(", ")
            ))
        })
}

pub fn for_kind(kind: ScenarioKind) -> &'static dyn Scenario {
    lookup(kind.name()).expect("every kind is registered")
}

/// Learned parameters for one operating point: read from `file` when given, otherwise
/// trained now at `snr_db` with the training seed for `point`.
pub fn obtain_params(
    cfg: &ExperimentConfig,
    model: &ForwardModel,
    file: Option<&TrainedParams>,
    snr_db: f64,
    point: u64,
) -> Result<(UnfoldedParams, ParamsUsed)> {
    if let Some(f) = file {
        let p = f.params()?;
        if p.len() != cfg.recovery.iterations {
            return Err(HarnessError::Config(format!(
                "params file has u = {} but recovery.iterations = {}",
                p.len(),
                cfg.recovery.iterations
            )));
        }
        let used = ParamsUsed {
            source: "file".into(),
            eta: p.eta.clone(),
            theta: p.theta.clone(),
            training_log: None,
        };
        return Ok((p, used));
    }
    let tc = cfg.training_config(snr_db, derive_seed(cfg.seed, TRAINING_STREAM, point))?;
    let out = train(model, &tc)?;
    let used = ParamsUsed {
        source: "trained".into(),
        eta: out.params.eta.clone(),
        theta: out.params.theta.clone(),
        training_log: Some(out.log),
    };
    Ok((out.params, used))
}
