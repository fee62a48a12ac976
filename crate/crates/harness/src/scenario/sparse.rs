use nlse_recovery::metrics::mse;
use nlse_recovery::rng::derive_seed;
use nlse_recovery::unfolding::draw_instance;
use nlse_recovery::{pa_ista, NoiseModel};
use rayon::prelude::*;

use super::{obtain_params, Scenario, TRIAL_STREAM};
use crate::config::{ExperimentConfig, ScenarioKind};
use crate::error::{HarnessError, Result};
use crate::params_file::TrainedParams;
use crate::result::{
    Aggregates, ExperimentResult, ParamsUsed, SparseAggregates, SparseTrial, TrialRecord,
};

/// Mean-MSE curves for trained and initial parameters against the DBP level.
pub struct SparseScenario;

impl Scenario for SparseScenario {
    fn kind(&self) -> ScenarioKind {
        ScenarioKind::Sparse
    }

    fn run(
        &self,
        cfg: &ExperimentConfig,
        params: Option<&TrainedParams>,
    ) -> Result<ExperimentResult> {
        cfg.validate()?;
        let model = cfg.model()?;
        let noise = NoiseModel::new(cfg.noise.snr_db)?;
        let prior = cfg.prior();
        let (trained, used) = obtain_params(cfg, &model, params, cfg.noise.snr_db, 0)?;
        let rc_trained = cfg.recovery_config(trained)?;
        let rc_init = cfg.recovery_config(cfg.initial_params())?;

        let outcomes: Vec<Result<SparseTrial>> = (0..cfg.trials)
            .into_par_iter()
            .map(|index| {
                let seed = derive_seed(cfg.seed, TRIAL_STREAM, index as u64);
                let inst = draw_instance(&model, &prior, &noise, seed)?;
                let t = pa_ista(&model, &inst.measurement, &rc_trained, Some(&inst.truth))?;
                let i = pa_ista(&model, &inst.measurement, &rc_init, Some(&inst.truth))?;
                Ok(SparseTrial {
                    index,
                    seed,
                    mse_dbp: mse(&inst.truth, &t.initial)?,
                    estimate_dbp: t.initial,
                    estimate_trained: t.estimate,
                    estimate_init: i.estimate,
                    mse_trained: t.mse.expect("truth supplied"),
                    mse_init: i.mse.expect("truth supplied"),
                    objective_trained: t.objective,
                    truth: inst.truth,
                })
            })
            .collect();

        let mut trials = Vec::with_capacity(outcomes.len());
        let mut aborted = None;
        for o in outcomes {
            match o {
                Ok(t) => trials.push(t),
                Err(e @ HarnessError::Numerical(_)) => {
                    aborted = Some(e.to_string());
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let agg = aggregate_sparse(&trials, cfg.noise.snr_db, cfg.recovery.iterations, used);
        let mut result = ExperimentResult::new(
            cfg,
            trials.into_iter().map(TrialRecord::Sparse).collect(),
            Aggregates::Sparse(agg),
        );
        result.aborted = aborted;
        Ok(result)
    }
}

/// Per-iteration means over `trials`, reduced in trial-index order.
pub fn aggregate_sparse(
    trials: &[SparseTrial],
    snr_db: f64,
    iterations: usize,
    params: ParamsUsed,
) -> SparseAggregates {
    let mut order: Vec<&SparseTrial> = trials.iter().collect();
    order.sort_by_key(|t| t.index);
    let n = order.len();
    let mean_curve = |pick: fn(&SparseTrial) -> &Vec<f64>| -> Vec<f64> {
        if n == 0 {
            return Vec::new();
        }
        (0..=iterations)
            .map(|k| order.iter().map(|t| pick(t)[k]).sum::<f64>() / n as f64)
            .collect()
    };
    let mse_trained = mean_curve(|t| &t.mse_trained);
    let mse_init = mean_curve(|t| &t.mse_init);
    let mse_dbp = if n == 0 {
        0.0
    } else {
        order.iter().map(|t| t.mse_dbp).sum::<f64>() / n as f64
    };
    let trained_reaches_init_final_at = mse_init
        .last()
        .and_then(|&target| mse_trained.iter().position(|&m| m <= target));
    SparseAggregates {
        snr_db,
        trials: n,
        mse_trained,
        mse_init,
        mse_dbp,
        trained_reaches_init_final_at,
        params,
    }
}
