use nlse_recovery::metrics::symbol_errors;
use nlse_recovery::rng::derive_seed;
use nlse_recovery::unfolding::draw_instance;
use nlse_recovery::{pa_ista, NoiseModel, QpskSignal};
use rayon::prelude::*;

use super::{obtain_params, Scenario, POINT_STREAM, TRIAL_STREAM};
use crate::config::{ExperimentConfig, ScenarioKind};
use crate::error::{HarnessError, Result};
use crate::params_file::TrainedParams;
use crate::result::{Aggregates, ExperimentResult, QpskTrial, SerPoint, TrialRecord};

/// Symbol error rate of PA-ISTA and of DBP followed by projection over an SNR sweep.
pub struct QpskScenario;

impl Scenario for QpskScenario {
    fn kind(&self) -> ScenarioKind {
        ScenarioKind::Qpsk
    }

    fn run(
        &self,
        cfg: &ExperimentConfig,
        params: Option<&TrainedParams>,
    ) -> Result<ExperimentResult> {
        cfg.validate()?;
        let model = cfg.model()?;
        let prior = cfg.prior();
        let n = model.num_coeffs();
        let mut records = Vec::new();
        let mut points = Vec::new();
        let mut aborted = None;

        'sweep: for (p, &snr_db) in cfg.noise.snr_sweep_db.iter().enumerate() {
            let noise = NoiseModel::new(snr_db)?;
            let (learned, used) = match obtain_params(cfg, &model, params, snr_db, p as u64) {
                Err(e @ HarnessError::Numerical(_)) => {
                    aborted = Some(e.to_string());
                    break;
                }
                other => other?,
            };
            let rc = cfg.recovery_config(learned)?;
            let point_seed = derive_seed(cfg.seed, POINT_STREAM, p as u64);
            let outcomes: Vec<Result<QpskTrial>> = (0..cfg.trials)
                .into_par_iter()
                .map(|index| {
                    let seed = derive_seed(point_seed, TRIAL_STREAM, index as u64);
                    let inst = draw_instance(&model, &prior, &noise, seed)?;
                    let truth = QpskSignal::project(&inst.truth);
                    let rep = pa_ista(&model, &inst.measurement, &rc, None)?;
                    let paista = QpskSignal::project(&rep.estimate);
                    let dbp = QpskSignal::project(&rep.initial);
                    Ok(QpskTrial {
                        point: p,
                        index,
                        seed,
                        errors_paista: symbol_errors(&truth, &paista),
                        errors_dbp: symbol_errors(&truth, &dbp),
                        truth: truth.symbols().to_vec(),
                        detected_paista: paista.symbols().to_vec(),
                        detected_dbp: dbp.symbols().to_vec(),
                    })
                })
                .collect();
            let mut done = Vec::with_capacity(cfg.trials);
            for o in outcomes {
                match o {
                    Ok(t) => done.push(t),
                    Err(e @ HarnessError::Numerical(_)) => {
                        aborted = Some(e.to_string());
                        records.extend(done.into_iter().map(TrialRecord::Qpsk));
                        break 'sweep;
                    }
                    Err(e) => return Err(e),
                }
            }
            let symbols = done.len() * n;
            let errors_paista: usize = done.iter().map(|t| t.errors_paista).sum();
            let errors_dbp: usize = done.iter().map(|t| t.errors_dbp).sum();
            points.push(SerPoint {
                snr_db,
                symbols,
                errors_paista,
                errors_dbp,
                ser_paista: errors_paista as f64 / symbols as f64,
                ser_dbp: errors_dbp as f64 / symbols as f64,
                params: used,
            });
            records.extend(done.into_iter().map(TrialRecord::Qpsk));
        }

        let mut result = ExperimentResult::new(cfg, records, Aggregates::Qpsk { points });
        result.aborted = aborted;
        Ok(result)
    }
}
