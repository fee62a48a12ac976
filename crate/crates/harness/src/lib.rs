//! Experiment harness: configuration, scenarios, and CSV/JSON output for the
//! `nlse-recovery` library.

pub mod config;
pub mod error;
pub mod params_file;
pub mod result;
pub mod scenario;

use std::path::PathBuf;

use nlse_recovery::rng::derive_seed;
use nlse_recovery::unfolding::{train, TrainingLog};

pub use config::{ExperimentConfig, OutputFormat, Overrides, ScenarioKind};
pub use error::{HarnessError, Result};
pub use params_file::TrainedParams;
pub use result::{emit, ExperimentResult};
pub use scenario::{Scenario, TRAINING_STREAM};

/// Runs the configured scenario and writes its output file.
///
/// Partial results from an aborted run are still written before the error is returned;
/// failed validation checks are written and then reported as [`HarnessError::Validation`].
pub fn run_experiment(
    cfg: &ExperimentConfig,
    params: Option<&TrainedParams>,
) -> Result<(ExperimentResult, PathBuf)> {
    let result = scenario::for_kind(cfg.scenario).run(cfg, params)?;
    let path = emit(&result, cfg.output.format, &cfg.output.dir)?;
    if let Some(msg) = &result.aborted {
        return Err(HarnessError::Numerical(format!(
            "{msg}; partial results in {}",
            path.display()
        )));
    }
    let failed = result.failed_checks();
    if !failed.is_empty() {
        return Err(HarnessError::Validation(failed));
    }
    Ok((result, path))
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub params: TrainedParams,
    pub log: TrainingLog,
    pub params_path: PathBuf,
    pub log_path: PathBuf,
}

/// Trains `(η, θ)` at `noise.snr_db` with the same seed a scenario would use for its
/// first operating point, then writes `params.json` and `training_log.csv`.
pub fn run_training(cfg: &ExperimentConfig) -> Result<TrainRun> {
    cfg.validate()?;
    let model = cfg.model()?;
    let tc = cfg.training_config(cfg.noise.snr_db, derive_seed(cfg.seed, TRAINING_STREAM, 0))?;
    let out = train(&model, &tc)?;
    let params = TrainedParams::new(&out.params, tc.seed, cfg.hash());
    let params_path = cfg.output.dir.join("params.json");
    params.write(&params_path)?;
    let log_path = cfg.output.dir.join("training_log.csv");
    result::write_file(&log_path, training_log_csv(&out.log).as_bytes())?;
    Ok(TrainRun {
        params,
        log: out.log,
        params_path,
        log_path,
    })
}

/// `iter,loss,heldout_mse`; a row per update count, blank cells where nothing was logged.
pub fn training_log_csv(log: &TrainingLog) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iter", "loss", "heldout_mse"])
        .expect("in-memory write");
    let rows = log.loss.len().max(
        log.validation
            .iter()
            .map(|v| v.iteration + 1)
            .max()
            .unwrap_or(0),
    );
    for it in 0..rows {
        let loss = log.loss.get(it).map(|l| l.to_string()).unwrap_or_default();
        let held = log
            .validation
            .iter()
            .find(|v| v.iteration == it)
            .map(|v| v.mean_mse.to_string())
            .unwrap_or_default();
        w.write_record([it.to_string(), loss, held])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}
