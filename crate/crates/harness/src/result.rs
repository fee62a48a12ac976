use std::io::Write;
use std::path::{Path, PathBuf};

use nlse_recovery::unfolding::TrainingLog;
use nlse_recovery::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, OutputFormat, ScenarioKind};
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub code_version: String,
}

impl Provenance {
    pub fn of(cfg: &ExperimentConfig) -> Self {
        Self {
            config_hash: cfg.hash(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseTrial {
    pub index: usize,
    pub seed: u64,
    pub truth: Vec<Complex64>,
    pub estimate_trained: Vec<Complex64>,
    pub estimate_init: Vec<Complex64>,
    pub estimate_dbp: Vec<Complex64>,
    /// `‖x^(k) − s‖²`, `k = 0..=U`.
    pub mse_trained: Vec<f64>,
    pub mse_init: Vec<f64>,
    pub mse_dbp: f64,
    pub objective_trained: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpskTrial {
    pub point: usize,
    pub index: usize,
    pub seed: u64,
    pub truth: Vec<Complex64>,
    pub detected_paista: Vec<Complex64>,
    pub detected_dbp: Vec<Complex64>,
    pub errors_paista: usize,
    pub errors_dbp: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TrialRecord {
    Sparse(SparseTrial),
    Qpsk(QpskTrial),
}

/// Where the unfolded parameters came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsUsed {
    /// `"trained"` (in this run) or `"file"`.
    pub source: String,
    pub eta: Vec<f64>,
    pub theta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training_log: Option<TrainingLog>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseAggregates {
    #[serde(with = "crate::config::nonfinite")]
    pub snr_db: f64,
    pub trials: usize,
    pub mse_trained: Vec<f64>,
    pub mse_init: Vec<f64>,
    pub mse_dbp: f64,
    /// First iteration at which the trained curve is at or below the untrained final MSE.
    pub trained_reaches_init_final_at: Option<usize>,
    pub params: ParamsUsed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerPoint {
    #[serde(with = "crate::config::nonfinite")]
    pub snr_db: f64,
    pub symbols: usize,
    pub errors_paista: usize,
    pub errors_dbp: usize,
    pub ser_paista: f64,
    pub ser_dbp: f64,
    pub params: ParamsUsed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    #[serde(with = "crate::config::nonfinite")]
    pub measured: f64,
    pub threshold: f64,
    /// `true` when `measured ≥ threshold` is required instead of `≤`.
    pub at_least: bool,
    pub pass: bool,
}

impl CheckRecord {
    pub fn at_most(check: &str, measured: f64, threshold: f64) -> Self {
        Self {
            check: check.into(),
            measured,
            threshold,
            at_least: false,
            pass: measured <= threshold,
        }
    }

    pub fn at_least(check: &str, measured: f64, threshold: f64) -> Self {
        Self {
            check: check.into(),
            measured,
            threshold,
            at_least: true,
            pass: measured >= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Aggregates {
    Sparse(SparseAggregates),
    Qpsk { points: Vec<SerPoint> },
    Validation { checks: Vec<CheckRecord> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub scenario: ScenarioKind,
    pub provenance: Provenance,
    pub config: ExperimentConfig,
    /// Set when a run aborted and only the finished trials are present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
    pub trials: Vec<TrialRecord>,
    pub aggregates: Aggregates,
}

impl ExperimentResult {
    pub fn new(cfg: &ExperimentConfig, trials: Vec<TrialRecord>, aggregates: Aggregates) -> Self {
        Self {
            scenario: cfg.scenario,
            provenance: Provenance::of(cfg),
            config: cfg.echo(),
            aborted: None,
            trials,
            aggregates,
        }
    }

    pub fn failed_checks(&self) -> Vec<String> {
        match &self.aggregates {
            Aggregates::Validation { checks } => checks
                .iter()
                .filter(|c| !c.pass)
                .map(|c| {
                    format!(
                        "{} (measured {:e}, threshold {:e})",
                        c.check, c.measured, c.threshold
                    )
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("result JSON: {e}")))
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let row = |w: &mut csv::Writer<Vec<u8>>, cells: &[String]| {
            w.write_record(cells).expect("in-memory write")
        };
        match &self.aggregates {
            Aggregates::Sparse(a) => {
                row(
                    &mut w,
                    &["iter", "mse_trained", "mse_init", "mse_dbp"].map(String::from),
                );
                for (k, (t, i)) in a.mse_trained.iter().zip(&a.mse_init).enumerate() {
                    row(&mut w, &[k.to_string(), num(*t), num(*i), num(a.mse_dbp)]);
                }
            }
            Aggregates::Qpsk { points } => {
                row(
                    &mut w,
                    &["snr_db", "ser_paista", "ser_dbp"].map(String::from),
                );
                for p in points {
                    row(&mut w, &[num(p.snr_db), num(p.ser_paista), num(p.ser_dbp)]);
                }
            }
            Aggregates::Validation { checks } => {
                row(
                    &mut w,
                    &["check", "measured", "threshold", "pass"].map(String::from),
                );
                for c in checks {
                    row(
                        &mut w,
                        &[
                            c.check.clone(),
                            num(c.measured),
                            num(c.threshold),
                            c.pass.to_string(),
                        ],
                    );
                }
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn file_name(&self, format: OutputFormat) -> String {
        let stem = if self.aborted.is_some() {
            format!("{}.partial", self.scenario.name())
        } else {
            self.scenario.name().to_string()
        };
        match format {
            OutputFormat::Csv => format!("{stem}.csv"),
            OutputFormat::Json => format!("{stem}.json"),
        }
    }
}

/// Shortest round-trip text; exponent form outside `[1e-3, 1e7)`.
fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-3..1e7).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

/// Write `result` into `dir` and return the path written.
pub fn emit(result: &ExperimentResult, format: OutputFormat, dir: &Path) -> Result<PathBuf> {
    let body = match format {
        OutputFormat::Csv => result.to_csv(),
        OutputFormat::Json => result.to_json(),
    };
    let path = dir.join(result.file_name(format));
    write_file(&path, body.as_bytes())?;
    Ok(path)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    f.write_all(bytes).map_err(|e| HarnessError::io(path, e))
}
