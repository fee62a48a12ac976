//! Experiment configuration: TOML on disk, scenario defaults underneath, CLI flags on top.

use std::path::{Path, PathBuf};

use nlse_recovery::unfolding::{AdamConfig, TrainingConfig, TrainingSchedule};
use nlse_recovery::{
    Backtracking, FiberChannel, ForwardModel, NoiseModel, PulseBank, ReadoutKind, RecoveryConfig,
    ShrinkageKind, SignalPrior, TemporalGrid, UnfoldedParams,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Sparse,
    Qpsk,
    Validate,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sparse => "sparse",
            Self::Qpsk => "qpsk",
            Self::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_t: usize,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub beta2: f64,
    pub gamma: f64,
    pub length: f64,
    pub dz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankConfig {
    pub n: usize,
    pub t0: f64,
    /// Center spacing; widest spacing that respects the edge margin when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    /// Nonzeros per sparse instance.
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(with = "nonfinite")]
    pub snr_db: f64,
    #[serde(with = "nonfinite_list")]
    pub snr_sweep_db: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverySection {
    pub iterations: usize,
    pub init_eta: f64,
    pub init_theta: f64,
    pub shrinkage: ShrinkageKind,
    pub readout: ReadoutKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backtracking: Option<Backtracking>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub iterations: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub schedule: TrainingSchedule,
    pub batch_size: usize,
    pub validation_every: usize,
    pub validation_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSection {
    pub fd_probes: usize,
    pub dbp_trials: usize,
    /// Debug switch: flips the sign of β₂ inside the physics checks.
    pub corrupt_dispersion_sign: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub format: OutputFormat,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub trials: usize,
    pub grid: GridConfig,
    pub channel: ChannelConfig,
    pub bank: BankConfig,
    pub signal: SignalConfig,
    pub noise: NoiseConfig,
    pub recovery: RecoverySection,
    pub training: TrainingSection,
    pub validation: ValidationSection,
    /// Where results go. Not part of the echoed config or its hash.
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn sparse() -> Self {
        Self {
            scenario: ScenarioKind::Sparse,
            seed: 2024,
            trials: 100,
            grid: GridConfig { n_t: 256, dt: 0.3 },
            channel: ChannelConfig {
                beta2: -10.0,
                gamma: 2.0,
                length: 0.3,
                dz: 0.01,
            },
            bank: BankConfig {
                n: 30,
                t0: 1.0,
                spacing: None,
            },
            signal: SignalConfig { k: 3 },
            noise: NoiseConfig {
                snr_db: 15.0,
                snr_sweep_db: vec![5.0, 10.0, 15.0, 20.0],
            },
            recovery: RecoverySection {
                iterations: 30,
                init_eta: 0.01,
                init_theta: 0.001,
                shrinkage: ShrinkageKind::ComplexSoftThreshold,
                readout: ReadoutKind::Peak,
                backtracking: None,
            },
            training: TrainingSection {
                iterations: 100,
                lr: 1e-4,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
                schedule: TrainingSchedule::Joint,
                batch_size: 1,
                validation_every: 10,
                validation_size: 20,
            },
            validation: ValidationSection {
                fd_probes: 50,
                dbp_trials: 20,
                corrupt_dispersion_sign: false,
            },
            output: OutputSection::default(),
        }
    }

    pub fn qpsk() -> Self {
        let mut cfg = Self::sparse();
        cfg.scenario = ScenarioKind::Qpsk;
        cfg.channel.length = 0.5;
        cfg.bank.n = 15;
        cfg.recovery.init_eta = 0.05;
        cfg.recovery.init_theta = 1.5;
        cfg.recovery.shrinkage = ShrinkageKind::QpskTanh;
        cfg
    }

    pub fn validation() -> Self {
        let mut cfg = Self::sparse();
        cfg.scenario = ScenarioKind::Validate;
        cfg
    }

    pub fn defaults_for(kind: ScenarioKind) -> Self {
        match kind {
            ScenarioKind::Sparse => Self::sparse(),
            ScenarioKind::Qpsk => Self::qpsk(),
            ScenarioKind::Validate => Self::validation(),
        }
    }

    /// Overlay a TOML document on the defaults for `kind`. Keys absent from the file keep
    /// their default; unknown keys are rejected.
    pub fn from_toml_str(kind: ScenarioKind, text: &str) -> Result<Self> {
        let overlay: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        let mut base = toml::Table::try_from(Self::defaults_for(kind))
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        merge(&mut base, overlay);
        base.insert("scenario".into(), toml::Value::String(kind.name().into()));
        let cfg: Self = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(kind: ScenarioKind, path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::defaults_for(kind)),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| HarnessError::io(p, e))?;
                Self::from_toml_str(kind, &text)
            }
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The config as echoed into results: everything except the output location.
    pub fn echo(&self) -> Self {
        Self {
            output: OutputSection::default(),
            ..self.clone()
        }
    }

    /// Hex SHA-256 of the echoed config's JSON.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.echo()).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.scenario == ScenarioKind::Qpsk && self.noise.snr_sweep_db.is_empty() {
            return bad("noise.snr_sweep_db is empty".into());
        }
        if self.scenario == ScenarioKind::Sparse && self.signal.k > self.bank.n {
            return bad(format!(
                "signal.k = {} exceeds bank.n = {}",
                self.signal.k, self.bank.n
            ));
        }
        if self.validation.fd_probes == 0 || self.validation.dbp_trials == 0 {
            return bad("validation probe counts must be positive".into());
        }
        for &s in std::iter::once(&self.noise.snr_db).chain(&self.noise.snr_sweep_db) {
            NoiseModel::new(s)?;
        }
        self.model()?;
        self.recovery_config(self.initial_params())?;
        if self.scenario != ScenarioKind::Validate {
            self.training_config(self.noise.snr_db, self.seed)?
                .validate()?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TemporalGrid> {
        Ok(TemporalGrid::centered(self.grid.n_t, self.grid.dt)?)
    }

    pub fn fiber(&self) -> Result<FiberChannel> {
        let c = &self.channel;
        Ok(FiberChannel::new(c.beta2, c.gamma, c.length, c.dz)?)
    }

    pub fn model(&self) -> Result<ForwardModel> {
        let grid = self.grid()?;
        let bank = PulseBank::evenly_spaced(self.bank.n, self.bank.t0, &grid, self.bank.spacing)?;
        Ok(ForwardModel::full_grid(grid, bank, self.fiber()?)?)
    }

    pub fn prior(&self) -> SignalPrior {
        match self.recovery.shrinkage {
            ShrinkageKind::QpskTanh => SignalPrior::Qpsk,
            ShrinkageKind::ComplexSoftThreshold => SignalPrior::Sparse { k: self.signal.k },
        }
    }

    pub fn initial_params(&self) -> UnfoldedParams {
        UnfoldedParams::constant(
            self.recovery.iterations,
            self.recovery.init_eta,
            self.recovery.init_theta,
        )
    }

    pub fn recovery_config(&self, params: UnfoldedParams) -> Result<RecoveryConfig> {
        let rc = RecoveryConfig {
            params,
            shrinkage: self.recovery.shrinkage,
            backtracking: self.recovery.backtracking,
            readout: self.recovery.readout,
        };
        rc.validate()?;
        Ok(rc)
    }

    pub fn training_config(&self, snr_db: f64, seed: u64) -> Result<TrainingConfig> {
        let t = &self.training;
        Ok(TrainingConfig {
            iterations: t.iterations,
            layers: self.recovery.iterations,
            init_eta: self.recovery.init_eta,
            init_theta: self.recovery.init_theta,
            adam: AdamConfig {
                lr: t.lr,
                beta1: t.beta1,
                beta2: t.beta2,
                eps: t.eps,
            },
            seed,
            prior: self.prior(),
            noise: NoiseModel::new(snr_db)?,
            shrinkage: self.recovery.shrinkage,
            readout: self.recovery.readout,
            schedule: t.schedule,
            batch_size: t.batch_size,
            validation_every: t.validation_every,
            validation_size: t.validation_size,
        })
    }
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (k, v) in overlay {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Command-line overrides, applied after the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub snr_db: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub corrupt_dispersion_sign: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(s) = self.snr_db {
            cfg.noise.snr_db = s;
            if cfg.scenario == ScenarioKind::Qpsk {
                cfg.noise.snr_sweep_db = vec![s];
            }
        }
        if let Some(o) = &self.out {
            cfg.output.dir = o.clone();
        }
        if let Some(f) = self.format {
            cfg.output.format = f;
        }
        if self.corrupt_dispersion_sign {
            cfg.validation.corrupt_dispersion_sign = true;
        }
    }
}

/// Floats that may be non-finite (a noiseless SNR, an unmeasurable check). Non-finite
/// values are written as the strings `"inf"`, `"-inf"` and `"nan"` so JSON can carry them.
pub mod nonfinite {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    pub(crate) enum Repr {
        Num(f64),
        Text(String),
    }

    impl Repr {
        pub(crate) fn from_value(v: f64) -> Self {
            if v.is_nan() {
                Self::Text("nan".into())
            } else if v == f64::INFINITY {
                Self::Text("inf".into())
            } else if v == f64::NEG_INFINITY {
                Self::Text("-inf".into())
            } else {
                Self::Num(v)
            }
        }

        pub(crate) fn into_value<E: serde::de::Error>(self) -> Result<f64, E> {
            match self {
                Self::Num(v) => Ok(v),
                Self::Text(s) => match s.as_str() {
                    "inf" | "+inf" | "noiseless" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    "nan" => Ok(f64::NAN),
                    _ => Err(E::custom(format!("unrecognized number {s:?}"))),
                },
            }
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        Repr::from_value(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Repr::deserialize(d)?.into_value()
    }
}

pub mod nonfinite_list {
    use super::nonfinite::Repr;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|&x| Repr::from_value(x))
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?
            .into_iter()
            .map(Repr::into_value)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for kind in [
            ScenarioKind::Sparse,
            ScenarioKind::Qpsk,
            ScenarioKind::Validate,
        ] {
            ExperimentConfig::defaults_for(kind).validate().unwrap();
        }
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::qpsk();
        let back =
            ExperimentConfig::from_toml_str(ScenarioKind::Qpsk, &cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_file_overlays_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            ScenarioKind::Sparse,
            "trials = 7\n[channel]\ngamma = 0.0\n[noise]\nsnr_db = \"inf\"\n",
        )
        .unwrap();
        assert_eq!(cfg.trials, 7);
        assert_eq!(cfg.channel.gamma, 0.0);
        assert_eq!(cfg.channel.beta2, -10.0);
        assert_eq!(cfg.noise.snr_db, f64::INFINITY);
    }

    #[test]
    fn scenario_follows_subcommand() {
        let cfg =
            ExperimentConfig::from_toml_str(ScenarioKind::Qpsk, "scenario = \"sparse\"").unwrap();
        assert_eq!(cfg.scenario, ScenarioKind::Qpsk);
        assert_eq!(cfg.bank.n, 15);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(
            ExperimentConfig::from_toml_str(ScenarioKind::Sparse, "[channel]\nbeta = 1.0").is_err()
        );
        assert!(ExperimentConfig::from_toml_str(
            ScenarioKind::Sparse,
            "[noise]\nsnr_db = \"loud\""
        )
        .is_err());
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = ExperimentConfig::sparse();
        let mut b = a.clone();
        b.output.dir = "elsewhere".into();
        b.output.format = OutputFormat::Json;
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn snr_override_replaces_sweep_for_qpsk() {
        let mut cfg = ExperimentConfig::qpsk();
        Overrides {
            snr_db: Some(12.0),
            trials: Some(3),
            ..Default::default()
        }
        .apply(&mut cfg);
        assert_eq!(cfg.noise.snr_sweep_db, vec![12.0]);
        assert_eq!(cfg.trials, 3);
    }

    #[test]
    fn invalid_values_rejected() {
        let mut cfg = ExperimentConfig::sparse();
        cfg.trials = 0;
        assert!(matches!(cfg.validate(), Err(HarnessError::Config(_))));
        let mut cfg = ExperimentConfig::sparse();
        cfg.channel.dz = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::sparse();
        cfg.signal.k = 31;
        assert!(cfg.validate().is_err());
    }
}
