use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nlse_recovery_harness::{
    run_experiment, run_training, ExperimentConfig, HarnessError, OutputFormat, Overrides,
    ScenarioKind, TrainedParams,
};

#[derive(Parser)]
#[command(
    name = "nlse-recovery",
    version,
    about = "Sparse recovery and QPSK detection through a simulated fiber"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean MSE against iteration for trained and initial parameters, plus the DBP level.
    Sparse(Common),
    /// Symbol error rate over the SNR sweep, PA-ISTA against DBP.
    Qpsk(Common),
    /// Solver and gradient self-checks; exits 3 if any check fails.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Flip the sign of the dispersion coefficient inside the checks (negative control).
        #[arg(long)]
        corrupt_dispersion_sign: bool,
    },
    /// Learn step sizes and shrinkage parameters and write them as JSON.
    Train {
        #[command(flatten)]
        common: Common,
        /// Which scenario's defaults and prior to train for.
        #[arg(long, value_enum, default_value_t = Target::Sparse)]
        target: Target,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Sparse,
    Qpsk,
}

#[derive(clap::Args)]
struct Common {
    /// TOML file overlaid on the scenario defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// SNR in dB (`inf` for noiseless). For qpsk this replaces the sweep.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Trained-parameter JSON; skips in-run training.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Print the resolved config as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

impl Common {
    fn resolve(&self, kind: ScenarioKind, corrupt: bool) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = ExperimentConfig::load(kind, self.config.as_deref())?;
        Overrides {
            seed: self.seed,
            trials: self.trials,
            snr_db: self.snr_db,
            out: self.out.clone(),
            format: self.format,
            corrupt_dispersion_sign: corrupt,
        }
        .apply(&mut cfg);
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let (common, kind, corrupt, training) = match &cli.command {
        Command::Sparse(c) => (c, ScenarioKind::Sparse, false, false),
        Command::Qpsk(c) => (c, ScenarioKind::Qpsk, false, false),
        Command::Validate {
            common,
            corrupt_dispersion_sign,
        } => (
            common,
            ScenarioKind::Validate,
            *corrupt_dispersion_sign,
            false,
        ),
        Command::Train { common, target } => {
            let kind = match target {
                Target::Sparse => ScenarioKind::Sparse,
                Target::Qpsk => ScenarioKind::Qpsk,
            };
            (common, kind, false, true)
        }
    };
    let cfg = common.resolve(kind, corrupt)?;
    if common.print_config {
        print!("{}", cfg.to_toml_string());
        return Ok(());
    }
    if training {
        let out = run_training(&cfg)?;
        if let Some(v) = out.log.validation.last() {
            eprintln!(
                "held-out mean MSE after {} updates: {}",
                v.iteration, v.mean_mse
            );
        }
        println!("{}", out.params_path.display());
        println!("{}", out.log_path.display());
        return Ok(());
    }
    let params = common
        .params
        .as_deref()
        .map(TrainedParams::read)
        .transpose()?;
    let outcome = run_experiment(&cfg, params.as_ref());
    match outcome {
        Ok((_, path)) => {
            println!("{}", path.display());
            Ok(())
        }
        Err(e) => Err(e),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
