use nlse_recovery::grid::relative_l2;
use nlse_recovery::rng::{derive_seed, seeded_rng, SimRng};
use nlse_recovery::{
    dbp, fidelity, fidelity_and_gradient, ssfm_propagate, Complex64, FiberChannel, ForwardModel,
    MeasurementVector, NoiseModel, SparseSignal, TemporalGrid, Waveform,
};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Scenario, VALIDATION_STREAM};
use crate::config::{ExperimentConfig, ScenarioKind};
use crate::error::Result;
use crate::params_file::TrainedParams;
use crate::result::{Aggregates, CheckRecord, ExperimentResult};

pub const ENERGY_TOL: f64 = 1e-8;
pub const NONLINEAR_TOL: f64 = 1e-12;
pub const SOLITON_TOL: f64 = 1e-3;
pub const SOLITON_DZ: f64 = 1e-3;
pub const DBP_TOL: f64 = 1e-8;
pub const MIN_ORDER: f64 = 1.8;
pub const FD_TOL: f64 = 1e-4;
pub const LINEAR_ORACLE_TOL: f64 = 1e-8;

/// Physics and gradient checks on the configured grid and channel.
pub struct ValidationScenario;

impl Scenario for ValidationScenario {
    fn kind(&self) -> ScenarioKind {
        ScenarioKind::Validate
    }

    fn run(
        &self,
        cfg: &ExperimentConfig,
        _params: Option<&TrainedParams>,
    ) -> Result<ExperimentResult> {
        cfg.validate()?;
        let checks = vec![
            check_energy(cfg)?,
            check_nonlinear_phase(cfg)?,
            check_soliton(cfg)?,
            check_dbp_round_trip(cfg)?,
            check_convergence_order(cfg)?,
            check_gradient_fd(cfg)?,
            check_gradient_linear(cfg)?,
        ];
        Ok(ExperimentResult::new(
            cfg,
            Vec::new(),
            Aggregates::Validation { checks },
        ))
    }
}

fn rng_for(cfg: &ExperimentConfig, check: u64) -> SimRng {
    seeded_rng(derive_seed(cfg.seed, VALIDATION_STREAM, check))
}

/// The channel under test, with the debug sign flip applied.
fn channel_under_test(cfg: &ExperimentConfig) -> Result<FiberChannel> {
    let mut ch = cfg.fiber()?;
    if cfg.validation.corrupt_dispersion_sign {
        ch.beta2 = -ch.beta2;
    }
    Ok(ch)
}

fn model_under_test(cfg: &ExperimentConfig, channel: FiberChannel) -> Result<ForwardModel> {
    let base = cfg.model()?;
    Ok(ForwardModel::full_grid(
        *base.grid(),
        base.bank().clone(),
        channel,
    )?)
}

/// `CN(0, scale²)`.
fn complex_normal(rng: &mut SimRng, scale: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * (scale * std::f64::consts::FRAC_1_SQRT_2)
}

fn relative_energy_change(w_in: &Waveform, w_out: &Waveform) -> f64 {
    (w_out.energy() - w_in.energy()).abs() / w_in.energy()
}

pub fn check_energy(cfg: &ExperimentConfig) -> Result<CheckRecord> {
    let model = model_under_test(cfg, channel_under_test(cfg)?)?;
    let mut rng = rng_for(cfg, 0);
    let k = cfg.signal.k.clamp(1, model.num_coeffs());
    let s = SparseSignal::random(model.num_coeffs(), k, &mut rng)?;
    let u0 = Waveform::new(*model.grid(), model.synthesize(&s.coeffs)?)?;
    let (u1, _) = model.solver().propagate(&u0, false)?;
    Ok(CheckRecord::at_most(
        "energy_conservation",
        relative_energy_change(&u0, &u1),
        ENERGY_TOL,
    ))
}

/// `β₂ = 0`: each sample rotates by `γ|u|²L`.
pub fn check_nonlinear_phase(cfg: &ExperimentConfig) -> Result<CheckRecord> {
    let grid = cfg.grid()?;
    let c = &cfg.channel;
    let ch = FiberChannel::new(0.0, c.gamma, c.length, c.dz)?;
    let u0 = Waveform::from_fn(grid, |t| {
        Complex64::new(1.5 * (-t * t / 8.0).exp(), 0.0) * Complex64::cis(0.3 * t)
    })?;
    let (u1, _) = ssfm_propagate(&u0, &ch, false)?;
    let exact: Vec<Complex64> = u0
        .values()
        .iter()
        .map(|u| u * Complex64::cis(c.gamma * u.norm_sqr() * c.length))
        .collect();
    Ok(CheckRecord::at_most(
        "nonlinear_closed_form",
        relative_l2(u1.values(), &exact),
        NONLINEAR_TOL,
    ))
}

/// Fundamental soliton `A·sech(t/T0)`, `A² = |β₂|/(γT0²)`, against
/// `A·sech(t/T0)·exp(iγA²z/2)`.
pub fn check_soliton(cfg: &ExperimentConfig) -> Result<CheckRecord> {
    let grid = cfg.grid()?;
    let c = &cfg.channel;
    let t0 = cfg.bank.t0;
    if c.gamma <= 0.0 || c.beta2 >= 0.0 {
        // No bright soliton without anomalous dispersion and focusing nonlinearity.
        return Ok(CheckRecord::at_most("soliton", f64::INFINITY, SOLITON_TOL));
    }
    let mut ch = FiberChannel::new(c.beta2, c.gamma, c.length, SOLITON_DZ)?;
    if cfg.validation.corrupt_dispersion_sign {
        ch.beta2 = -ch.beta2;
    }
    let amp = (c.beta2.abs() / (c.gamma * t0 * t0)).sqrt();
    let sech = |t: f64| 1.0 / (t / t0).cosh();
    let u0 = Waveform::from_fn(grid, |t| Complex64::new(amp * sech(t), 0.0))?;
    let (u1, _) = ssfm_propagate(&u0, &ch, false)?;
    let phase = Complex64::cis(c.gamma * amp * amp * c.length / 2.0);
    let exact = Waveform::from_fn(grid, |t| phase * amp * sech(t))?;
    Ok(CheckRecord::at_most(
        "soliton",
        u1.relative_l2_error(&exact),
        SOLITON_TOL,
    ))
}

fn random_waveform(grid: TemporalGrid, rng: &mut SimRng) -> Result<Waveform> {
    let half = 0.5 * grid.width() - 8.0;
    let pulses: Vec<(f64, f64, Complex64)> = (0..6)
        .map(|_| {
            (
                rng.random_range(-half..half),
                rng.random_range(0.7..2.0),
                complex_normal(rng, 1.0),
            )
        })
        .collect();
    let mut values: Vec<Complex64> = grid
        .times()
        .iter()
        .map(|&t| {
            pulses
                .iter()
                .map(|&(c, w, a)| a * (-(t - c) * (t - c) / (2.0 * w * w)).exp())
                .sum::<Complex64>()
        })
        .collect();
    for v in &mut values {
        *v += complex_normal(rng, 0.01);
    }
    Ok(Waveform::new(grid, values)?)
}

/// Worst relative error of `dbp(ssfm(u))` over random waveforms and channels.
pub fn check_dbp_round_trip(cfg: &ExperimentConfig) -> Result<CheckRecord> {
    let grid = cfg.grid()?;
    let mut rng = rng_for(cfg, 1);
    let mut worst = 0.0f64;
    for _ in 0..cfg.validation.dbp_trials {
        let mut beta2 = rng.random_range(-20.0..20.0);
        if cfg.validation.corrupt_dispersion_sign {
            beta2 = -beta2;
        }
        let ch = FiberChannel::new(
            beta2,
            rng.random_range(0.0..4.0),
            rng.random_range(0.05..0.6),
            rng.random_range(0.005..0.02),
        )?;
        let u = random_waveform(grid, &mut rng)?;
        let (v, _) = ssfm_propagate(&u, &ch, false)?;
        worst = worst.max(dbp(&v, &ch)?.relative_l2_error(&u));
    }
    Ok(CheckRecord::at_most("dbp_round_trip", worst, DBP_TOL))
}

/// `log2(e(L/8) / e(L/16))` against an `L/256` reference.
pub fn check_convergence_order(cfg: &ExperimentConfig) -> Result<CheckRecord> {
    let ch = channel_under_test(cfg)?;
    let model = model_under_test(cfg, ch)?;
    let mut rng = rng_for(cfg, 2);
    let x: Vec<Complex64> = (0..model.num_coeffs())
        .map(|_| complex_normal(&mut rng, 0.7))
        .collect();
    let u0 = Waveform::new(*model.grid(), model.synthesize(&x)?)?;
    let run = |steps: f64| -> Result<Waveform> {
        let c = FiberChannel {
            dz: ch.length / steps,
            ..ch
        };
        Ok(ssfm_propagate(&u0, &c, false)?.0)
    };
    let reference = run(256.0)?;
    let e1 = run(8.0)?.relative_l2_error(&reference);
    let e2 = run(16.0)?.relative_l2_error(&reference);
    let order = if e2 > 0.0 {
        (e1 / e2).log2()
    } else {
        f64::INFINITY
    };
    Ok(CheckRecord::at_least("convergence_order", order, MIN_ORDER))
}

fn noisy_measurement(
    model: &ForwardModel,
    cfg: &ExperimentConfig,
    rng: &mut SimRng,
) -> Result<MeasurementVector> {
    let k = cfg.signal.k.clamp(1, model.num_coeffs());
    let s = SparseSignal::random(model.num_coeffs(), k, rng)?;
    let noise = NoiseModel::new(cfg.noise.snr_db)?;
    Ok(model.measure(&s.coeffs, &noise, rng)?)
}

/// Worst relative disagreement between `2·Re⟨g, v⟩` and a central difference of the
/// fidelity along unit directions `v`.
pub fn check_gradient_fd(cfg: &ExperimentConfig) -> Result<CheckRecord> {
    const EPS: f64 = 1e-5;
    let model = model_under_test(cfg, channel_under_test(cfg)?)?;
    let mut rng = rng_for(cfg, 3);
    let n = model.num_coeffs();
    let mut worst = 0.0f64;
    for _ in 0..cfg.validation.fd_probes {
        let y = noisy_measurement(&model, cfg, &mut rng)?;
        let x: Vec<Complex64> = (0..n).map(|_| complex_normal(&mut rng, 0.5)).collect();
        let mut v: Vec<Complex64> = (0..n).map(|_| complex_normal(&mut rng, 1.0)).collect();
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|c| *c /= norm);
        let (_, g) = fidelity_and_gradient(&model, &x, &y)?;
        let shifted =
            |s: f64| -> Vec<Complex64> { x.iter().zip(&v).map(|(a, b)| a + b * s).collect() };
        let fd = (fidelity(&model, &shifted(EPS), &y)? - fidelity(&model, &shifted(-EPS), &y)?)
            / (2.0 * EPS);
        let analytic = g.directional_derivative(&v);
        worst = worst.max((fd - analytic).abs() / analytic.abs().max(f64::MIN_POSITIVE));
    }
    Ok(CheckRecord::at_most("gradient_fd", worst, FD_TOL))
}

/// With `γ = 0` the map is a matrix `A` built column by column; the gradient must equal
/// `Aᴴ(Ax − y)`.
pub fn check_gradient_linear(cfg: &ExperimentConfig) -> Result<CheckRecord> {
    let mut ch = channel_under_test(cfg)?;
    ch.gamma = 0.0;
    let model = model_under_test(cfg, ch)?;
    let mut rng = rng_for(cfg, 4);
    let n = model.num_coeffs();
    let m = model.num_samples();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[j] = Complex64::new(1.0, 0.0);
        cols.push(model.forward(&e)?);
    }
    let y = noisy_measurement(&model, cfg, &mut rng)?;
    let x: Vec<Complex64> = (0..n).map(|_| complex_normal(&mut rng, 0.5)).collect();
    let r: Vec<Complex64> = (0..m)
        .map(|i| (0..n).map(|j| cols[j][i] * x[j]).sum::<Complex64>() - y.samples()[i])
        .collect();
    let oracle: Vec<Complex64> = cols
        .iter()
        .map(|col| col.iter().zip(&r).map(|(a, ri)| a.conj() * ri).sum())
        .collect();
    let (_, g) = fidelity_and_gradient(&model, &x, &y)?;
    Ok(CheckRecord::at_most(
        "gradient_linear_oracle",
        relative_l2(g.as_slice(), &oracle),
        LINEAR_ORACLE_TOL,
    ))
}
