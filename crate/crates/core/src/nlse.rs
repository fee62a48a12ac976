//! Symmetrized split-step Fourier propagation of the NLSE and digital back-propagation.
//!
//! FFT convention: forward transform `Σ u_j e^{−iω_k t_j}` unnormalized, inverse
//! normalized by `1/n_t`. Under this convention the linear part of the equation
//! multiplies bin `k` by `exp(iβ₂ω_k²Δz/2)` per step, i.e. `exp(iβ₂ω_k²Δz/4)` per half.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::channel::FiberChannel;
use crate::error::{Error, Result};
use crate::grid::{TemporalGrid, Waveform};
use crate::signal::{sample_at, synthesize_waveform, PulseBank};

/// Per-step checkpoints of a forward pass: the field after the first half
/// dispersion step (the input of the nonlinear phase rotation).
#[derive(Debug, Clone, PartialEq)]
pub struct SsfmTrace {
    step_sizes: Vec<f64>,
    mids: Vec<Vec<Complex64>>,
}

impl SsfmTrace {
    pub fn len(&self) -> usize {
        self.mids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mids.is_empty()
    }

    pub fn step_sizes(&self) -> &[f64] {
        &self.step_sizes
    }

    pub fn mid(&self, step: usize) -> &[Complex64] {
        &self.mids[step]
    }
}

/// Linear half-step multipliers for one step size, with the inverse FFT's `1/n_t` folded in.
#[derive(Debug, Clone)]
struct HalfStep {
    dz: f64,
    forward: Vec<Complex64>,
    adjoint: Vec<Complex64>,
}

/// Precomputed SSFM for a fixed grid and channel. Immutable and shareable; scratch
/// buffers are allocated per call.
#[derive(Clone)]
pub struct SsfmSolver {
    grid: TemporalGrid,
    channel: FiberChannel,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    schedule: Vec<usize>,
    half_steps: Vec<HalfStep>,
}

impl std::fmt::Debug for SsfmSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SsfmSolver")
            .field("grid", &self.grid)
            .field("channel", &self.channel)
            .field("steps", &self.schedule.len())
            .finish()
    }
}

impl SsfmSolver {
    pub fn new(grid: TemporalGrid, channel: FiberChannel) -> Result<Self> {
        Self::with_schedule(grid, channel, channel.step_schedule())
    }

    /// Back-propagation solver: negated coefficients and the step schedule run in
    /// reverse, so that it inverts [`SsfmSolver::new`] exactly even with a remainder step.
    pub fn backward(grid: TemporalGrid, channel: FiberChannel) -> Result<Self> {
        let mut schedule = channel.step_schedule();
        schedule.reverse();
        Self::with_schedule(grid, channel.reversed(), schedule)
    }

    fn with_schedule(grid: TemporalGrid, channel: FiberChannel, steps: Vec<f64>) -> Result<Self> {
        channel.validate()?;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(grid.len());
        let ifft = planner.plan_fft_inverse(grid.len());
        let omega = grid.omega_fft_order();
        let inv_n = 1.0 / grid.len() as f64;

        let mut half_steps: Vec<HalfStep> = Vec::new();
        let mut schedule = Vec::new();
        for dz in steps {
            let idx = match half_steps.iter().position(|h| h.dz == dz) {
                Some(i) => i,
                None => {
                    let forward: Vec<Complex64> = omega
                        .iter()
                        .map(|w| Complex64::from_polar(inv_n, channel.beta2 * w * w * dz / 4.0))
                        .collect();
                    let adjoint = forward.iter().map(|h| h.conj()).collect();
                    half_steps.push(HalfStep {
                        dz,
                        forward,
                        adjoint,
                    });
                    half_steps.len() - 1
                }
            };
            schedule.push(idx);
        }
        Ok(Self {
            grid,
            channel,
            fft,
            ifft,
            schedule,
            half_steps,
        })
    }

    pub fn grid(&self) -> &TemporalGrid {
        &self.grid
    }

    pub fn channel(&self) -> &FiberChannel {
        &self.channel
    }

    pub fn num_steps(&self) -> usize {
        self.schedule.len()
    }

    pub(crate) fn scratch(&self) -> Vec<Complex64> {
        let len = self
            .fft
            .get_inplace_scratch_len()
            .max(self.ifft.get_inplace_scratch_len());
        vec![Complex64::new(0.0, 0.0); len]
    }

    fn spectral_multiply(
        &self,
        buf: &mut [Complex64],
        mult: &[Complex64],
        scratch: &mut [Complex64],
    ) {
        self.fft.process_with_scratch(buf, scratch);
        buf.iter_mut().zip(mult).for_each(|(b, m)| *b *= m);
        self.ifft.process_with_scratch(buf, scratch);
    }

    pub(crate) fn half_dispersion(
        &self,
        step: usize,
        buf: &mut [Complex64],
        scratch: &mut [Complex64],
    ) {
        let h = &self.half_steps[self.schedule[step]];
        self.spectral_multiply(buf, &h.forward, scratch);
    }

    /// Adjoint (= inverse, the operator is unitary) of [`Self::half_dispersion`].
    pub(crate) fn half_dispersion_adjoint(
        &self,
        step: usize,
        buf: &mut [Complex64],
        scratch: &mut [Complex64],
    ) {
        let h = &self.half_steps[self.schedule[step]];
        self.spectral_multiply(buf, &h.adjoint, scratch);
    }

    pub(crate) fn step_size(&self, step: usize) -> f64 {
        self.half_steps[self.schedule[step]].dz
    }

    /// Propagates raw samples in place; optionally records the trace.
    pub(crate) fn propagate_in_place(
        &self,
        field: &mut [Complex64],
        record: bool,
    ) -> Result<Option<SsfmTrace>> {
        let mut scratch = self.scratch();
        let mut trace = record.then(|| SsfmTrace {
            step_sizes: Vec::with_capacity(self.num_steps()),
            mids: Vec::with_capacity(self.num_steps()),
        });
        let gamma = self.channel.gamma;
        for step in 0..self.num_steps() {
            let dz = self.step_size(step);
            self.half_dispersion(step, field, &mut scratch);
            if let Some(t) = trace.as_mut() {
                t.step_sizes.push(dz);
                t.mids.push(field.to_vec());
            }
            if gamma != 0.0 {
                for u in field.iter_mut() {
                    *u *= Complex64::cis(gamma * u.norm_sqr() * dz);
                }
            }
            self.half_dispersion(step, field, &mut scratch);
            if field.iter().any(|u| !u.is_finite()) {
                return Err(Error::NonFiniteField { step });
            }
        }
        Ok(trace)
    }

    pub fn propagate(&self, u0: &Waveform, record: bool) -> Result<(Waveform, Option<SsfmTrace>)> {
        crate::error::ensure_len("waveform grid", self.grid.len(), u0.grid().len())?;
        let mut field = u0.values().to_vec();
        let trace = self.propagate_in_place(&mut field, record)?;
        Ok((Waveform::new(self.grid, field)?, trace))
    }
}

/// Forward SSFM over the whole fiber.
pub fn ssfm_propagate(
    u0: &Waveform,
    channel: &FiberChannel,
    record: bool,
) -> Result<(Waveform, Option<SsfmTrace>)> {
    SsfmSolver::new(*u0.grid(), *channel)?.propagate(u0, record)
}

/// Digital back-propagation: the SSFM with `β₂ → −β₂`, `γ → −γ`.
///
/// On the same discretization this undoes [`ssfm_propagate`] exactly. Each symmetric
/// step is a palindrome of unitary spectral multiplies and a modulus-preserving phase
/// rotation, so the negated step is its inverse.
pub fn dbp(received: &Waveform, channel: &FiberChannel) -> Result<Waveform> {
    SsfmSolver::backward(*received.grid(), *channel)?
        .propagate(received, false)
        .map(|(w, _)| w)
}

/// `f̂(s)`: pulse synthesis, forward propagation, then sampling at `q`.
pub fn channel_forward(
    coeffs: &[Complex64],
    bank: &PulseBank,
    grid: &TemporalGrid,
    channel: &FiberChannel,
    q: &[f64],
) -> Result<Vec<Complex64>> {
    let u0 = synthesize_waveform(coeffs, bank, grid)?;
    let (out, _) = ssfm_propagate(&u0, channel, false)?;
    sample_at(&out, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::relative_l2;
    use crate::noise::{add_noise, NoiseModel};
    use crate::rng::seeded_rng;
    use crate::signal::SparseSignal;
    use rand::Rng;

    fn grid() -> TemporalGrid {
        TemporalGrid::centered(256, 0.3).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gaussian(grid: TemporalGrid) -> Waveform {
        Waveform::from_fn(grid, |t| c((-t * t / 2.0).exp(), 0.0)).unwrap()
    }

    #[test]
    fn identity_without_dispersion_or_nonlinearity() {
        let g = grid();
        let u0 = Waveform::from_fn(g, |t| c((-t * t / 8.0).exp(), (t / 5.0).sin())).unwrap();
        let ch = FiberChannel::new(0.0, 0.0, 0.3, 0.01).unwrap();
        let (out, _) = ssfm_propagate(&u0, &ch, false).unwrap();
        assert!(out.relative_l2_error(&u0) < 1e-13);
    }

    #[test]
    fn constant_field_pure_nonlinear_phase() {
        let g = grid();
        let a = c(0.7, -0.4);
        let u0 = Waveform::from_fn(g, |_| a).unwrap();
        let ch = FiberChannel::new(0.0, 2.0, 0.3, 0.01).unwrap();
        let (out, _) = ssfm_propagate(&u0, &ch, false).unwrap();
        let expected = a * Complex64::cis(2.0 * a.norm_sqr() * 0.3);
        for v in out.values() {
            assert!((v - expected).norm() < 1e-13);
        }
    }

    #[test]
    fn linear_dispersion_matches_chirped_gaussian() {
        // U(z,t) = t0/sqrt(t0² − iβ₂z) · exp(−t²/(2(t0² − iβ₂z)))
        let g = grid();
        let (beta2, z) = (-10.0, 0.3);
        let ch = FiberChannel::new(beta2, 0.0, z, 0.01).unwrap();
        let (out, _) = ssfm_propagate(&gaussian(g), &ch, false).unwrap();
        let q = c(1.0, -beta2 * z);
        for (i, v) in out.values().iter().enumerate() {
            let t = g.time(i);
            let exact = (-(t * t) / (2.0 * q)).exp() / q.sqrt();
            assert!((v - exact).norm() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn fundamental_soliton_keeps_shape() {
        let g = grid();
        let amp = 5f64.sqrt();
        let u0 = Waveform::from_fn(g, |t| c(amp / t.cosh(), 0.0)).unwrap();
        let ch = FiberChannel::new(-10.0, 2.0, 0.3, 0.001).unwrap();
        let (out, _) = ssfm_propagate(&u0, &ch, false).unwrap();
        let exact = Waveform::from_fn(g, |t| Complex64::cis(1.5) * (amp / t.cosh())).unwrap();
        let err = out.relative_l2_error(&exact);
        assert!(err < 1e-3, "soliton error {err}");
    }

    #[test]
    fn energy_is_conserved() {
        let g = grid();
        let bank = PulseBank::evenly_spaced(30, 1.0, &g, None).unwrap();
        let s = SparseSignal::random(30, 3, &mut seeded_rng(5)).unwrap();
        let u0 = synthesize_waveform(&s.coeffs, &bank, &g).unwrap();
        let ch = FiberChannel::new(-10.0, 2.0, 0.3, 0.01).unwrap();
        let (out, _) = ssfm_propagate(&u0, &ch, false).unwrap();
        assert!((out.energy() / u0.energy() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn dbp_inverts_forward() {
        let g = grid();
        let mut rng = seeded_rng(11);
        for _ in 0..5 {
            let u0 = Waveform::from_fn(g, |t| {
                c((-t * t / 20.0).exp(), 0.5 * (-(t - 3.0).powi(2)).exp())
            })
            .unwrap();
            let ch = FiberChannel::new(
                rng.random_range(-20.0..20.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(0.05..0.6),
                0.013,
            )
            .unwrap();
            let (y, _) = ssfm_propagate(&u0, &ch, false).unwrap();
            let back = dbp(&y, &ch).unwrap();
            assert!(back.relative_l2_error(&u0) < 1e-8);
        }
    }

    #[test]
    fn dbp_degrades_under_noise() {
        let g = grid();
        let bank = PulseBank::evenly_spaced(30, 1.0, &g, None).unwrap();
        let s = SparseSignal::random(30, 3, &mut seeded_rng(8)).unwrap();
        let u0 = synthesize_waveform(&s.coeffs, &bank, &g).unwrap();
        let ch = FiberChannel::new(-10.0, 2.0, 0.3, 0.01).unwrap();
        let (y, _) = ssfm_propagate(&u0, &ch, false).unwrap();
        let clean = dbp(&y, &ch).unwrap().relative_l2_error(&u0);
        let mut errs = Vec::new();
        for snr in [25.0, 15.0] {
            let noisy = add_noise(
                y.values(),
                &NoiseModel::new(snr).unwrap(),
                &mut seeded_rng(1),
            )
            .unwrap();
            let yw = Waveform::new(g, noisy).unwrap();
            errs.push(dbp(&yw, &ch).unwrap().relative_l2_error(&u0));
        }
        assert!(clean < 1e-8);
        assert!(errs[0] > 1e-3 && errs[1] > errs[0], "{errs:?}");
    }

    #[test]
    fn trace_records_every_step() {
        let g = grid();
        let ch = FiberChannel::new(-10.0, 2.0, 0.3, 0.01).unwrap();
        let (_, trace) = ssfm_propagate(&gaussian(g), &ch, true).unwrap();
        let trace = trace.unwrap();
        assert_eq!(trace.len(), 30);
        assert!(trace.mids.iter().all(|m| m.len() == 256));
    }

    #[test]
    fn zero_input_is_fixed_point() {
        let g = grid();
        let bank = PulseBank::evenly_spaced(30, 1.0, &g, None).unwrap();
        let ch = FiberChannel::new(-10.0, 2.0, 0.3, 0.01).unwrap();
        let out = channel_forward(&vec![c(0.0, 0.0); 30], &bank, &g, &ch, &g.times()).unwrap();
        assert!(out.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn blow_up_reports_step() {
        let g = grid();
        let u0 = Waveform::from_fn(g, |_| c(1e155, 0.0)).unwrap();
        let ch = FiberChannel::new(-1.0, 1.0, 0.1, 0.01).unwrap();
        assert!(matches!(
            ssfm_propagate(&u0, &ch, false),
            Err(Error::NonFiniteField { step: 0 })
        ));
    }

    #[test]
    fn second_order_in_step_size() {
        let g = grid();
        let bank = PulseBank::evenly_spaced(30, 1.0, &g, None).unwrap();
        let s = SparseSignal::random(30, 3, &mut seeded_rng(9)).unwrap();
        let u0 = synthesize_waveform(&s.coeffs, &bank, &g).unwrap();
        let run = |dz: f64| {
            let ch = FiberChannel::new(-10.0, 2.0, 0.32, dz).unwrap();
            ssfm_propagate(&u0, &ch, false).unwrap().0
        };
        let reference = run(0.02 / 16.0);
        let e1 = relative_l2(run(0.04).values(), reference.values());
        let e2 = relative_l2(run(0.02).values(), reference.values());
        let order = (e1 / e2).log2();
        assert!(order >= 1.8, "order {order}");
    }
}
