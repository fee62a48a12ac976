//! The measurement map `x ↦ f̂(x)` bundled with everything it depends on.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::FiberChannel;
use crate::error::{ensure_len, Error, Result};
use crate::grid::{TemporalGrid, Waveform};
use crate::nlse::{SsfmSolver, SsfmTrace};
use crate::noise::{add_noise, NoiseModel};
use crate::signal::{MeasurementVector, PulseBank};

/// Grid, pulse bank, fiber and sampling positions, with prebuilt forward and
/// back-propagation solvers.
#[derive(Debug, Clone)]
pub struct ForwardModel {
    grid: TemporalGrid,
    bank: PulseBank,
    channel: FiberChannel,
    sample_positions: Vec<f64>,
    sample_indices: Vec<usize>,
    basis: Vec<f64>,
    forward: SsfmSolver,
    backward: SsfmSolver,
}

impl ForwardModel {
    pub fn new(
        grid: TemporalGrid,
        bank: PulseBank,
        channel: FiberChannel,
        sample_positions: Vec<f64>,
    ) -> Result<Self> {
        bank.check_margin(&grid)?;
        let sample_indices = sample_positions
            .iter()
            .map(|&q| grid.index_of(q))
            .collect::<Result<Vec<_>>>()?;
        let basis = bank.basis(&grid);
        Ok(Self {
            forward: SsfmSolver::new(grid, channel)?,
            backward: SsfmSolver::backward(grid, channel)?,
            grid,
            bank,
            channel,
            sample_positions,
            sample_indices,
            basis,
        })
    }

    /// Samples at every grid point.
    pub fn full_grid(grid: TemporalGrid, bank: PulseBank, channel: FiberChannel) -> Result<Self> {
        let q = grid.times();
        Self::new(grid, bank, channel, q)
    }

    pub fn grid(&self) -> &TemporalGrid {
        &self.grid
    }

    pub fn bank(&self) -> &PulseBank {
        &self.bank
    }

    pub fn channel(&self) -> &FiberChannel {
        &self.channel
    }

    pub fn sample_positions(&self) -> &[f64] {
        &self.sample_positions
    }

    pub fn sample_indices(&self) -> &[usize] {
        &self.sample_indices
    }

    pub fn num_coeffs(&self) -> usize {
        self.bank.len()
    }

    pub fn num_samples(&self) -> usize {
        self.sample_indices.len()
    }

    pub fn solver(&self) -> &SsfmSolver {
        &self.forward
    }

    /// `φ_j(t_i)`.
    #[inline]
    pub fn pulse_value(&self, time_index: usize, coeff_index: usize) -> f64 {
        self.basis[time_index * self.bank.len() + coeff_index]
    }

    pub fn covers_full_grid(&self) -> bool {
        self.sample_indices.len() == self.grid.len()
            && self.sample_indices.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// Input field `Σ_j x_j φ_j(t)` as raw samples.
    pub fn synthesize(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.bank.len();
        ensure_len("coefficient vector", n, x.len())?;
        Ok(self
            .basis
            .chunks_exact(n.max(1))
            .take(self.grid.len())
            .map(|row| {
                if n == 0 {
                    return Complex64::new(0.0, 0.0);
                }
                row.iter()
                    .zip(x)
                    .fold(Complex64::new(0.0, 0.0), |acc, (phi, s)| acc + s * phi)
            })
            .collect())
    }

    /// `f̂(x)`.
    pub fn forward(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.forward_impl(x, false).map(|(s, _)| s)
    }

    /// `f̂(x)` together with the SSFM checkpoints needed by the adjoint pass.
    pub fn forward_traced(&self, x: &[Complex64]) -> Result<(Vec<Complex64>, SsfmTrace)> {
        let (samples, trace) = self.forward_impl(x, true)?;
        Ok((samples, trace.expect("trace requested")))
    }

    fn forward_impl(
        &self,
        x: &[Complex64],
        record: bool,
    ) -> Result<(Vec<Complex64>, Option<SsfmTrace>)> {
        let mut field = self.synthesize(x)?;
        let trace = self.forward.propagate_in_place(&mut field, record)?;
        let samples = self.sample_indices.iter().map(|&i| field[i]).collect();
        Ok((samples, trace))
    }

    /// Noisy measurement `y = f̂(x) + n`.
    pub fn measure<R: Rng + ?Sized>(
        &self,
        x: &[Complex64],
        noise: &NoiseModel,
        rng: &mut R,
    ) -> Result<MeasurementVector> {
        let clean = self.forward(x)?;
        let noisy = add_noise(&clean, noise, rng)?;
        MeasurementVector::new(noisy, self.sample_positions.clone())
    }

    /// Back-propagated field of a full-grid measurement.
    pub fn back_propagate(&self, y: &MeasurementVector) -> Result<Waveform> {
        ensure_len("measurement", self.num_samples(), y.len())?;
        if !self.covers_full_grid() {
            return Err(Error::Unsupported(
                "back-propagation needs samples on every grid point".into(),
            ));
        }
        let mut field = y.samples().to_vec();
        self.backward.propagate_in_place(&mut field, false)?;
        Waveform::new(self.grid, field)
    }
}
