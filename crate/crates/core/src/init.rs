//! Coefficient estimates from the back-propagated measurement.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Waveform;
use crate::model::ForwardModel;
use crate::signal::MeasurementVector;

/// Maps a back-propagated input field to a coefficient vector.
pub trait CoefficientReadout: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;
    fn read(&self, model: &ForwardModel, field: &Waveform) -> Result<Vec<Complex64>>;
}

/// Field value at each pulse center (nearest grid sample). Pulses have unit peak.
#[derive(Debug, Clone, Copy, Default)]
pub struct PeakReadout;

impl CoefficientReadout for PeakReadout {
    fn name(&self) -> &'static str {
        "peak"
    }

    fn read(&self, model: &ForwardModel, field: &Waveform) -> Result<Vec<Complex64>> {
        let grid = model.grid();
        Ok(model
            .bank()
            .positions()
            .iter()
            .map(|&p| field.values()[grid.nearest_index(p)])
            .collect())
    }
}

/// Least-squares fit of the pulse bank to the whole field.
#[derive(Debug, Clone, Copy, Default)]
pub struct LeastSquaresReadout;

impl CoefficientReadout for LeastSquaresReadout {
    fn name(&self) -> &'static str {
        "least-squares"
    }

    fn read(&self, model: &ForwardModel, field: &Waveform) -> Result<Vec<Complex64>> {
        let n = model.num_coeffs();
        let n_t = model.grid().len();
        let phi = DMatrix::from_fn(n_t, n, |i, j| model.pulse_value(i, j));
        let gram = phi.transpose() * &phi;
        let chol = gram.cholesky().ok_or_else(|| {
            Error::Unsupported("pulse bank Gram matrix is not positive definite".into())
        })?;
        let re = DVector::from_iterator(n_t, field.values().iter().map(|v| v.re));
        let im = DVector::from_iterator(n_t, field.values().iter().map(|v| v.im));
        let xr = chol.solve(&(phi.transpose() * re));
        let xi = chol.solve(&(phi.transpose() * im));
        Ok(xr
            .iter()
            .zip(xi.iter())
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect())
    }
}

static PEAK: PeakReadout = PeakReadout;
static LEAST_SQUARES: LeastSquaresReadout = LeastSquaresReadout;
static REGISTRY: [&dyn CoefficientReadout; 2] = [&PEAK, &LEAST_SQUARES];

pub fn names() -> Vec<&'static str> {
    REGISTRY.iter().map(|r| r.name()).collect()
}

pub fn lookup(name: &str) -> Result<&'static dyn CoefficientReadout> {
    REGISTRY
        .iter()
        .copied()
        .find(|r| r.name() == name)
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "readout",
            name: name.to_string(),
            available: names().join(", "),
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReadoutKind {
    #[default]
    Peak,
    LeastSquares,
}

impl ReadoutKind {
    pub fn strategy(self) -> &'static dyn CoefficientReadout {
        match self {
            Self::Peak => &PEAK,
            Self::LeastSquares => &LEAST_SQUARES,
        }
    }
}

/// DBP starting point: back-propagate the full-grid measurement, then read coefficients.
pub fn dbp_initialize(
    model: &ForwardModel,
    y: &MeasurementVector,
    readout: &dyn CoefficientReadout,
) -> Result<Vec<Complex64>> {
    let field = model.back_propagate(y)?;
    readout.read(model, &field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::FiberChannel;
    use crate::grid::{relative_l2, TemporalGrid};
    use crate::noise::NoiseModel;
    use crate::rng::seeded_rng;
    use crate::signal::{PulseBank, SparseSignal};

    fn grid() -> TemporalGrid {
        TemporalGrid::centered(256, 0.3).unwrap()
    }

    #[test]
    fn linear_channel_well_separated_peaks() {
        let g = grid();
        let bank = PulseBank::evenly_spaced(8, 1.0, &g, Some(7.2)).unwrap();
        let ch = FiberChannel::new(-10.0, 0.0, 0.3, 0.01).unwrap();
        let m = ForwardModel::full_grid(g, bank, ch).unwrap();
        let s = SparseSignal::random(8, 3, &mut seeded_rng(12)).unwrap();
        let y = m
            .measure(&s.coeffs, &NoiseModel::noiseless(), &mut seeded_rng(0))
            .unwrap();
        let x0 = dbp_initialize(&m, &y, &PeakReadout).unwrap();
        for (a, b) in x0.iter().zip(&s.coeffs) {
            assert!((a - b).norm() < 1e-2);
        }
    }

    #[test]
    fn nonlinear_channel_noiseless() {
        let g = grid();
        let bank = PulseBank::evenly_spaced(30, 1.0, &g, None).unwrap();
        let ch = FiberChannel::new(-10.0, 2.0, 0.3, 0.01).unwrap();
        let m = ForwardModel::full_grid(g, bank, ch).unwrap();
        let s = SparseSignal::random(30, 3, &mut seeded_rng(13)).unwrap();
        let y = m
            .measure(&s.coeffs, &NoiseModel::noiseless(), &mut seeded_rng(0))
            .unwrap();
        let lsq = dbp_initialize(&m, &y, &LeastSquaresReadout).unwrap();
        assert!(relative_l2(&lsq, &s.coeffs) < 1e-8);
        // peak readout only picks up neighbor leakage exp(-2.1²/2) ≈ 0.11 per side
        let peak = dbp_initialize(&m, &y, &PeakReadout).unwrap();
        let support = s.support();
        for &j in &support {
            assert!((peak[j] - s.coeffs[j]).norm() < 0.25);
        }
    }

    #[test]
    fn well_separated_nonlinear_peak_readout() {
        let g = grid();
        let bank = PulseBank::evenly_spaced(10, 1.0, &g, Some(6.0)).unwrap();
        let ch = FiberChannel::new(-10.0, 2.0, 0.3, 0.01).unwrap();
        let m = ForwardModel::full_grid(g, bank, ch).unwrap();
        let s = SparseSignal::random(10, 3, &mut seeded_rng(14)).unwrap();
        let y = m
            .measure(&s.coeffs, &NoiseModel::noiseless(), &mut seeded_rng(0))
            .unwrap();
        let x0 = dbp_initialize(&m, &y, &PeakReadout).unwrap();
        assert!(relative_l2(&x0, &s.coeffs) < 5e-2);
    }

    #[test]
    fn registry() {
        assert_eq!(lookup("peak").unwrap().name(), "peak");
        assert_eq!(lookup("least-squares").unwrap().name(), "least-squares");
        assert!(lookup("median").is_err());
        assert_eq!(ReadoutKind::LeastSquares.strategy().name(), "least-squares");
    }
}
