//! Uniform temporal grid and the complex field sampled on it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform time grid `t_i = t_min + i * dt`, `i = 0..n_t`, with `n_t` a power of two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemporalGrid {
    n_t: usize,
    dt: f64,
    t_min: f64,
}

impl TemporalGrid {
    pub fn new(n_t: usize, dt: f64, t_min: f64) -> Result<Self> {
        if n_t == 0 || !n_t.is_power_of_two() {
            return Err(Error::InvalidParameter {
                name: "n_t",
                reason: format!("{n_t} is not a positive power of two"),
            });
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("{dt} must be positive and finite"),
            });
        }
        if !t_min.is_finite() {
            return Err(Error::InvalidParameter {
                name: "t_min",
                reason: "must be finite".into(),
            });
        }
        Ok(Self { n_t, dt, t_min })
    }

    /// Grid centered on zero: window `[-n_t*dt/2, n_t*dt/2)`.
    pub fn centered(n_t: usize, dt: f64) -> Result<Self> {
        Self::new(n_t, dt, -(n_t as f64) * dt / 2.0)
    }

    pub fn len(&self) -> usize {
        self.n_t
    }

    pub fn is_empty(&self) -> bool {
        self.n_t == 0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    /// Exclusive right edge of the window.
    pub fn t_max(&self) -> f64 {
        self.t_min + self.width()
    }

    pub fn width(&self) -> f64 {
        self.n_t as f64 * self.dt
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t_min + i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_t).map(|i| self.time(i)).collect()
    }

    /// Angular frequencies in centered order, `2π(i − n_t/2)/(n_t·dt)`.
    pub fn omega_centered(&self) -> Vec<f64> {
        let n = self.n_t as f64;
        (0..self.n_t)
            .map(|i| 2.0 * PI * (i as f64 - n / 2.0) / (n * self.dt))
            .collect()
    }

    /// Angular frequencies in natural FFT bin order (0, +, ..., Nyquist, ..., −).
    pub fn omega_fft_order(&self) -> Vec<f64> {
        let n = self.n_t;
        let scale = 2.0 * PI / (n as f64 * self.dt);
        (0..n)
            .map(|k| {
                let signed = if k < n / 2 {
                    k as isize
                } else {
                    k as isize - n as isize
                };
                signed as f64 * scale
            })
            .collect()
    }

    /// Index of the grid point at `t`, if `t` lies on the grid within `1e-9·dt`.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let pos = (t - self.t_min) / self.dt;
        let idx = pos.round();
        if !pos.is_finite() || (pos - idx).abs() > 1e-9 || idx < 0.0 || idx >= self.n_t as f64 {
            return Err(Error::OffGrid { position: t });
        }
        Ok(idx as usize)
    }

    /// Index of the grid point closest to `t`, clamped into the window.
    pub fn nearest_index(&self, t: f64) -> usize {
        let idx = ((t - self.t_min) / self.dt).round();
        idx.clamp(0.0, (self.n_t - 1) as f64) as usize
    }
}

/// Complex field envelope `U(t, z)` at a fixed position along the fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    grid: TemporalGrid,
    values: Vec<Complex64>,
}

impl Waveform {
    pub fn new(grid: TemporalGrid, values: Vec<Complex64>) -> Result<Self> {
        crate::error::ensure_len("waveform values", grid.len(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("waveform values"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TemporalGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Samples `f(t_i)` on every grid point.
    pub fn from_fn(grid: TemporalGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new(grid, grid.times().into_iter().map(f).collect())
    }

    pub fn grid(&self) -> &TemporalGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// `Σ |U|² dt`.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dt
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Relative L2 distance `‖self − other‖ / ‖other‖`.
    pub fn relative_l2_error(&self, reference: &Waveform) -> f64 {
        relative_l2(&self.values, &reference.values)
    }
}

/// `‖a − b‖₂ / ‖b‖₂`, or the absolute error when `b` is zero.
pub fn relative_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}
