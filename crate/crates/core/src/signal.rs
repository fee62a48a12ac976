//! Gaussian pulse banks, coefficient vectors and the sampled measurement model.

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::grid::{TemporalGrid, Waveform};

/// Minimum distance (in units of `t0`) between any pulse center and the window edge.
pub const MIN_EDGE_MARGIN: f64 = 3.0;
/// Edge margin (in units of `t0`) used by the default even layout.
pub const DEFAULT_LAYOUT_MARGIN: f64 = 6.0;

/// Gaussian pulses `φ(t − p_i) = exp(−(t − p_i)²/(2 t0²))` with unit peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseBank {
    t0: f64,
    positions: Vec<f64>,
}

impl PulseBank {
    pub fn new(t0: f64, positions: Vec<f64>) -> Result<Self> {
        if !(t0.is_finite() && t0 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "t0",
                reason: format!("{t0} must be positive and finite"),
            });
        }
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("pulse positions"));
        }
        if positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter {
                name: "positions",
                reason: "pulse centers must be strictly increasing".into(),
            });
        }
        Ok(Self { t0, positions })
    }

    /// `n` evenly spaced centers. Without an explicit spacing the centers sit on grid
    /// points, as far apart as the [`DEFAULT_LAYOUT_MARGIN`] edge margin allows, so
    /// that peak readout is a direct lookup. With a spacing the layout is centered on
    /// the window midpoint.
    pub fn evenly_spaced(
        n: usize,
        t0: f64,
        grid: &TemporalGrid,
        spacing: Option<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Self::new(t0, Vec::new());
        }
        let positions = match spacing {
            Some(s) => {
                if !(s.is_finite() && s > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "spacing",
                        reason: format!("{s} must be positive"),
                    });
                }
                let mid = grid.t_min() + grid.width() / 2.0;
                let half = (n - 1) as f64 / 2.0;
                (0..n).map(|i| mid + (i as f64 - half) * s).collect()
            }
            None => {
                let margin = (DEFAULT_LAYOUT_MARGIN * t0 / grid.dt() - 1e-9).ceil() as usize;
                let n_t = grid.len();
                if 2 * margin >= n_t {
                    return Err(Error::InvalidParameter {
                        name: "t0",
                        reason: "pulse width too large for the grid window".into(),
                    });
                }
                let (lo, hi) = (margin, n_t - margin);
                let span = hi - lo;
                if n == 1 {
                    vec![grid.time(n_t / 2)]
                } else {
                    let step = span / (n - 1);
                    if step == 0 {
                        return Err(Error::InvalidParameter {
                            name: "n",
                            reason: format!("{n} pulses do not fit on the grid"),
                        });
                    }
                    let start = lo + (span - step * (n - 1)) / 2;
                    (0..n).map(|i| grid.time(start + i * step)).collect()
                }
            }
        };
        let bank = Self::new(t0, positions)?;
        bank.check_margin(grid)?;
        Ok(bank)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    #[inline]
    pub fn pulse(&self, j: usize, t: f64) -> f64 {
        let d = t - self.positions[j];
        (-d * d / (2.0 * self.t0 * self.t0)).exp()
    }

    /// Every center must stay `3·t0` away from both window edges.
    pub fn check_margin(&self, grid: &TemporalGrid) -> Result<()> {
        let margin = MIN_EDGE_MARGIN * self.t0;
        let (lo, hi) = (grid.t_min(), grid.t_max());
        for &p in &self.positions {
            if p - lo < margin - 1e-12 || hi - p < margin - 1e-12 {
                return Err(Error::PulseOutsideMargin {
                    position: p,
                    margin,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    /// Dense `n_t × n` table of pulse values, row-major by time sample.
    pub fn basis(&self, grid: &TemporalGrid) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(grid.len() * n);
        for i in 0..grid.len() {
            let t = grid.time(i);
            out.extend((0..n).map(|j| self.pulse(j, t)));
        }
        out
    }
}

/// Sparse complex coefficient vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSignal {
    pub coeffs: Vec<Complex64>,
}

impl SparseSignal {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); n])
    }

    /// `k` nonzeros at uniformly drawn distinct positions, unit modulus, uniform phase.
    pub fn random<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Self> {
        if k > n {
            return Err(Error::InvalidParameter {
                name: "k",
                reason: format!("sparsity {k} exceeds length {n}"),
            });
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        let support = sample(rng, n, k);
        for idx in support.iter() {
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            coeffs[idx] = Complex64::from_polar(1.0, phase);
        }
        Ok(Self { coeffs })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn sparsity(&self) -> usize {
        self.coeffs.iter().filter(|c| c.norm_sqr() > 0.0).count()
    }

    pub fn support(&self) -> Vec<usize> {
        support_of(&self.coeffs, 0.0)
    }
}

/// Indices whose modulus exceeds `tol`.
pub fn support_of(coeffs: &[Complex64], tol: f64) -> Vec<usize> {
    coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > tol)
        .map(|(i, _)| i)
        .collect()
}

/// QPSK constellation `{1+i, −1+i, −1−i, 1−i}`.
pub const QPSK_POINTS: [Complex64; 4] = [
    Complex64::new(1.0, 1.0),
    Complex64::new(-1.0, 1.0),
    Complex64::new(-1.0, -1.0),
    Complex64::new(1.0, -1.0),
];

/// Vector of QPSK symbols, each drawn from [`QPSK_POINTS`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpskSignal {
    symbols: Vec<Complex64>,
}

impl QpskSignal {
    pub fn new(symbols: Vec<Complex64>) -> Result<Self> {
        if symbols.iter().any(|s| !QPSK_POINTS.contains(s)) {
            return Err(Error::InvalidParameter {
                name: "symbols",
                reason: "entries must be QPSK constellation points".into(),
            });
        }
        Ok(Self { symbols })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let symbols = (0..n)
            .map(|_| QPSK_POINTS[rng.random_range(0..4)])
            .collect();
        Self { symbols }
    }

    /// Nearest constellation point per component, `sign(a) + i·sign(b)` with `sign(0) = +1`.
    pub fn project(x: &[Complex64]) -> Self {
        let sign = |v: f64| if v < 0.0 { -1.0 } else { 1.0 };
        Self {
            symbols: x
                .iter()
                .map(|c| Complex64::new(sign(c.re), sign(c.im)))
                .collect(),
        }
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Distribution of source coefficient vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SignalPrior {
    /// `k` unit-modulus nonzeros with uniform phase at uniform positions.
    Sparse { k: usize },
    /// Symbols uniform over the QPSK constellation.
    Qpsk,
}

impl SignalPrior {
    pub fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<Complex64>> {
        match *self {
            Self::Sparse { k } => SparseSignal::random(n, k, rng).map(|s| s.coeffs),
            Self::Qpsk => Ok(QpskSignal::random(n, rng).symbols),
        }
    }
}

/// Noisy samples `y_i` taken at grid positions `q_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementVector {
    samples: Vec<Complex64>,
    positions: Vec<f64>,
}

impl MeasurementVector {
    pub fn new(samples: Vec<Complex64>, positions: Vec<f64>) -> Result<Self> {
        ensure_len("measurement positions", samples.len(), positions.len())?;
        Ok(Self { samples, positions })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Grid indices of the sample positions.
    pub fn indices(&self, grid: &TemporalGrid) -> Result<Vec<usize>> {
        self.positions.iter().map(|&q| grid.index_of(q)).collect()
    }
}

/// `U(t_j, 0) = Σ_i s_i φ(t_j − p_i)`.
pub fn synthesize_waveform(
    coeffs: &[Complex64],
    bank: &PulseBank,
    grid: &TemporalGrid,
) -> Result<Waveform> {
    ensure_len("pulse coefficients", bank.len(), coeffs.len())?;
    bank.check_margin(grid)?;
    let values = grid
        .times()
        .into_iter()
        .map(|t| {
            coeffs
                .iter()
                .enumerate()
                .map(|(j, s)| s * bank.pulse(j, t))
                .sum()
        })
        .collect();
    Waveform::new(*grid, values)
}

/// Direct lookup of `U(q_i)` at on-grid positions.
pub fn sample_at(w: &Waveform, q: &[f64]) -> Result<Vec<Complex64>> {
    let grid = w.grid();
    q.iter()
        .map(|&t| grid.index_of(t).map(|i| w.values()[i]))
        .collect()
}
