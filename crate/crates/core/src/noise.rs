//! Circularly symmetric complex Gaussian measurement noise.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// AWGN parameterized by `SNR[dB] = 10 log10(1/σ²)`. `snr_db = +∞` is noiseless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub snr_db: f64,
}

impl NoiseModel {
    pub fn new(snr_db: f64) -> Result<Self> {
        if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
            return Err(Error::InvalidParameter {
                name: "snr_db",
                reason: format!("{snr_db} is not a usable SNR"),
            });
        }
        Ok(Self { snr_db })
    }

    pub fn noiseless() -> Self {
        Self {
            snr_db: f64::INFINITY,
        }
    }

    /// Variance `σ² = 10^(−snr_db/10)` of each complex sample.
    pub fn sigma2(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }
}

/// `out_i = in_i + n_i`, `n_i ~ CN(0, σ²)`: real and imaginary parts each `N(0, σ²/2)`.
pub fn add_noise<R: Rng + ?Sized>(
    samples: &[Complex64],
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let sigma2 = noise.sigma2();
    if !sigma2.is_finite() {
        return Err(Error::NonFinite("noise variance"));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("noise input"));
    }
    if sigma2 == 0.0 {
        return Ok(samples.to_vec());
    }
    let std = (sigma2 / 2.0).sqrt();
    Ok(samples
        .iter()
        .map(|s| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            s + Complex64::new(std * re, std * im)
        })
        .collect())
}
