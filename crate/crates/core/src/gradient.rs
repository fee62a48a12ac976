//! Conjugate Wirtinger gradient of `d(x) = ‖y − f̂(x)‖²` by a hand-written reverse
//! pass through the recorded SSFM steps.
//!
//! Cotangents are carried as `ū = ∂d/∂u*`; since `d` is real, `∂d/∂u = conj(ū)`.
//! For a map `w(u)` the chain rule reads
//!
//! ```text
//! ū = conj(w̄)·∂w/∂u* + w̄·conj(∂w/∂u)
//! ```
//!
//! * holomorphic linear maps (FFT, spectral multiply, pulse synthesis): `ū = Mᴴ w̄`;
//!   the half dispersion step is unitary so its adjoint is the conjugate multiplier.
//! * nonlinear rotation `w = u·e^{iφ}`, `φ = c|u|²`, `c = γΔz`:
//!   `∂w/∂u = e^{iφ}(1 + iφ)` and `∂w/∂u* = i c u² e^{iφ}`, hence
//!   `ū = conj(w̄)·i c u² e^{iφ} + w̄·e^{−iφ}(1 − iφ)`.
//!
//! With this convention `d(x + εv) = d(x) + 2ε·Re⟨g, v⟩ + O(ε²)`, and for `γ = 0`
//! the gradient is `Aᴴ(Ax − y)`.

use num_complex::Complex64;

use crate::error::{ensure_len, Error, Result};
use crate::model::ForwardModel;
use crate::nlse::SsfmTrace;
use crate::signal::MeasurementVector;

/// `∂‖y − f̂(x)‖²/∂x*`.
#[derive(Debug, Clone, PartialEq)]
pub struct WirtingerGradient(pub Vec<Complex64>);

impl WirtingerGradient {
    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    /// First-order change of the loss along `v`: `2·Re⟨g, v⟩`.
    pub fn directional_derivative(&self, v: &[Complex64]) -> f64 {
        2.0 * self
            .0
            .iter()
            .zip(v)
            .map(|(g, v)| (g.conj() * v).re)
            .sum::<f64>()
    }
}

/// `‖y − f̂(x)‖²` without the adjoint pass.
pub fn fidelity(model: &ForwardModel, x: &[Complex64], y: &MeasurementVector) -> Result<f64> {
    ensure_len("measurement", model.num_samples(), y.len())?;
    let f = model.forward(x)?;
    Ok(residual_norm(&f, y.samples()))
}

fn residual_norm(f: &[Complex64], y: &[Complex64]) -> f64 {
    f.iter().zip(y).map(|(a, b)| (b - a).norm_sqr()).sum()
}

/// Loss value and conjugate Wirtinger gradient at `x`.
pub fn fidelity_and_gradient(
    model: &ForwardModel,
    x: &[Complex64],
    y: &MeasurementVector,
) -> Result<(f64, WirtingerGradient)> {
    ensure_len("measurement", model.num_samples(), y.len())?;
    let (f, trace) = model.forward_traced(x)?;
    let loss = residual_norm(&f, y.samples());

    let mut cot = vec![Complex64::new(0.0, 0.0); model.grid().len()];
    for ((&idx, fi), yi) in model.sample_indices().iter().zip(&f).zip(y.samples()) {
        cot[idx] += fi - yi;
    }
    backpropagate(model, &trace, &mut cot)?;

    let n = model.num_coeffs();
    let mut grad = vec![Complex64::new(0.0, 0.0); n];
    for (t, c) in cot.iter().enumerate() {
        for (j, g) in grad.iter_mut().enumerate() {
            *g += c * model.pulse_value(t, j);
        }
    }
    Ok((loss, WirtingerGradient(grad)))
}

/// Pulls a cotangent on the output field back to the input field.
fn backpropagate(model: &ForwardModel, trace: &SsfmTrace, cot: &mut [Complex64]) -> Result<()> {
    let solver = model.solver();
    let gamma = solver.channel().gamma;
    let mut scratch = solver.scratch();
    let i = Complex64::i();
    for step in (0..trace.len()).rev() {
        solver.half_dispersion_adjoint(step, cot, &mut scratch);
        if gamma != 0.0 {
            let c = gamma * trace.step_sizes()[step];
            for (w_bar, u) in cot.iter_mut().zip(trace.mid(step)) {
                let phi = c * u.norm_sqr();
                let rot = Complex64::cis(phi);
                *w_bar = w_bar.conj() * i * c * u * u * rot
                    + *w_bar * rot.conj() * Complex64::new(1.0, -phi);
            }
        }
        solver.half_dispersion_adjoint(step, cot, &mut scratch);
        if cot.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteAdjoint { step });
        }
    }
    Ok(())
}
