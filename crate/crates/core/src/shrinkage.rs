//! Shrinkage functions applied after each gradient step, selectable by name.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An elementwise shrinkage `C × R → C` and its reverse-mode derivative.
///
/// Gradients of a real loss with respect to a complex value are represented as
/// `∂L/∂Re + i·∂L/∂Im`.
pub trait Shrinkage: fmt::Debug + Send + Sync {
    /// Registry name.
    fn name(&self) -> &'static str;

    fn apply(&self, z: Complex64, param: f64) -> Complex64;

    /// Given the loss gradient at the output, returns the gradients with respect to
    /// the input `z` and the parameter.
    fn backward(&self, z: Complex64, param: f64, upstream: Complex64) -> (Complex64, f64);

    /// Whether this is the proximal map of `param·|z|`, which the sufficient-decrease
    /// safeguard relies on.
    fn is_l1_prox(&self) -> bool {
        false
    }

    /// Whether `param` must be nonnegative.
    fn requires_nonnegative_param(&self) -> bool {
        false
    }
}

/// `T_τ(z) = z/|z| · max(|z| − τ, 0)`, with `T_τ(0) = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SoftThreshold;

impl Shrinkage for SoftThreshold {
    fn name(&self) -> &'static str {
        "soft-threshold"
    }

    fn apply(&self, z: Complex64, tau: f64) -> Complex64 {
        soft_threshold_c(z, tau)
    }

    // Inside the dead zone, boundary included, every derivative is zero.
    fn backward(&self, z: Complex64, tau: f64, upstream: Complex64) -> (Complex64, f64) {
        let r = z.norm();
        if r <= tau {
            return (Complex64::new(0.0, 0.0), 0.0);
        }
        let radial = (z.conj() * upstream).re;
        let grad_z = upstream * (1.0 - tau / r) + z * (tau * radial / (r * r * r));
        (grad_z, -radial / r)
    }

    fn is_l1_prox(&self) -> bool {
        true
    }

    fn requires_nonnegative_param(&self) -> bool {
        true
    }
}

/// `S(y, λ) = tanh(λ·Re y) + i·tanh(λ·Im y)`, a soft projection onto QPSK.
#[derive(Debug, Clone, Copy, Default)]
pub struct QpskTanh;

impl Shrinkage for QpskTanh {
    fn name(&self) -> &'static str {
        "qpsk-tanh"
    }

    fn apply(&self, y: Complex64, lambda: f64) -> Complex64 {
        qpsk_shrink(y, lambda)
    }

    fn backward(&self, y: Complex64, lambda: f64, upstream: Complex64) -> (Complex64, f64) {
        let ta = (lambda * y.re).tanh();
        let tb = (lambda * y.im).tanh();
        let (da, db) = (1.0 - ta * ta, 1.0 - tb * tb);
        let grad = Complex64::new(lambda * da * upstream.re, lambda * db * upstream.im);
        (grad, y.re * da * upstream.re + y.im * db * upstream.im)
    }
}

pub fn soft_threshold_c(z: Complex64, tau: f64) -> Complex64 {
    let r = z.norm();
    if r <= tau || r == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        z * ((r - tau) / r)
    }
}

pub fn qpsk_shrink(y: Complex64, lambda: f64) -> Complex64 {
    Complex64::new((lambda * y.re).tanh(), (lambda * y.im).tanh())
}

static SOFT_THRESHOLD: SoftThreshold = SoftThreshold;
static QPSK_TANH: QpskTanh = QpskTanh;
static REGISTRY: [&dyn Shrinkage; 2] = [&SOFT_THRESHOLD, &QPSK_TANH];

/// Registered shrinkage names.
pub fn names() -> Vec<&'static str> {
    REGISTRY.iter().map(|s| s.name()).collect()
}

pub fn lookup(name: &str) -> Result<&'static dyn Shrinkage> {
    REGISTRY
        .iter()
        .copied()
        .find(|s| s.name() == name)
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "shrinkage",
            name: name.to_string(),
            available: names().join(", "),
        })
}

/// Serializable selector for the built-in shrinkage functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShrinkageKind {
    #[serde(rename = "soft-threshold")]
    ComplexSoftThreshold,
    QpskTanh,
}

impl ShrinkageKind {
    pub fn strategy(self) -> &'static dyn Shrinkage {
        match self {
            Self::ComplexSoftThreshold => &SOFT_THRESHOLD,
            Self::QpskTanh => &QPSK_TANH,
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match lookup(name)?.name() {
            "soft-threshold" => Ok(Self::ComplexSoftThreshold),
            _ => Ok(Self::QpskTanh),
        }
    }
}
