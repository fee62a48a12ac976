//! Physics-aware sparse recovery through an optical fiber governed by the nonlinear
//! Schrödinger equation.
//!
//! The measurement map synthesizes Gaussian pulses from a coefficient vector,
//! propagates them with the symmetrized split-step Fourier method and samples the
//! output. Recovery runs PA-ISTA: gradient steps whose conjugate Wirtinger gradient
//! comes from an adjoint pass through the solver, each followed by a shrinkage
//! function. Step sizes and shrinkage parameters can be learned per iteration with
//! the store-and-replay unfolding trainer.

pub mod channel;
pub mod error;
pub mod gradient;
pub mod grid;
pub mod init;
pub mod metrics;
pub mod model;
pub mod nlse;
pub mod noise;
pub mod params;
pub mod recovery;
pub mod rng;
pub mod shrinkage;
pub mod signal;
pub mod unfolding;

pub use channel::FiberChannel;
pub use error::{Error, Result};
pub use gradient::{fidelity, fidelity_and_gradient, WirtingerGradient};
pub use grid::{TemporalGrid, Waveform};
pub use init::{dbp_initialize, CoefficientReadout, ReadoutKind};
pub use model::ForwardModel;
pub use nlse::{channel_forward, dbp, ssfm_propagate, SsfmSolver, SsfmTrace};
pub use noise::{add_noise, NoiseModel};
pub use params::UnfoldedParams;
pub use recovery::{
    pa_ista, pa_ista_from, Backtracking, RecoveryConfig, RecoveryError, RecoveryReport,
};
pub use shrinkage::{Shrinkage, ShrinkageKind};
pub use signal::{
    sample_at, synthesize_waveform, MeasurementVector, PulseBank, QpskSignal, SignalPrior,
    SparseSignal,
};

pub use num_complex::Complex64;
