//! Deep unfolding of PA-ISTA with the store-and-replay method.
//!
//! The store phase runs PA-ISTA once and keeps every physics gradient. The replay
//! phase reruns the same chain with those gradients held constant and differentiates
//! only the shallow `shrink(s − |η_k|·G_k, θ_k)` recursion with respect to `(η, θ)`,
//! so no derivative is ever taken through a derivative.

mod adam;
mod store_replay;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use store_replay::{replay_phase, store_phase, GradientStore, ReplayOutcome};
pub use train::{
    draw_instance, evaluate_mse, train, Instance, TrainingConfig, TrainingError, TrainingLog,
    TrainingOutcome, TrainingSchedule, ValidationPoint,
};

pub use crate::params::UnfoldedParams;
