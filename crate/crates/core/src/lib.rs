//! Online prediction of dynamical systems with observation spectral filtering.

pub mod baselines;
pub mod error;
pub mod filters;
pub mod harness;
pub mod history;
pub mod lifting;
pub mod numerics;
pub mod observer;
pub mod optimizers;
pub mod predictor;
pub mod systems;

pub use error::{OsfError, Result};
pub use numerics::{CMat, Mat};
