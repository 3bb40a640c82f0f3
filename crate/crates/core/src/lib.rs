//! Shared regression model for ankle angle and moment from hip/knee
//! kinematics across locomotion modes, with the preprocessing chain,
//! leave-one-out evaluation and two baseline regressors.

pub mod baselines;
pub mod cli;
pub mod error;
pub mod eval;
pub mod fsutil;
pub mod gait_data;
pub(crate) mod linalg;
pub mod model;
pub mod rng;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
