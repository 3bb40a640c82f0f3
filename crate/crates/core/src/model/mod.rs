//! The shared feed-forward regressor: forward pass, backpropagation,
//! momentum SGD with an L2 penalty, and finite-difference gradient checks.

pub mod checkpoint;
pub mod gradcheck;
pub mod mlp;
pub mod train;

pub use checkpoint::Checkpoint;
pub use gradcheck::{gradient_check, GradCheckConfig, GradCheckReport};
pub use mlp::{Gradients, MlpModel, DEFAULT_LAYER_DIMS};
pub use train::{sgd_step, train, train_rows, OptimizerState, TrainConfig};
