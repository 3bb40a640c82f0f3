//! Comparison regressors: affine least squares and epsilon-SVR with an RBF kernel.

pub mod grid;
pub mod linear;
pub mod svr;

pub use grid::{grid_search_svr, GridResult, GridScore, SvrGrid};
pub use linear::{linear_fit, residual_correlations, LinearModel};
pub use svr::{kernel_matrix, rbf_kernel, svr_fit, MultiSvr, SolverOptions, SvrModel, SvrParams};
