//! Preprocessing: low-pass filtering, numerical differentiation, min-max
//! normalization, spectral energy checks, and feature assembly.

pub mod butterworth;
pub mod derivative;
pub mod features;
pub mod normalize;
pub mod spectrum;

pub use butterworth::{lowpass_zero_phase, Biquad, ButterworthFilter};
pub use derivative::differentiate;
pub use features::{build_features, phase_percent, FeatureDataset, PreprocessConfig, TrialFeatures, TrialSpan};
pub use normalize::{apply_normalization, NormalizationParams};
pub use spectrum::spectral_energy_fraction;

/// Inputs per row: hip angle, velocity, acceleration, then the same for the knee.
pub const N_FEATURES: usize = 6;
/// Outputs per row: ankle angle (deg) and ankle moment (Nm).
pub const N_TARGETS: usize = 2;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "theta_hip",
    "dtheta_hip",
    "ddtheta_hip",
    "theta_knee",
    "dtheta_knee",
    "ddtheta_knee",
];
pub const TARGET_NAMES: [&str; N_TARGETS] = ["theta", "tau"];
