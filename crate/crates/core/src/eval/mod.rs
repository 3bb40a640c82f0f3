//! Metrics, the leave-one-out driver, phase-resolved error curves and
//! report emission.

pub mod loocv;
pub mod metrics;
pub mod phase;
pub mod report;

pub use loocv::{fold_seeds, run_loocv, EvalConfig, FoldResult, ModelSpec, NormalizationPolicy};
pub use metrics::{mean_sd, r2_score, rmse};
pub use phase::{phase_mae_curve, resample, ErrorTrace, PhaseCurve, DEFAULT_PHASE_BINS};
pub use report::{emit_report, merged_summary_csv, phase_svg, EvalReport, ModeSummary, TargetPair};
