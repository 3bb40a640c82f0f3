use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait_data::{GaitTrial, LocomotionMode};
use crate::signal::butterworth::{lowpass_zero_phase, ButterworthFilter, DEFAULT_CUTOFF_HZ, DEFAULT_ORDER};
use crate::signal::derivative::differentiate;
use crate::signal::normalize::NormalizationParams;
use crate::signal::{N_FEATURES, N_TARGETS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub filter_order: usize,
    pub cutoff_hz: f64,
    /// Also low-pass the ankle angle and moment targets.
    pub filter_targets: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            filter_order: DEFAULT_ORDER,
            cutoff_hz: DEFAULT_CUTOFF_HZ,
            filter_targets: true,
        }
    }
}

impl PreprocessConfig {
    pub fn design_filter(&self, sample_rate_hz: f64) -> Result<ButterworthFilter> {
        ButterworthFilter::lowpass(self.filter_order, self.cutoff_hz, sample_rate_hz)
    }
}

/// Un-normalized features of one trial: filtered hip/knee angles and their
/// first and second derivatives, in the order
/// `[hip, hip', hip'', knee, knee', knee'']`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialFeatures {
    pub trial_id: String,
    pub mode: LocomotionMode,
    pub raw: Vec<[f64; N_FEATURES]>,
    /// `[theta_ankle_deg, tau_ankle_Nm]` per sample.
    pub targets: Vec<[f64; N_TARGETS]>,
    /// Gait phase in percent, 0 at the first sample and 100 at the last.
    pub phase: Vec<f64>,
}

impl TrialFeatures {
    pub fn extract(trial: &GaitTrial, config: &PreprocessConfig) -> Result<Self> {
        let context = |e: Error| Error::Preprocess(format!("trial {}: {e}", trial.trial_id()));
        let filter = config.design_filter(trial.sample_rate_hz()).map_err(context)?;
        let dt = 1.0 / trial.sample_rate_hz();

        let hip = lowpass_zero_phase(trial.theta_hip(), &filter).map_err(context)?;
        let knee = lowpass_zero_phase(trial.theta_knee(), &filter).map_err(context)?;
        let hip_vel = differentiate(&hip, dt).map_err(context)?;
        let hip_acc = differentiate(&hip_vel, dt).map_err(context)?;
        let knee_vel = differentiate(&knee, dt).map_err(context)?;
        let knee_acc = differentiate(&knee_vel, dt).map_err(context)?;

        let (ankle, tau) = if config.filter_targets {
            (
                lowpass_zero_phase(trial.theta_ankle(), &filter).map_err(context)?,
                lowpass_zero_phase(trial.tau_ankle(), &filter).map_err(context)?,
            )
        } else {
            (trial.theta_ankle().to_vec(), trial.tau_ankle().to_vec())
        };

        let n = trial.len();
        let raw = (0..n)
            .map(|i| [hip[i], hip_vel[i], hip_acc[i], knee[i], knee_vel[i], knee_acc[i]])
            .collect();
        let targets = (0..n).map(|i| [ankle[i], tau[i]]).collect();
        Ok(Self {
            trial_id: trial.trial_id().to_string(),
            mode: trial.mode(),
            raw,
            targets,
            phase: phase_percent(n),
        })
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }
}

/// Linear 0..=100 phase over `n` samples.
pub fn phase_percent(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|i| 100.0 * i as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpan {
    pub trial_id: String,
    pub mode: LocomotionMode,
    pub rows: Range<usize>,
}

/// Normalized inputs and raw targets, one row per sample, trials contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    pub inputs: Vec<[f64; N_FEATURES]>,
    pub targets: Vec<[f64; N_TARGETS]>,
    pub phase: Vec<f64>,
    pub trials: Vec<TrialSpan>,
    pub params: NormalizationParams,
}

impl FeatureDataset {
    /// Stacks trial blocks and normalizes. With `params == None` the
    /// min/max is fitted on exactly these rows.
    pub fn assemble(trials: &[&TrialFeatures], params: Option<&NormalizationParams>) -> Result<Self> {
        let n_rows: usize = trials.iter().map(|t| t.len()).sum();
        let mut raw = Vec::with_capacity(n_rows);
        let mut targets = Vec::with_capacity(n_rows);
        let mut phase = Vec::with_capacity(n_rows);
        let mut spans = Vec::with_capacity(trials.len());
        for t in trials {
            let start = raw.len();
            raw.extend_from_slice(&t.raw);
            targets.extend_from_slice(&t.targets);
            phase.extend_from_slice(&t.phase);
            spans.push(TrialSpan {
                trial_id: t.trial_id.clone(),
                mode: t.mode,
                rows: start..raw.len(),
            });
        }
        let params = match params {
            Some(p) => p.clone(),
            None => NormalizationParams::fit(&raw)?,
        };
        Ok(Self {
            inputs: params.apply(&raw),
            targets,
            phase,
            trials: spans,
            params,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn trial_of_row(&self, row: usize) -> Option<&str> {
        self.trials
            .iter()
            .find(|s| s.rows.contains(&row))
            .map(|s| s.trial_id.as_str())
    }

    pub fn target_column(&self, k: usize) -> Vec<f64> {
        self.targets.iter().map(|t| t[k]).collect()
    }
}

/// Filters, differentiates and normalizes `trials`. `params == None` fits
/// the normalization on these trials.
pub fn build_features<'a>(
    trials: impl IntoIterator<Item = &'a GaitTrial>,
    config: &PreprocessConfig,
    params: Option<&NormalizationParams>,
) -> Result<FeatureDataset> {
    let extracted = trials
        .into_iter()
        .map(|t| TrialFeatures::extract(t, config))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&TrialFeatures> = extracted.iter().collect();
    FeatureDataset::assemble(&refs, params)
}
