use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{grid_search_svr, linear_fit, MultiSvr, SolverOptions, SvrGrid, SvrParams};
use crate::error::{Error, Result};
use crate::eval::metrics::{r2_score, rmse};
use crate::eval::phase::DEFAULT_PHASE_BINS;
use crate::eval::report::{EvalReport, TargetPair};
use crate::gait_data::{GaitDataset, LocomotionMode};
use crate::model::{train, MlpModel, TrainConfig, DEFAULT_LAYER_DIMS};
use crate::rng::SplitMix64;
use crate::signal::{FeatureDataset, NormalizationParams, PreprocessConfig, TrialFeatures, N_FEATURES, N_TARGETS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSpec {
    Mlp,
    Linear,
    Svr,
}

impl ModelSpec {
    pub const ALL: [ModelSpec; 3] = [ModelSpec::Mlp, ModelSpec::Linear, ModelSpec::Svr];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelSpec::Mlp => "mlp",
            ModelSpec::Linear => "linear",
            ModelSpec::Svr => "svr",
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelSpec::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown model '{s}', expected mlp, linear or svr")))
    }
}

/// Where the min-max normalization is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationPolicy {
    /// Training trials of each fold only.
    #[default]
    TrainingFold,
    /// All trials, before splitting.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub preprocess: PreprocessConfig,
    pub layer_dims: Vec<usize>,
    pub init_seed: u64,
    pub train: TrainConfig,
    /// `None` uses `SvrParams::defaults_for(6)`.
    pub svr: Option<SvrParams>,
    /// When set, the SVR hyperparameters are chosen by a trial-level grid
    /// search over the whole dataset before the leave-one-out loop.
    pub svr_grid: Option<SvrGrid>,
    pub svr_solver: SolverOptions,
    pub normalization: NormalizationPolicy,
    pub phase_bins: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            preprocess: PreprocessConfig::default(),
            layer_dims: DEFAULT_LAYER_DIMS.to_vec(),
            init_seed: 1,
            train: TrainConfig::default(),
            svr: None,
            svr_grid: None,
            svr_solver: SolverOptions::default(),
            normalization: NormalizationPolicy::TrainingFold,
            phase_bins: DEFAULT_PHASE_BINS,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.layer_dims.first() != Some(&N_FEATURES) || self.layer_dims.last() != Some(&N_TARGETS) {
            return Err(Error::Config(format!(
                "layer_dims must start with {N_FEATURES} and end with {N_TARGETS}, got {:?}",
                self.layer_dims
            )));
        }
        MlpModel::zeros(&self.layer_dims)?;
        if self.phase_bins < 2 {
            return Err(Error::Config(format!("phase_bins must be at least 2, got {}", self.phase_bins)));
        }
        if let Some(p) = &self.svr {
            p.validate()?;
        }
        if !(self.preprocess.cutoff_hz > 0.0) || self.preprocess.filter_order == 0 {
            return Err(Error::Config("filter order and cutoff must be positive".into()));
        }
        Ok(())
    }
}

/// Held-out predictions and metrics for one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub trial_id: String,
    pub mode: LocomotionMode,
    pub r2: TargetPair,
    pub rmse: TargetPair,
    pub phase: Vec<f64>,
    pub truth: Vec<[f64; N_TARGETS]>,
    pub predicted: Vec<[f64; N_TARGETS]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_loss: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
}

impl FoldResult {
    fn new(
        trial_id: String,
        mode: LocomotionMode,
        phase: Vec<f64>,
        truth: Vec<[f64; N_TARGETS]>,
        predicted: Vec<[f64; N_TARGETS]>,
    ) -> Result<Self> {
        let col = |rows: &[[f64; N_TARGETS]], k: usize| -> Vec<f64> { rows.iter().map(|r| r[k]).collect() };
        let metric = |f: fn(&[f64], &[f64]) -> Result<f64>, k: usize| f(&col(&truth, k), &col(&predicted, k));
        Ok(Self {
            r2: TargetPair::new(metric(r2_score, 0)?, metric(r2_score, 1)?),
            rmse: TargetPair::new(metric(rmse, 0)?, metric(rmse, 1)?),
            trial_id,
            mode,
            phase,
            truth,
            predicted,
            train_loss: None,
            converged: None,
        })
    }

    pub fn abs_errors(&self, k: usize) -> Vec<f64> {
        self.truth.iter().zip(&self.predicted).map(|(t, p)| (p[k] - t[k]).abs()).collect()
    }
}

/// 64-bit FNV-1a, used to key per-fold random streams by trial id so they
/// do not depend on dataset order.
fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// `(init_seed, shuffle_seed)` for the fold holding out `trial_id`.
pub fn fold_seeds(config: &EvalConfig, trial_id: &str) -> (u64, u64) {
    let key = fnv1a(trial_id);
    (
        SplitMix64::derive(config.init_seed, &[key]).next_u64(),
        SplitMix64::derive(config.train.shuffle_seed, &[key]).next_u64(),
    )
}

/// Leave-one-out over `dataset` with trials taken in trial-id order. Folds
/// run on the current rayon pool; the result does not depend on its size.
pub fn run_loocv(dataset: &GaitDataset, model: ModelSpec, config: &EvalConfig) -> Result<EvalReport> {
    config.validate()?;
    if dataset.len() < 2 {
        return Err(Error::Config(format!(
            "leave-one-out needs at least 2 trials, dataset has {}",
            dataset.len()
        )));
    }
    let mut features = dataset
        .trials()
        .par_iter()
        .map(|t| TrialFeatures::extract(t, &config.preprocess))
        .collect::<Result<Vec<_>>>()?;
    features.sort_by(|a, b| a.trial_id.cmp(&b.trial_id));

    let pooled_params = match config.normalization {
        NormalizationPolicy::Pooled => {
            let rows: Vec<[f64; N_FEATURES]> = features.iter().flat_map(|f| f.raw.iter().copied()).collect();
            Some(NormalizationParams::fit(&rows)?)
        }
        NormalizationPolicy::TrainingFold => None,
    };

    let svr_params = match model {
        ModelSpec::Svr => Some(select_svr_params(&features, pooled_params.as_ref(), config)?),
        _ => None,
    };

    let results: Vec<Result<FoldResult>> = (0..features.len())
        .into_par_iter()
        .map(|i| {
            let held = &features[i];
            run_fold(&features, i, model, config, pooled_params.as_ref(), svr_params).map_err(|e| Error::Fold {
                trial_id: held.trial_id.clone(),
                source: Box::new(e),
            })
        })
        .collect();
    let folds = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut echo = serde_json::to_value(config).expect("config serializes");
    if let Some(p) = svr_params {
        echo["svr_selected"] = serde_json::to_value(p).expect("params serialize");
    }
    EvalReport::from_folds(model, echo, folds, config.phase_bins)
}

fn select_svr_params(
    features: &[TrialFeatures],
    pooled: Option<&NormalizationParams>,
    config: &EvalConfig,
) -> Result<SvrParams> {
    let Some(grid) = &config.svr_grid else {
        return Ok(config.svr.unwrap_or_else(|| SvrParams::defaults_for(N_FEATURES)));
    };
    let refs: Vec<&TrialFeatures> = features.iter().collect();
    let data = FeatureDataset::assemble(&refs, pooled)?;
    let groups: Vec<&str> = (0..data.len())
        .map(|r| data.trial_of_row(r).expect("row belongs to a trial"))
        .collect();
    let result = grid_search_svr(&data.inputs, &data.targets, &groups, grid, config.svr_solver)?;
    log::info!("svr grid search selected {:?}", result.best);
    Ok(result.best)
}

fn run_fold(
    features: &[TrialFeatures],
    held: usize,
    model: ModelSpec,
    config: &EvalConfig,
    pooled: Option<&NormalizationParams>,
    svr_params: Option<SvrParams>,
) -> Result<FoldResult> {
    let held_out = &features[held];
    let train_refs: Vec<&TrialFeatures> = features
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != held)
        .map(|(_, f)| f)
        .collect();
    let train_data = FeatureDataset::assemble(&train_refs, pooled)?;
    let test_data = FeatureDataset::assemble(&[held_out], Some(&train_data.params))?;
    log::debug!("fold {}: {} training rows", held_out.trial_id, train_data.len());

    let mut train_loss = None;
    let mut converged = None;
    let predicted: Vec<[f64; N_TARGETS]> = match model {
        ModelSpec::Mlp => {
            let (init_seed, shuffle_seed) = fold_seeds(config, &held_out.trial_id);
            let mut net = MlpModel::init(&config.layer_dims, init_seed)?;
            let train_config = TrainConfig {
                shuffle_seed,
                ..config.train.clone()
            };
            train_loss = Some(train(&mut net, &train_data, &train_config)?);
            let flat: Vec<f64> = test_data.inputs.iter().flatten().copied().collect();
            net.forward_batch(&flat, test_data.len())?
                .chunks_exact(N_TARGETS)
                .map(|c| [c[0], c[1]])
                .collect()
        }
        ModelSpec::Linear => {
            let lin = linear_fit(&train_data.inputs, &train_data.targets)?;
            test_data
                .inputs
                .iter()
                .map(|x| {
                    let p = lin.predict(x);
                    [p[0], p[1]]
                })
                .collect()
        }
        ModelSpec::Svr => {
            let params = svr_params.expect("selected before the folds");
            let svr = MultiSvr::fit(&train_data.inputs, &train_data.targets, params, config.svr_solver)?;
            converged = Some(svr.converged());
            test_data
                .inputs
                .iter()
                .map(|x| {
                    let p = svr.predict(x);
                    [p[0], p[1]]
                })
                .collect()
        }
    };

    let mut result = FoldResult::new(
        held_out.trial_id.clone(),
        held_out.mode,
        test_data.phase,
        test_data.targets,
        predicted,
    )?;
    result.train_loss = train_loss;
    result.converged = converged;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};
    use std::collections::BTreeMap;

    fn small_synth(linear_mode: bool) -> GaitDataset {
        let counts: BTreeMap<LocomotionMode, usize> = LocomotionMode::ALL.iter().map(|&m| (m, 2)).collect();
        generate(&SynthConfig {
            trials_per_mode: counts,
            linear_mode,
            noise_std_deg: 0.0,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn model_spec_parsing() {
        assert_eq!("svr".parse::<ModelSpec>().unwrap(), ModelSpec::Svr);
        assert!("SVR".parse::<ModelSpec>().is_err());
    }

    #[test]
    fn fold_seeds_depend_on_trial_not_position() {
        let c = EvalConfig::default();
        assert_eq!(fold_seeds(&c, "NormalWalk_01"), fold_seeds(&c, "NormalWalk_01"));
        assert_ne!(fold_seeds(&c, "NormalWalk_01").0, fold_seeds(&c, "NormalWalk_02").0);
    }

    #[test]
    fn linear_model_recovers_linear_synthetic_data() {
        let ds = small_synth(true);
        let report = run_loocv(&ds, ModelSpec::Linear, &EvalConfig::default()).unwrap();
        assert_eq!(report.folds.len(), 10);
        for f in &report.folds {
            assert!(f.r2.theta >= 0.999 && f.r2.tau >= 0.999, "{} {:?}", f.trial_id, f.r2);
        }
    }

    #[test]
    fn coverage_and_order() {
        let ds = small_synth(false);
        let report = run_loocv(&ds, ModelSpec::Linear, &EvalConfig::default()).unwrap();
        let mut ids: Vec<&str> = ds.trials().iter().map(|t| t.trial_id()).collect();
        ids.sort();
        let held: Vec<&str> = report.folds.iter().map(|f| f.trial_id.as_str()).collect();
        assert_eq!(held, ids);
        assert_eq!(report.fold_order, ids);
    }

    #[test]
    fn pooled_normalization_changes_only_the_fit() {
        let ds = small_synth(false);
        let a = run_loocv(&ds, ModelSpec::Linear, &EvalConfig::default()).unwrap();
        let cfg = EvalConfig {
            normalization: NormalizationPolicy::Pooled,
            ..Default::default()
        };
        let b = run_loocv(&ds, ModelSpec::Linear, &cfg).unwrap();
        // An affine model is invariant to the affine input normalization.
        for (x, y) in a.folds.iter().zip(&b.folds) {
            assert!((x.r2.theta - y.r2.theta).abs() < 1e-8);
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let ds = small_synth(false);
        let cfg = EvalConfig {
            layer_dims: vec![5, 10, 2],
            ..Default::default()
        };
        assert!(matches!(run_loocv(&ds, ModelSpec::Mlp, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn failed_fold_names_the_trial() {
        let ds = small_synth(false);
        let cfg = EvalConfig {
            train: TrainConfig {
                epochs: 1,
                learning_rate: 1e3,
                momentum: 0.99,
                ..Default::default()
            },
            ..Default::default()
        };
        match run_loocv(&ds, ModelSpec::Mlp, &cfg) {
            Err(Error::Fold { trial_id, .. }) => assert!(!trial_id.is_empty()),
            other => panic!("expected a fold error, got {:?}", other.map(|r| r.folds.len())),
        }
    }
}
