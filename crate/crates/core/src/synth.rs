//! Deterministic synthetic gait cycles.
//!
//! Hip and knee angles are three-harmonic Fourier series over gait phase
//! `p` in [0, 1], with one coefficient table per locomotion mode:
//!
//! ```text
//! theta(p) = a0 + sum_{k=1..3} ( a_k cos(2 pi k p) + b_k sin(2 pi k p) )
//! ```
//!
//! Each trial scales the harmonic part by `1 + U(-0.05, 0.05)`, shifts the
//! offset by `U(-1.5, 1.5)` degrees (independently for hip and knee), and
//! stretches the cycle to `round(samples_per_trial * (1 + U(-j, j)))`
//! samples where `j = speed_jitter`. Sample `i` of `n` sits at phase
//! `i / (n - 1)`, so the first and last samples are consecutive heel
//! contacts. All draws come from [`SplitMix64`] streams derived from
//! `(seed, mode index, trial index, stream)`; stream 0 holds the jitter
//! draws and stream 1 the measurement noise.
//!
//! The ankle targets are functions of the noise-free hip/knee state. With
//! the normalized coordinates
//!
//! ```text
//! h = (theta_hip - 15) / 20      k = (theta_knee - 35) / 25
//! vh = dtheta_hip / 200          vk = dtheta_knee / 400
//! ```
//!
//! the nonlinear maps are, per mode coefficients `c` and `d`,
//!
//! ```text
//! theta_ankle = c0 + c1 h + c2 k + c3 h k + c4 k^2 + c5 sin(pi k / 3 + h / 2) + c6 vh + c7 vk
//! tau_ankle   = w(p) * (d0 + d1 h + d2 k + d3 h k + d4 sin(pi h / 2) + d5 vh + d6 vk)
//! w(p)        = sin^2(pi p / 0.6) for p <= 0.6, else 0
//! ```
//!
//! so the moment vanishes over swing (p > 0.6). In linear mode both targets
//! are instead one shared affine function of the six-feature vector
//! `[hip, hip', hip'', knee, knee', knee'']` as the default preprocessing
//! computes it from the noise-free angles (6 Hz zero-phase low-pass, then
//! central differences), with no stance gating. Using the processed rather
//! than the analytic derivatives keeps the targets recoverable by a linear
//! fit on pipeline features; the filter's edge transient in the velocities
//! would otherwise dominate the residual.
//! Gaussian noise of `noise_std_deg` is added to the measured hip and knee
//! angles only.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait_data::{GaitDataset, GaitTrial, LocomotionMode, DEFAULT_SAMPLE_RATE_HZ, MIN_TRIAL_SAMPLES};
use crate::rng::SplitMix64;
use crate::signal::{differentiate, lowpass_zero_phase, PreprocessConfig, N_FEATURES};

/// `[a0, a1, b1, a2, b2, a3, b3]` in degrees.
type FourierRow = [f64; 7];

const HIP_TABLE: [FourierRow; 5] = [
    [10.0, 20.0, -4.0, -2.0, 1.5, 0.6, -0.3],  // NormalWalk
    [30.0, 27.0, -7.0, -4.0, 3.0, 1.0, 0.5],   // StairAscent
    [12.0, 12.0, 2.0, 3.0, -2.0, -0.8, 0.4],   // StairDescent
    [22.0, 24.0, -5.0, -3.0, 2.0, 0.8, 0.2],   // SlopeAscent
    [3.0, 16.0, -2.0, 1.0, 1.0, -0.5, -0.4],   // SlopeDescent
];

const KNEE_TABLE: [FourierRow; 5] = [
    [24.0, -12.0, -16.0, -6.0, 4.0, 1.2, 0.8],
    [48.0, 10.0, -28.0, -5.0, 6.0, 1.5, -1.0],
    [42.0, -8.0, -30.0, -9.0, 2.0, 1.4, 1.2],
    [32.0, -4.0, -22.0, -7.0, 4.0, 1.0, 0.6],
    [30.0, -16.0, -18.0, -4.0, 6.0, -1.2, 1.0],
];

/// Ankle angle coefficients `c0..c7` (degrees).
const ANKLE_TABLE: [[f64; 8]; 5] = [
    [4.0, -12.0, -10.0, 4.0, -6.0, 8.0, 6.0, -4.0],
    [6.0, -8.0, -14.0, 3.0, -2.0, 10.0, 4.0, -6.0],
    [0.0, -24.0, -24.0, -1.0, -1.0, 8.0, 11.0, -4.0],
    [7.0, -10.0, -12.0, 3.0, -5.0, 6.0, 5.0, -5.0],
    [2.0, -13.0, -7.0, -2.0, -7.0, 10.0, 7.0, -4.0],
];

/// Ankle moment coefficients `d0..d6` (newton-meters).
const MOMENT_TABLE: [[f64; 7]; 5] = [
    [70.0, -15.0, 10.0, 6.0, 8.0, -6.0, 4.0],
    [85.0, 12.0, -10.0, 5.0, -6.0, -8.0, 5.0],
    [65.0, -10.0, 14.0, -6.0, 10.0, 5.0, -4.0],
    [90.0, -18.0, 8.0, 4.0, 6.0, -7.0, 3.0],
    [90.0, -12.0, 18.0, -7.5, 13.5, 6.0, -7.5],
];

/// Linear-mode coefficients on `[hip, hip', hip'', knee, knee', knee'']`
/// followed by the intercept.
const LINEAR_ANKLE: [f64; 7] = [0.4, 0.005, 0.0001, -0.3, -0.003, 0.00005, 8.0];
const LINEAR_MOMENT: [f64; 7] = [1.2, -0.006, 0.0001, 0.9, 0.004, -0.00005, 20.0];

const AMPLITUDE_JITTER: f64 = 0.05;
const OFFSET_JITTER_DEG: f64 = 1.5;
const STANCE_END: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub seed: u64,
    pub trials_per_mode: BTreeMap<LocomotionMode, usize>,
    pub samples_per_trial: usize,
    pub sample_rate_hz: f64,
    pub noise_std_deg: f64,
    pub speed_jitter: f64,
    pub linear_mode: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            trials_per_mode: default_trial_counts(),
            samples_per_trial: 122,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            noise_std_deg: 0.25,
            speed_jitter: 0.05,
            linear_mode: false,
        }
    }
}

/// 10 level-walking trials, 8 each for stairs and slope ascent, 7 for slope descent.
pub fn default_trial_counts() -> BTreeMap<LocomotionMode, usize> {
    LocomotionMode::ALL.into_iter().zip([10, 8, 8, 8, 7]).collect()
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        for mode in LocomotionMode::ALL {
            match self.trials_per_mode.get(&mode) {
                Some(&c) if c >= 1 => {}
                _ => {
                    return Err(Error::Config(format!(
                        "trials_per_mode[{mode}] must be at least 1"
                    )))
                }
            }
        }
        if !(self.noise_std_deg >= 0.0 && self.noise_std_deg.is_finite()) {
            return Err(Error::Config(format!(
                "noise_std_deg must be >= 0, got {}",
                self.noise_std_deg
            )));
        }
        if !(0.0..0.5).contains(&self.speed_jitter) {
            return Err(Error::Config(format!(
                "speed_jitter must lie in [0, 0.5), got {}",
                self.speed_jitter
            )));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::Config(format!(
                "sample_rate_hz must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        let shortest = (self.samples_per_trial as f64 * (1.0 - self.speed_jitter)).round();
        if shortest < MIN_TRIAL_SAMPLES as f64 {
            return Err(Error::Config(format!(
                "samples_per_trial {} with speed_jitter {} can produce trials shorter than {MIN_TRIAL_SAMPLES} samples",
                self.samples_per_trial, self.speed_jitter
            )));
        }
        Ok(())
    }
}

pub fn trial_id(mode: LocomotionMode, index: usize) -> String {
    format!("{mode}_{:02}", index + 1)
}

/// Closed-form three-harmonic series with its time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierSeries {
    pub coefficients: FourierRow,
    /// Cycle duration in seconds.
    pub period_s: f64,
}

impl FourierSeries {
    pub fn value(&self, phase: f64) -> f64 {
        let c = &self.coefficients;
        let mut v = c[0];
        for k in 1..=3 {
            let arg = 2.0 * PI * k as f64 * phase;
            v += c[2 * k - 1] * arg.cos() + c[2 * k] * arg.sin();
        }
        v
    }

    /// d/dt in degrees per second.
    pub fn velocity(&self, phase: f64) -> f64 {
        let c = &self.coefficients;
        let mut v = 0.0;
        for k in 1..=3 {
            let w = 2.0 * PI * k as f64 / self.period_s;
            let arg = 2.0 * PI * k as f64 * phase;
            v += w * (-c[2 * k - 1] * arg.sin() + c[2 * k] * arg.cos());
        }
        v
    }

    /// d^2/dt^2 in degrees per second squared.
    pub fn acceleration(&self, phase: f64) -> f64 {
        let c = &self.coefficients;
        let mut v = 0.0;
        for k in 1..=3 {
            let w = 2.0 * PI * k as f64 / self.period_s;
            let arg = 2.0 * PI * k as f64 * phase;
            v -= w * w * (c[2 * k - 1] * arg.cos() + c[2 * k] * arg.sin());
        }
        v
    }
}

/// Everything needed to regenerate one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecipe {
    pub trial_id: String,
    pub mode: LocomotionMode,
    pub mode_trial_index: usize,
    pub samples: usize,
    pub hip: FourierSeries,
    pub knee: FourierSeries,
}

impl TrialRecipe {
    fn new(config: &SynthConfig, mode: LocomotionMode, index: usize) -> Self {
        let mut rng = SplitMix64::derive(config.seed, &[mode.index() as u64, index as u64, 0]);
        let stretch = 1.0 + rng.uniform(-config.speed_jitter, config.speed_jitter);
        let samples = (config.samples_per_trial as f64 * stretch).round() as usize;
        let period_s = (samples - 1) as f64 / config.sample_rate_hz;
        let mut jittered = |row: &FourierRow| -> FourierRow {
            let scale = 1.0 + rng.uniform(-AMPLITUDE_JITTER, AMPLITUDE_JITTER);
            let shift = rng.uniform(-OFFSET_JITTER_DEG, OFFSET_JITTER_DEG);
            let mut out = *row;
            out[0] += shift;
            for c in &mut out[1..] {
                *c *= scale;
            }
            out
        };
        let hip = jittered(&HIP_TABLE[mode.index()]);
        let knee = jittered(&KNEE_TABLE[mode.index()]);
        Self {
            trial_id: trial_id(mode, index),
            mode,
            mode_trial_index: index,
            samples,
            hip: FourierSeries {
                coefficients: hip,
                period_s,
            },
            knee: FourierSeries {
                coefficients: knee,
                period_s,
            },
        }
    }

    pub fn phase(&self, i: usize) -> f64 {
        i as f64 / (self.samples - 1) as f64
    }

    /// Analytic `[hip, hip', hip'', knee, knee', knee'']` at every sample.
    pub fn analytic_features(&self) -> Vec<[f64; N_FEATURES]> {
        (0..self.samples)
            .map(|i| {
                let p = self.phase(i);
                [
                    self.hip.value(p),
                    self.hip.velocity(p),
                    self.hip.acceleration(p),
                    self.knee.value(p),
                    self.knee.velocity(p),
                    self.knee.acceleration(p),
                ]
            })
            .collect()
    }

    /// Noise-free `(theta_ankle, tau_ankle)`.
    /// Features as the default preprocessing computes them from the
    /// noise-free angles: zero-phase low-pass, then central differences.
    pub fn processed_features(&self) -> Vec<[f64; N_FEATURES]> {
        let dt = self.hip.period_s / (self.samples - 1) as f64;
        let filter = PreprocessConfig::default()
            .design_filter(1.0 / dt)
            .expect("default filter is valid");
        let chain = |series: &FourierSeries| -> [Vec<f64>; 3] {
            let clean: Vec<f64> = (0..self.samples).map(|i| series.value(self.phase(i))).collect();
            let value = lowpass_zero_phase(&clean, &filter).expect("trial is long enough to filter");
            let vel = differentiate(&value, dt).expect("trial is long enough to differentiate");
            let acc = differentiate(&vel, dt).expect("trial is long enough to differentiate");
            [value, vel, acc]
        };
        let [h, hv, ha] = chain(&self.hip);
        let [k, kv, ka] = chain(&self.knee);
        (0..self.samples).map(|i| [h[i], hv[i], ha[i], k[i], kv[i], ka[i]]).collect()
    }

    pub fn targets(&self, linear_mode: bool) -> (Vec<f64>, Vec<f64>) {
        let features = if linear_mode {
            self.processed_features()
        } else {
            self.analytic_features()
        };
        let mut ankle = Vec::with_capacity(self.samples);
        let mut tau = Vec::with_capacity(self.samples);
        for (i, f) in features.iter().enumerate() {
            let (a, t) = if linear_mode {
                (affine(&LINEAR_ANKLE, f), affine(&LINEAR_MOMENT, f))
            } else {
                (
                    ankle_angle(self.mode, f),
                    stance_window(self.phase(i)) * ankle_moment(self.mode, f),
                )
            };
            ankle.push(a);
            tau.push(t);
        }
        (ankle, tau)
    }

    fn build(&self, config: &SynthConfig) -> Result<GaitTrial> {
        let (ankle, tau) = self.targets(config.linear_mode);
        let mut noise = SplitMix64::derive(
            config.seed,
            &[self.mode.index() as u64, self.mode_trial_index as u64, 1],
        );
        let mut measured = |series: &FourierSeries| -> Vec<f64> {
            (0..self.samples)
                .map(|i| {
                    let clean = series.value(self.phase(i));
                    if config.noise_std_deg > 0.0 {
                        clean + config.noise_std_deg * noise.standard_normal()
                    } else {
                        clean
                    }
                })
                .collect()
        };
        let hip = measured(&self.hip);
        let knee = measured(&self.knee);
        GaitTrial::new(
            self.trial_id.clone(),
            self.mode,
            config.sample_rate_hz,
            hip,
            knee,
            ankle,
            tau,
        )
    }
}

fn affine(coef: &[f64; 7], f: &[f64; N_FEATURES]) -> f64 {
    coef[..6].iter().zip(f).map(|(c, x)| c * x).sum::<f64>() + coef[6]
}

fn normalized_state(f: &[f64; N_FEATURES]) -> (f64, f64, f64, f64) {
    ((f[0] - 15.0) / 20.0, (f[3] - 35.0) / 25.0, f[1] / 200.0, f[4] / 400.0)
}

fn ankle_angle(mode: LocomotionMode, f: &[f64; N_FEATURES]) -> f64 {
    let c = &ANKLE_TABLE[mode.index()];
    let (h, k, vh, vk) = normalized_state(f);
    c[0] + c[1] * h + c[2] * k + c[3] * h * k + c[4] * k * k
        + c[5] * (PI * k / 3.0 + h / 2.0).sin()
        + c[6] * vh
        + c[7] * vk
}

fn ankle_moment(mode: LocomotionMode, f: &[f64; N_FEATURES]) -> f64 {
    let d = &MOMENT_TABLE[mode.index()];
    let (h, k, vh, vk) = normalized_state(f);
    d[0] + d[1] * h + d[2] * k + d[3] * h * k + d[4] * (PI * h / 2.0).sin() + d[5] * vh + d[6] * vk
}

/// Smooth stance gate: rises from 0 at heel contact, back to 0 at toe-off.
pub fn stance_window(phase: f64) -> f64 {
    if phase <= STANCE_END {
        (PI * phase / STANCE_END).sin().powi(2)
    } else {
        0.0
    }
}

/// Recipes for every trial the config describes, in mode order.
pub fn recipes(config: &SynthConfig) -> Result<Vec<TrialRecipe>> {
    config.validate()?;
    let mut out = Vec::new();
    for mode in LocomotionMode::ALL {
        let count = config.trials_per_mode[&mode];
        out.extend((0..count).map(|i| TrialRecipe::new(config, mode, i)));
    }
    Ok(out)
}

pub fn generate(config: &SynthConfig) -> Result<GaitDataset> {
    let trials = recipes(config)?
        .iter()
        .map(|r| r.build(config))
        .collect::<Result<Vec<_>>>()?;
    GaitDataset::new(trials)
}

pub fn recipe_for(trial_id: &str, config: &SynthConfig) -> Result<TrialRecipe> {
    recipes(config)?
        .into_iter()
        .find(|r| r.trial_id == trial_id)
        .ok_or_else(|| Error::Lookup(format!("no synthetic trial named {trial_id} under this config")))
}

/// Noise-free `(theta_ankle, tau_ankle)` of a generated trial.
pub fn ground_truth(trial_id: &str, config: &SynthConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok(recipe_for(trial_id, config)?.targets(config.linear_mode))
}
