//! Trials, datasets, the per-trial CSV format, and leave-one-out splitting.
//!
//! A trial file looks like:
//!
//! ```text
//! # trial_id=NormalWalk_01,mode=NormalWalk,sample_rate_hz=200
//! time_s,theta_hip_deg,theta_knee_deg,theta_ankle_deg,tau_ankle_Nm
//! 0,21.3,4.1,-2.0,0
//! 0.005,21.1,4.6,-2.4,1.7
//! ...
//! ```
//!
//! Each trial covers one gait cycle, heel contact to the next ipsilateral
//! heel contact, with the first sample at heel contact.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_TRIAL_SAMPLES: usize = 16;
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 200.0;

pub const CSV_HEADER: &str = "time_s,theta_hip_deg,theta_knee_deg,theta_ankle_deg,tau_ankle_Nm";
const CSV_COLUMNS: [&str; 5] = [
    "time_s",
    "theta_hip_deg",
    "theta_knee_deg",
    "theta_ankle_deg",
    "tau_ankle_Nm",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LocomotionMode {
    NormalWalk,
    StairAscent,
    StairDescent,
    SlopeAscent,
    SlopeDescent,
}

impl LocomotionMode {
    pub const ALL: [LocomotionMode; 5] = [
        LocomotionMode::NormalWalk,
        LocomotionMode::StairAscent,
        LocomotionMode::StairDescent,
        LocomotionMode::SlopeAscent,
        LocomotionMode::SlopeDescent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LocomotionMode::NormalWalk => "NormalWalk",
            LocomotionMode::StairAscent => "StairAscent",
            LocomotionMode::StairDescent => "StairDescent",
            LocomotionMode::SlopeAscent => "SlopeAscent",
            LocomotionMode::SlopeDescent => "SlopeDescent",
        }
    }

    /// Position in [`LocomotionMode::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for LocomotionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LocomotionMode {
    type Err = String;

    /// Exact, case-sensitive variant names only.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        LocomotionMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown locomotion mode \"{s}\""))
    }
}

/// One gait cycle of joint-level time series.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitTrial {
    trial_id: String,
    mode: LocomotionMode,
    sample_rate_hz: f64,
    theta_hip: Vec<f64>,
    theta_knee: Vec<f64>,
    theta_ankle: Vec<f64>,
    tau_ankle: Vec<f64>,
}

impl GaitTrial {
    pub fn new(
        trial_id: impl Into<String>,
        mode: LocomotionMode,
        sample_rate_hz: f64,
        theta_hip: Vec<f64>,
        theta_knee: Vec<f64>,
        theta_ankle: Vec<f64>,
        tau_ankle: Vec<f64>,
    ) -> Result<Self> {
        let trial_id = trial_id.into();
        let invalid = |message: String| Error::InvalidTrial {
            trial_id: trial_id.clone(),
            message,
        };
        if trial_id.is_empty() || trial_id.contains([',', '\n', '\r', '=']) {
            return Err(invalid(
                "trial_id must be non-empty and free of ',', '=' and newlines".into(),
            ));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(invalid(format!(
                "sample_rate_hz must be positive, got {sample_rate_hz}"
            )));
        }
        let n = theta_hip.len();
        let columns = [
            ("theta_hip", &theta_hip),
            ("theta_knee", &theta_knee),
            ("theta_ankle", &theta_ankle),
            ("tau_ankle", &tau_ankle),
        ];
        for (name, col) in columns {
            if col.len() != n {
                return Err(invalid(format!(
                    "column length mismatch: theta_hip has {n} samples, {name} has {}",
                    col.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(invalid(format!("{name}[{i}] is not finite")));
            }
        }
        if n < MIN_TRIAL_SAMPLES {
            return Err(invalid(format!(
                "trial has {n} samples, at least {MIN_TRIAL_SAMPLES} required"
            )));
        }
        Ok(Self {
            trial_id,
            mode,
            sample_rate_hz,
            theta_hip,
            theta_knee,
            theta_ankle,
            tau_ankle,
        })
    }

    pub fn trial_id(&self) -> &str {
        &self.trial_id
    }

    pub fn mode(&self) -> LocomotionMode {
        self.mode
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.theta_hip.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta_hip.is_empty()
    }

    pub fn theta_hip(&self) -> &[f64] {
        &self.theta_hip
    }

    pub fn theta_knee(&self) -> &[f64] {
        &self.theta_knee
    }

    pub fn theta_ankle(&self) -> &[f64] {
        &self.theta_ankle
    }

    pub fn tau_ankle(&self) -> &[f64] {
        &self.tau_ankle
    }

    /// Time stamp of sample `i`, in seconds from heel contact.
    pub fn time_at(&self, i: usize) -> f64 {
        i as f64 / self.sample_rate_hz
    }

    /// Serializes to the trial CSV format. Values use the shortest decimal
    /// representation that parses back to the same `f64`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(64 + self.len() * 64);
        out.push_str(&format!(
            "# trial_id={},mode={},sample_rate_hz={}\n",
            self.trial_id, self.mode, self.sample_rate_hz
        ));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.time_at(i),
                self.theta_hip[i],
                self.theta_knee[i],
                self.theta_ankle[i],
                self.tau_ankle[i]
            ));
        }
        out
    }

    /// Parses a trial from CSV text. `source_name` is used in error messages.
    pub fn from_csv_str(text: &str, source_name: &str) -> Result<Self> {
        let parse_err = |line: usize, column: Option<&str>, message: String| Error::Parse {
            source_name: source_name.to_string(),
            line,
            column: column.map(str::to_string),
            message,
        };

        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, meta_line) = lines
            .next()
            .ok_or_else(|| parse_err(1, None, "empty file".into()))?;
        let (trial_id, mode, sample_rate_hz) =
            parse_metadata(meta_line).map_err(|m| parse_err(1, None, m))?;

        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(2, None, "missing header line".into()))?;
        if header.trim_end() != CSV_HEADER {
            return Err(parse_err(
                2,
                None,
                format!("malformed header, expected \"{CSV_HEADER}\", found \"{header}\""),
            ));
        }

        // Cells may be missing at the tail of a column; that is reported as a
        // length mismatch rather than a non-numeric cell.
        let mut columns: [Vec<f64>; 5] = Default::default();
        let mut ended: [Option<usize>; 5] = [None; 5];
        for (line_no, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() > CSV_COLUMNS.len() {
                return Err(parse_err(
                    line_no,
                    None,
                    format!("expected {} fields, found {}", CSV_COLUMNS.len(), cells.len()),
                ));
            }
            for (c, name) in CSV_COLUMNS.iter().enumerate() {
                let cell = cells.get(c).map(|s| s.trim()).unwrap_or("");
                if cell.is_empty() {
                    ended[c].get_or_insert(line_no);
                    continue;
                }
                if let Some(end_line) = ended[c] {
                    return Err(parse_err(
                        line_no,
                        Some(name),
                        format!("value after missing cell on line {end_line}"),
                    ));
                }
                let value: f64 = cell.parse().map_err(|_| {
                    parse_err(line_no, Some(name), format!("non-numeric cell \"{cell}\""))
                })?;
                if !value.is_finite() {
                    return Err(parse_err(
                        line_no,
                        Some(name),
                        format!("non-finite cell \"{cell}\""),
                    ));
                }
                columns[c].push(value);
            }
        }

        let lengths: Vec<usize> = columns.iter().map(Vec::len).collect();
        if lengths.iter().any(|&l| l != lengths[0]) {
            let detail: Vec<String> = CSV_COLUMNS
                .iter()
                .zip(&lengths)
                .map(|(name, l)| format!("{name}={l}"))
                .collect();
            return Err(parse_err(
                0,
                None,
                format!("column length mismatch ({})", detail.join(", ")),
            ));
        }

        let [time, hip, knee, ankle, tau] = columns;
        check_time_column(&time, sample_rate_hz).map_err(|(row, m)| {
            parse_err(row + 3, Some("time_s"), m)
        })?;

        GaitTrial::new(trial_id, mode, sample_rate_hz, hip, knee, ankle, tau)
    }
}

fn parse_metadata(line: &str) -> std::result::Result<(String, LocomotionMode, f64), String> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| "metadata line must start with '#'".to_string())?
        .trim();
    let mut trial_id = None;
    let mut mode = None;
    let mut rate = None;
    for field in body.split(',') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| format!("metadata field \"{field}\" is not key=value"))?;
        match key.trim() {
            "trial_id" => trial_id = Some(value.trim().to_string()),
            "mode" => mode = Some(value.trim().parse::<LocomotionMode>()?),
            "sample_rate_hz" => {
                rate = Some(
                    value
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| format!("non-numeric sample_rate_hz \"{value}\""))?,
                )
            }
            other => return Err(format!("unknown metadata key \"{other}\"")),
        }
    }
    Ok((
        trial_id.ok_or("metadata is missing trial_id")?,
        mode.ok_or("metadata is missing mode")?,
        rate.ok_or("metadata is missing sample_rate_hz")?,
    ))
}

/// Time must start at 0 and advance by 1/fs per row.
fn check_time_column(time: &[f64], sample_rate_hz: f64) -> std::result::Result<(), (usize, String)> {
    let dt = 1.0 / sample_rate_hz;
    let tol = 1e-6 * dt;
    for (i, &t) in time.iter().enumerate() {
        if i > 0 && t <= time[i - 1] {
            return Err((i, format!("time not strictly increasing ({t})")));
        }
        let expected = i as f64 * dt;
        if (t - expected).abs() > tol + 1e-12 * expected.abs() {
            return Err((
                i,
                format!("time {t} deviates from uniform spacing (expected {expected})"),
            ));
        }
    }
    Ok(())
}

pub fn load_trial_csv(path: impl AsRef<Path>) -> Result<GaitTrial> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    GaitTrial::from_csv_str(&text, &path.display().to_string())
}

/// Ordered trials with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitDataset {
    trials: Vec<GaitTrial>,
}

impl GaitDataset {
    pub fn new(trials: Vec<GaitTrial>) -> Result<Self> {
        let mut seen = HashSet::new();
        for t in &trials {
            if !seen.insert(t.trial_id()) {
                return Err(Error::Config(format!("duplicate trial_id {}", t.trial_id())));
            }
        }
        Ok(Self { trials })
    }

    pub fn trials(&self) -> &[GaitTrial] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn get(&self, trial_id: &str) -> Option<&GaitTrial> {
        self.trials.iter().find(|t| t.trial_id() == trial_id)
    }

    pub fn total_samples(&self) -> usize {
        self.trials.iter().map(GaitTrial::len).sum()
    }

    pub fn count_by_mode(&self) -> [usize; 5] {
        let mut counts = [0; 5];
        for t in &self.trials {
            counts[t.mode().index()] += 1;
        }
        counts
    }

    /// Loads every `*.csv` file in `dir`, in file-name order. A directory
    /// without trial files is an error.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.extension().is_some_and(|e| e == "csv") && path.is_file() {
                paths.push(path);
            }
        }
        if paths.is_empty() {
            return Err(Error::Lookup(format!("no trials found in {}", dir.display())));
        }
        paths.sort();
        let trials = paths
            .iter()
            .map(load_trial_csv)
            .collect::<Result<Vec<_>>>()?;
        Self::new(trials)
    }
}

/// One leave-one-out fold: the held-out trial and every other trial, in
/// dataset order.
#[derive(Debug, Clone)]
pub struct LooSplit<'a> {
    pub index: usize,
    pub held_out: &'a GaitTrial,
    pub train: Vec<&'a GaitTrial>,
}

pub fn loo_splits(dataset: &GaitDataset) -> Result<Vec<LooSplit<'_>>> {
    if dataset.len() < 2 {
        return Err(Error::Config(format!(
            "leave-one-out needs at least 2 trials, dataset has {}",
            dataset.len()
        )));
    }
    Ok(dataset
        .trials()
        .iter()
        .enumerate()
        .map(|(index, held_out)| LooSplit {
            index,
            held_out,
            train: dataset
                .trials()
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != index)
                .map(|(_, t)| t)
                .collect(),
        })
        .collect())
}
