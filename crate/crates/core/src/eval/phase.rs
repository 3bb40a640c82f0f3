use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_PHASE_BINS: usize = 101;
/// Stance covers phase <= 60 %, swing the rest.
pub const STANCE_END_PERCENT: f64 = 60.0;

/// Bin centres `0, 100/(n-1), ..., 100` in percent.
pub fn bin_phases(n_bins: usize) -> Vec<f64> {
    (0..n_bins).map(|b| 100.0 * b as f64 / (n_bins - 1) as f64).collect()
}

pub fn is_swing(phase_percent: f64) -> bool {
    phase_percent > STANCE_END_PERCENT
}

/// Linear interpolation of `(phase, values)` at each bin centre. `phase`
/// must be non-decreasing; bins outside the sampled range take the nearest
/// end value.
pub fn resample(phase: &[f64], values: &[f64], n_bins: usize) -> Result<Vec<f64>> {
    if phase.len() != values.len() || phase.is_empty() {
        return Err(Error::Evaluation(format!(
            "cannot resample {} values over {} phase points",
            values.len(),
            phase.len()
        )));
    }
    if n_bins < 2 {
        return Err(Error::Config(format!("phase bins must be at least 2, got {n_bins}")));
    }
    if phase.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Evaluation("phase must be non-decreasing".into()));
    }
    let mut out = Vec::with_capacity(n_bins);
    let mut j = 0;
    for p in bin_phases(n_bins) {
        while j + 1 < phase.len() && phase[j + 1] < p {
            j += 1;
        }
        let v = if p <= phase[0] {
            values[0]
        } else if j + 1 >= phase.len() {
            values[phase.len() - 1]
        } else {
            let (p0, p1) = (phase[j], phase[j + 1]);
            if p1 == p0 {
                values[j + 1]
            } else {
                let t = ((p - p0) / (p1 - p0)).clamp(0.0, 1.0);
                values[j] + t * (values[j + 1] - values[j])
            }
        };
        out.push(v);
    }
    Ok(out)
}

/// Per-bin mean absolute error across trials, with standard error
/// `sd / sqrt(trials)` (sample sd; zero for a single trial).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCurve {
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

impl PhaseCurve {
    /// Average of `mean` over bins in swing.
    pub fn swing_mean(&self) -> f64 {
        let phases = bin_phases(self.mean.len());
        let swing: Vec<f64> = self
            .mean
            .iter()
            .zip(&phases)
            .filter(|(_, &p)| is_swing(p))
            .map(|(v, _)| *v)
            .collect();
        swing.iter().sum::<f64>() / swing.len() as f64
    }
}

/// One trial's absolute-error trace: phase in percent and `|y_hat - y|`.
pub struct ErrorTrace<'a> {
    pub phase: &'a [f64],
    pub abs_error: Vec<f64>,
}

pub fn phase_mae_curve(traces: &[ErrorTrace<'_>], n_bins: usize) -> Result<PhaseCurve> {
    if traces.is_empty() {
        return Err(Error::Evaluation("phase curve needs at least one trial".into()));
    }
    let binned = traces
        .iter()
        .map(|t| resample(t.phase, &t.abs_error, n_bins))
        .collect::<Result<Vec<_>>>()?;
    let k = binned.len() as f64;
    let mut mean = vec![0.0; n_bins];
    let mut se = vec![0.0; n_bins];
    for b in 0..n_bins {
        let m = binned.iter().map(|c| c[b]).sum::<f64>() / k;
        mean[b] = m;
        if binned.len() > 1 {
            let var = binned.iter().map(|c| (c[b] - m) * (c[b] - m)).sum::<f64>() / (k - 1.0);
            se[b] = var.sqrt() / k.sqrt();
        }
    }
    Ok(PhaseCurve { mean, se })
}
