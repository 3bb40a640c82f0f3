use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::loocv::{FoldResult, ModelSpec};
use crate::eval::metrics::{mean_sd, r2_score, rmse};
use crate::eval::phase::{bin_phases, phase_mae_curve, ErrorTrace, PhaseCurve, STANCE_END_PERCENT};
use crate::fsutil::write_atomic;
use crate::gait_data::LocomotionMode;
use crate::signal::TARGET_NAMES;

/// One value per target: ankle angle and ankle moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetPair {
    pub theta: f64,
    pub tau: f64,
}

impl TargetPair {
    pub fn new(theta: f64, tau: f64) -> Self {
        Self { theta, tau }
    }

    pub fn get(&self, k: usize) -> f64 {
        match k {
            0 => self.theta,
            1 => self.tau,
            _ => panic!("target index {k} out of range"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMae {
    pub theta: Vec<f64>,
    pub tau: Vec<f64>,
    pub se_theta: Vec<f64>,
    pub se_tau: Vec<f64>,
}

impl PhaseMae {
    pub fn curve(&self, k: usize) -> PhaseCurve {
        match k {
            0 => PhaseCurve { mean: self.theta.clone(), se: self.se_theta.clone() },
            _ => PhaseCurve { mean: self.tau.clone(), se: self.se_tau.clone() },
        }
    }
}

/// Metrics over all rows of a mode scored at once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledMetrics {
    pub rows: usize,
    pub r2: TargetPair,
    pub rmse: TargetPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub n_trials: usize,
    /// Mean and sample standard deviation over held-out trials.
    pub r2_mean: TargetPair,
    pub r2_sd: TargetPair,
    pub rmse_mean: TargetPair,
    pub rmse_sd: TargetPair,
    pub pooled: PooledMetrics,
    pub phase_mae: PhaseMae,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: ModelSpec,
    pub config: serde_json::Value,
    /// Held-out trial ids in evaluation order.
    pub fold_order: Vec<String>,
    pub folds: Vec<FoldResult>,
    pub modes: BTreeMap<LocomotionMode, ModeSummary>,
    /// Modes without any trial in the dataset.
    pub missing_modes: Vec<LocomotionMode>,
    /// Mean per-trial metrics over all folds.
    pub overall_r2_mean: TargetPair,
    pub overall_rmse_mean: TargetPair,
    pub pooled_rows: usize,
}

fn pair_of(f: impl Fn(usize) -> f64) -> TargetPair {
    TargetPair::new(f(0), f(1))
}

impl EvalReport {
    pub fn from_folds(model: ModelSpec, config: serde_json::Value, folds: Vec<FoldResult>, phase_bins: usize) -> Result<Self> {
        if folds.is_empty() {
            return Err(Error::Evaluation("report needs at least one fold".into()));
        }
        let mut modes = BTreeMap::new();
        let mut missing_modes = Vec::new();
        for mode in LocomotionMode::ALL {
            let mut of_mode: Vec<&FoldResult> = folds.iter().filter(|f| f.mode == mode).collect();
            if of_mode.is_empty() {
                missing_modes.push(mode);
                continue;
            }
            of_mode.sort_by(|a, b| a.trial_id.cmp(&b.trial_id));
            modes.insert(mode, summarize_mode(&of_mode, phase_bins)?);
        }
        let overall = |get: fn(&FoldResult) -> TargetPair| {
            pair_of(|k| folds.iter().map(|f| get(f).get(k)).sum::<f64>() / folds.len() as f64)
        };
        Ok(Self {
            model,
            config,
            fold_order: folds.iter().map(|f| f.trial_id.clone()).collect(),
            overall_r2_mean: overall(|f| f.r2),
            overall_rmse_mean: overall(|f| f.rmse),
            pooled_rows: folds.iter().map(|f| f.truth.len()).sum(),
            folds,
            modes,
            missing_modes,
        })
    }

    /// `mode,target,r2_mean,r2_sd,rmse_mean,rmse_sd`, one row per mode and target.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("mode,target,r2_mean,r2_sd,rmse_mean,rmse_sd\n");
        self.write_summary_rows(&mut out, None);
        out
    }

    fn write_summary_rows(&self, out: &mut String, prefix: Option<&str>) {
        for (mode, s) in &self.modes {
            for (k, target) in TARGET_NAMES.iter().enumerate() {
                if let Some(p) = prefix {
                    let _ = write!(out, "{p},");
                }
                let _ = writeln!(
                    out,
                    "{mode},{target},{:.6},{:.6},{:.6},{:.6}",
                    s.r2_mean.get(k),
                    s.r2_sd.get(k),
                    s.rmse_mean.get(k),
                    s.rmse_sd.get(k)
                );
            }
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn summarize_mode(folds: &[&FoldResult], phase_bins: usize) -> Result<ModeSummary> {
    let stat = |get: fn(&FoldResult) -> TargetPair| -> (TargetPair, TargetPair) {
        let (m0, s0) = mean_sd(&folds.iter().map(|f| get(f).theta).collect::<Vec<_>>());
        let (m1, s1) = mean_sd(&folds.iter().map(|f| get(f).tau).collect::<Vec<_>>());
        (TargetPair::new(m0, m1), TargetPair::new(s0, s1))
    };
    let (r2_mean, r2_sd) = stat(|f| f.r2);
    let (rmse_mean, rmse_sd) = stat(|f| f.rmse);

    let column = |k: usize, pred: bool| -> Vec<f64> {
        folds
            .iter()
            .flat_map(|f| if pred { &f.predicted } else { &f.truth }.iter().map(move |r| r[k]))
            .collect()
    };
    let pooled_r2 = |k: usize| r2_score(&column(k, false), &column(k, true));
    let pooled_rmse = |k: usize| rmse(&column(k, false), &column(k, true));
    let pooled = PooledMetrics {
        rows: folds.iter().map(|f| f.truth.len()).sum(),
        r2: TargetPair::new(pooled_r2(0)?, pooled_r2(1)?),
        rmse: TargetPair::new(pooled_rmse(0)?, pooled_rmse(1)?),
    };

    let curve = |k: usize| -> Result<PhaseCurve> {
        let traces: Vec<ErrorTrace> = folds
            .iter()
            .map(|f| ErrorTrace {
                phase: &f.phase,
                abs_error: f.abs_errors(k),
            })
            .collect();
        phase_mae_curve(&traces, phase_bins)
    };
    let (theta, tau) = (curve(0)?, curve(1)?);
    Ok(ModeSummary {
        n_trials: folds.len(),
        r2_mean,
        r2_sd,
        rmse_mean,
        rmse_sd,
        pooled,
        phase_mae: PhaseMae {
            theta: theta.mean,
            se_theta: theta.se,
            tau: tau.mean,
            se_tau: tau.se,
        },
    })
}

/// Writes `report.json`, `summary.csv` and `phase_mae_<mode>_<target>.svg`
/// for every mode present. Returns the written paths.
pub fn emit_report(report: &EvalReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: String, contents: &[u8]| -> Result<()> {
        let path = out_dir.join(name);
        write_atomic(&path, contents)?;
        written.push(path);
        Ok(())
    };
    put("report.json".into(), report.to_json().as_bytes())?;
    put("summary.csv".into(), report.summary_csv().as_bytes())?;
    for (mode, summary) in &report.modes {
        for (k, target) in TARGET_NAMES.iter().enumerate() {
            let svg = phase_svg(report.model, *mode, k, &summary.phase_mae.curve(k));
            put(format!("phase_mae_{mode}_{target}.svg"), svg.as_bytes())?;
        }
    }
    Ok(written)
}

/// Summary rows of several reports stacked with a leading `model` column.
pub fn merged_summary_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("model,mode,target,r2_mean,r2_sd,rmse_mean,rmse_sd\n");
    for r in reports {
        r.write_summary_rows(&mut out, Some(r.model.as_str()));
    }
    out
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 400.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 52.0;

/// Static line plot of a phase-MAE curve with a shaded +/- one standard
/// error band and a dashed stance/swing divider.
pub fn phase_svg(model: ModelSpec, mode: LocomotionMode, target: usize, curve: &PhaseCurve) -> String {
    let phases = bin_phases(curve.mean.len());
    let top = curve
        .mean
        .iter()
        .zip(&curve.se)
        .map(|(m, s)| m + s)
        .fold(0.0, f64::max);
    let y_max = nice_ceiling(top);
    let pw = SVG_W - MARGIN_L - MARGIN_R;
    let ph = SVG_H - MARGIN_T - MARGIN_B;
    let sx = |p: f64| MARGIN_L + pw * p / 100.0;
    let sy = |v: f64| MARGIN_T + ph * (1.0 - v / y_max);
    let (label, unit) = if target == 0 { ("ankle angle", "deg") } else { ("ankle moment", "Nm") };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{model}: {mode}, {label} MAE</text>"#,
        SVG_W / 2.0
    );

    let band: Vec<String> = phases
        .iter()
        .zip(curve.mean.iter().zip(&curve.se))
        .map(|(p, (m, e))| format!("{:.2},{:.2}", sx(*p), sy(m + e)))
        .chain(
            phases
                .iter()
                .zip(curve.mean.iter().zip(&curve.se))
                .rev()
                .map(|(p, (m, e))| format!("{:.2},{:.2}", sx(*p), sy((m - e).max(0.0)))),
        )
        .collect();
    let _ = writeln!(s, r##"<polygon points="{}" fill="#1f77b4" fill-opacity="0.25" stroke="none"/>"##, band.join(" "));
    let line: Vec<String> = phases
        .iter()
        .zip(&curve.mean)
        .map(|(p, m)| format!("{:.2},{:.2}", sx(*p), sy(*m)))
        .collect();
    let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##, line.join(" "));

    let div = sx(STANCE_END_PERCENT);
    let _ = writeln!(
        s,
        r##"<line x1="{div:.2}" y1="{MARGIN_T:.2}" x2="{div:.2}" y2="{:.2}" stroke="#555" stroke-dasharray="6,4"/>"##,
        MARGIN_T + ph
    );
    let _ = writeln!(s, r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" fill="#555">stance</text>"##, sx(30.0), MARGIN_T + 14.0);
    let _ = writeln!(s, r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" fill="#555">swing</text>"##, sx(80.0), MARGIN_T + 14.0);

    // axes and ticks
    let _ = writeln!(
        s,
        r#"<path d="M{MARGIN_L:.2},{MARGIN_T:.2} V{:.2} H{:.2}" fill="none" stroke="black"/>"#,
        MARGIN_T + ph,
        MARGIN_L + pw
    );
    for i in 0..=5 {
        let p = 20.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{p:.0}</text>"#,
            sx(p),
            MARGIN_T + ph + 16.0
        );
        let v = y_max * i as f64 / 5.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#, MARGIN_L - 6.0, sy(v) + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">gait phase (%)</text>"#,
        MARGIN_L + pw / 2.0,
        SVG_H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">MAE ({unit})</text>"#,
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0
    );
    s.push_str("</svg>\n");
    s
}

/// Smallest value of the form `{1, 2, 5} * 10^k` that is at least `v`.
fn nice_ceiling(v: f64) -> f64 {
    if !(v > 0.0) || !v.is_finite() {
        return 1.0;
    }
    let base = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * base)
        .find(|&c| c >= v)
        .unwrap_or(10.0 * base)
}
