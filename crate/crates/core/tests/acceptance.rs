//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero only when a criterion outside `KNOWN_UNATTAINABLE` fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use ankle_shared::baselines::{kernel_matrix, linear_fit, residual_correlations, svr_fit, SolverOptions, SvrModel, SvrParams};
use ankle_shared::eval::{r2_score, rmse, run_loocv, EvalConfig, EvalReport, ModelSpec};
use ankle_shared::gait_data::{loo_splits, LocomotionMode};
use ankle_shared::model::{gradient_check, GradCheckConfig};
use ankle_shared::rng::SplitMix64;
use ankle_shared::signal::{build_features, lowpass_zero_phase, spectral_energy_fraction, ButterworthFilter, PreprocessConfig};
use ankle_shared::synth::{generate, SynthConfig};

/// The literal analog magnitude cannot be met by a bilinear-transform
/// design; see the README.
const KNOWN_UNATTAINABLE: &[u32] = &[2];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ankle")
}

fn run_cli(args: &[&str]) -> std::process::Output {
    let out = Command::new(bin()).args(args).output().expect("binary runs");
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn c1_gradient_check() -> Outcome {
    let cfg = GradCheckConfig::default();
    let start = Instant::now();
    let report = gradient_check(&cfg).expect("gradient check runs");
    let secs = start.elapsed().as_secs_f64();
    let min_checked = report.layers.iter().map(|l| l.checked).min().unwrap_or(0);
    let ok = cfg.layer_dims == [6, 100, 100, 100, 2]
        && cfg.batch_rows == 8
        && cfg.step == 1e-5
        && report.max_rel_error() < 1e-4
        && report.passed()
        && min_checked >= 50
        && secs < 10.0;
    outcome(
        ok,
        format!("max_rel_err {:.3e}, min {min_checked} params/layer, {secs:.2} s", report.max_rel_error()),
    )
}

/// Cascade response evaluated directly from the section coefficients.
fn cascade_magnitude(filter: &ButterworthFilter, f: f64) -> f64 {
    let w = 2.0 * PI * f / filter.sample_rate_hz();
    let (c1, s1) = (w.cos(), -w.sin());
    let (c2, s2) = ((2.0 * w).cos(), -(2.0 * w).sin());
    let mut mag = 1.0;
    for s in filter.sections() {
        let num = (s.b0 + s.b1 * c1 + s.b2 * c2, s.b1 * s1 + s.b2 * s2);
        let den = (1.0 + s.a1 * c1 + s.a2 * c2, s.a1 * s1 + s.a2 * s2);
        mag *= num.0.hypot(num.1) / den.0.hypot(den.1);
    }
    mag
}

fn c2_filter_response() -> Outcome {
    let fs = 200.0;
    let filter = ButterworthFilter::lowpass(4, 6.0, fs).unwrap();
    let probes: Vec<f64> = (1..=20).map(|i| 0.5 * i as f64).collect();
    let analog = |f: f64| (1.0 + (f / 6.0).powi(8)).powf(-0.5);
    let warped = |f: f64| {
        let r = (PI * f / fs).tan() / (PI * 6.0 / fs).tan();
        (1.0 + r.powi(8)).powf(-0.5)
    };
    let dev_analog = probes.iter().map(|&f| (cascade_magnitude(&filter, f) - analog(f)).abs()).fold(0.0, f64::max);
    let dev_warped = probes.iter().map(|&f| (cascade_magnitude(&filter, f) - warped(f)).abs()).fold(0.0, f64::max);

    // 6 Hz sine over 10 s; amplitude by projection over 30 whole periods mid-signal.
    let n = 2000;
    let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * 6.0 * i as f64 / fs).sin()).collect();
    let y = lowpass_zero_phase(&x, &filter).unwrap();
    let (lo, hi) = (500, 1500);
    let (mut a, mut b) = (0.0, 0.0);
    for i in lo..hi {
        let ph = 2.0 * PI * 6.0 * i as f64 / fs;
        a += y[i] * ph.sin();
        b += y[i] * ph.cos();
    }
    let amp = 2.0 * a.hypot(b) / (hi - lo) as f64;
    let ok = dev_analog < 1e-6 && (amp - 0.5).abs() <= 0.02;
    outcome(
        ok,
        format!(
            "max |H|-(1+(f/6)^8)^-1/2 over 0.5..10 Hz = {dev_analog:.3e} (needs 1e-6); vs prewarped bilinear form {dev_warped:.1e}; zero-phase 6 Hz gain {amp:.4}"
        ),
    )
}

fn c3_metrics() -> Outcome {
    let r2 = r2_score(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0]).unwrap();
    let e = rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
    let mut rng = SplitMix64::new(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = 3 + rng.below(40);
        let y: Vec<f64> = (0..n).map(|_| rng.uniform(-5.0, 5.0)).collect();
        let p: Vec<f64> = y.iter().map(|v| v + rng.standard_normal()).collect();
        let scale = rng.uniform(0.1, 10.0) * if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
        let shift = rng.uniform(-10.0, 10.0);
        let t = |v: &[f64]| v.iter().map(|x| scale * x + shift).collect::<Vec<_>>();
        let base = r2_score(&y, &p).unwrap();
        let moved = r2_score(&t(&y), &t(&p)).unwrap();
        worst = worst.max((base - moved).abs());
    }
    let ok = r2 == 0.5 && (e - 12.5f64.sqrt()).abs() < 1e-12 && worst < 1e-12;
    outcome(ok, format!("r2 {r2}, rmse {e}, affine drift {worst:.1e} over 100 cases"))
}

fn c4_loo_protocol() -> Outcome {
    let ds = generate(&SynthConfig::default()).unwrap();
    let splits = loo_splits(&ds).unwrap();
    let mut held: BTreeMap<LocomotionMode, usize> = BTreeMap::new();
    let mut seen = std::collections::BTreeSet::new();
    let mut exact = true;
    for s in &splits {
        *held.entry(s.held_out.mode()).or_default() += 1;
        exact &= seen.insert(s.held_out.trial_id().to_string());
        exact &= s.train.len() == ds.len() - 1 && s.train.iter().all(|t| t.trial_id() != s.held_out.trial_id());
    }
    exact &= seen.len() == ds.len();
    let counts: Vec<usize> = LocomotionMode::ALL.iter().map(|m| held.get(m).copied().unwrap_or(0)).collect();
    let ok = splits.len() == 41 && counts == [10, 8, 8, 8, 7] && exact;
    outcome(ok, format!("{} folds, held-out per mode {counts:?}, coverage exact: {exact}", splits.len()))
}

fn c5_linear_recovery() -> Outcome {
    let cfg = SynthConfig {
        linear_mode: true,
        noise_std_deg: 0.0,
        ..SynthConfig::default()
    };
    let ds = generate(&cfg).unwrap();
    let report = run_loocv(&ds, ModelSpec::Linear, &EvalConfig::default()).unwrap();
    let min_r2 = report.folds.iter().map(|f| f.r2.theta.min(f.r2.tau)).fold(1.0, f64::min);

    let pre = PreprocessConfig::default();
    let mut worst_orth = 0.0f64;
    for split in loo_splits(&ds).unwrap() {
        let train = build_features(split.train.iter().copied(), &pre, None).unwrap();
        let model = linear_fit(&train.inputs, &train.targets).unwrap();
        for k in 0..2 {
            let c = residual_correlations(&model, &train.inputs, &train.targets, k);
            worst_orth = c.iter().fold(worst_orth, |m, v| m.max(v.abs()));
        }
    }
    let ok = report.folds.len() == 41 && min_r2 >= 0.999 && worst_orth < 1e-8;
    outcome(ok, format!("min per-fold R2 {min_r2:.6}, max |X^T r| {worst_orth:.2e}"))
}

/// Projected gradient on the 2n-variable epsilon-SVR dual; projection onto
/// `{0 <= a <= C, s^T a = 0}` by bisection on the multiplier.
fn brute_force_dual(x: &[Vec<f64>], y: &[f64], p: SvrParams) -> f64 {
    let n = x.len();
    let m = 2 * n;
    let k = kernel_matrix(x, p.gamma);
    let s = |t: usize| if t < n { 1.0 } else { -1.0 };
    let q = |a: usize, b: usize| s(a) * s(b) * k[(a % n) * n + b % n];
    let lin: Vec<f64> = (0..m).map(|t| if t < n { p.epsilon - y[t] } else { p.epsilon + y[t - n] }).collect();
    let project = |z: &[f64]| -> Vec<f64> {
        let at = |lam: f64| -> Vec<f64> { (0..m).map(|t| (z[t] - lam * s(t)).clamp(0.0, p.c)).collect() };
        let g = |lam: f64| -> f64 { at(lam).iter().enumerate().map(|(t, v)| s(t) * v).sum() };
        let (mut lo, mut hi) = (-1e6, 1e6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(0.5 * (lo + hi))
    };
    let step = 1.0 / (2.0 * n as f64);
    let mut a = vec![0.0; m];
    for _ in 0..20_000 {
        let grad: Vec<f64> = (0..m).map(|t| (0..m).map(|u| q(t, u) * a[u]).sum::<f64>() + lin[t]).collect();
        let z: Vec<f64> = (0..m).map(|t| a[t] - step * grad[t]).collect();
        a = project(&z);
    }
    0.5 * (0..m).map(|t| (0..m).map(|u| a[t] * q(t, u) * a[u]).sum::<f64>()).sum::<f64>()
        + (0..m).map(|t| lin[t] * a[t]).sum::<f64>()
}

/// Largest KKT violation: zero coefficients inside the tube, bounded ones
/// outside it, free ones on its edge.
fn kkt_violation(model: &SvrModel, x: &[Vec<f64>], y: &[f64]) -> f64 {
    let (c, eps) = (model.params.c, model.params.epsilon);
    let mut worst = 0.0f64;
    for (xi, yi) in x.iter().zip(y) {
        let coef = model
            .support_vectors
            .iter()
            .position(|sv| sv == xi)
            .map_or(0.0, |k| model.coefficients[k]);
        let err = (model.predict(xi) - yi).abs();
        let v = if coef == 0.0 {
            err - eps
        } else if (coef.abs() - c).abs() < 1e-12 {
            eps - err
        } else {
            (err - eps).abs()
        };
        worst = worst.max(v);
    }
    worst
}

fn c6_svr() -> Outcome {
    let params = SvrParams { c: 10.0, epsilon: 0.1, gamma: 1.0 };
    let (mut worst_obj, mut worst_kkt) = (0.0f64, 0.0f64);
    let mut all_converged = true;
    for seed in 0..10u64 {
        let mut rng = SplitMix64::new(1000 + seed);
        let n = 5 + rng.below(4);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..2).map(|_| rng.uniform(-1.0, 1.0)).collect()).collect();
        let y: Vec<f64> = x.iter().map(|r| (2.0 * r[0]).sin() + r[1] * r[1] + 0.3 * rng.standard_normal()).collect();
        let model = svr_fit(&x, &y, params, SolverOptions::default()).unwrap();
        all_converged &= model.converged;
        worst_obj = worst_obj.max((model.dual_objective - brute_force_dual(&x, &y, params)).abs());
        worst_kkt = worst_kkt.max(kkt_violation(&model, &x, &y));
    }
    let ok = all_converged && worst_obj < 1e-3 && worst_kkt <= 1e-3;
    outcome(ok, format!("max dual gap {worst_obj:.2e}, max KKT violation {worst_kkt:.2e}"))
}

fn synth_default_data(dir: &Path) -> PathBuf {
    let data = dir.join("data");
    let out = run_cli(&["synth", "--out", data.to_str().unwrap()]);
    assert!(out.status.success(), "synth failed");
    data
}

fn c7_and_c10_mlp(dir: &Path) -> (Outcome, Outcome) {
    let data = synth_default_data(dir);
    let out = dir.join("mlp");
    let start = Instant::now();
    let res = run_cli(&["loocv", "--data", data.to_str().unwrap(), "--model", "mlp", "--out", out.to_str().unwrap()]);
    let secs = start.elapsed().as_secs_f64();
    if !res.status.success() {
        let f = || outcome(false, format!("loocv exited with {:?}", res.status.code()));
        return (f(), f());
    }
    let report = EvalReport::load(&out.join("report.json")).unwrap();
    let min_theta = report.modes.values().map(|s| s.r2_mean.theta).fold(1.0, f64::min);
    let min_tau = report.modes.values().map(|s| s.r2_mean.tau).fold(1.0, f64::min);
    let c7 = outcome(
        report.folds.len() == 41 && report.modes.len() == 5 && min_theta >= 0.90 && min_tau >= 0.90 && secs < 600.0,
        format!("min per-mode mean R2 theta {min_theta:.4} tau {min_tau:.4}, {} folds in {secs:.1} s", report.folds.len()),
    );
    let swing: Vec<(LocomotionMode, f64)> = report
        .modes
        .iter()
        .map(|(m, s)| (*m, s.phase_mae.curve(1).swing_mean()))
        .collect();
    let worst = swing.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    let c10 = outcome(
        report.modes.len() == 5 && worst < 1.0,
        format!(
            "swing tau MAE per mode [{}] Nm",
            swing.iter().map(|(m, v)| format!("{m} {v:.3}")).collect::<Vec<_>>().join(", ")
        ),
    );
    (c7, c10)
}

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn c8_determinism(dir: &Path) -> Outcome {
    // Reduced workload: two trials per mode, short training.
    let cfg = dir.join("small.json");
    std::fs::write(
        &cfg,
        r#"{"trials_per_mode": {"NormalWalk": 2, "StairAscent": 2, "StairDescent": 2, "SlopeAscent": 2, "SlopeDescent": 2}, "epochs": 5}"#,
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let data = dir.join("small_data");
    assert!(run_cli(&["synth", "--config", cfg, "--out", data.to_str().unwrap()]).status.success());
    let mut trees = Vec::new();
    for (name, jobs) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let out = dir.join(format!("cmp_{name}"));
        let res = run_cli(&["--jobs", jobs, "compare", "--config", cfg, "--data", data.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        if !res.status.success() {
            return outcome(false, format!("compare run {name} exited with {:?}", res.status.code()));
        }
        trees.push(files_under(&out));
    }
    let n_files = trees[0].len();
    let expected = 1 + 3 * (2 + 10);
    let repeat_equal = trees[0] == trees[1];
    let jobs_equal = trees[0] == trees[2];
    outcome(
        repeat_equal && jobs_equal && n_files == expected,
        format!("{n_files} files; repeat identical: {repeat_equal}; --jobs 4 identical to --jobs 1: {jobs_equal}"),
    )
}

fn c9_spectral() -> Outcome {
    let ds = generate(&SynthConfig::default()).unwrap();
    let mut worst = 1.0f64;
    let mut checked = 0;
    for t in ds.trials() {
        assert_eq!(t.sample_rate_hz(), 200.0);
        for s in [t.theta_hip(), t.theta_knee(), t.theta_ankle()] {
            worst = worst.min(spectral_energy_fraction(s, 200.0, 6.0).unwrap());
            checked += 1;
        }
    }
    outcome(worst >= 0.95, format!("min energy fraction below 6 Hz {worst:.5} over {checked} signals"))
}

fn main() {
    // `cargo test -- --list` and filters are not meaningful for this target.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "gradient check", c1_gradient_check()),
        (2, "filter response", c2_filter_response()),
        (3, "metric hand cases", c3_metrics()),
        (4, "LOO protocol", c4_loo_protocol()),
        (5, "linear recovery", c5_linear_recovery()),
        (6, "SVR correctness", c6_svr()),
    ];
    let (c7, c10) = c7_and_c10_mlp(dir.path());
    results.push((7, "MLP end to end", c7));
    results.push((8, "determinism", c8_determinism(dir.path())));
    results.push((9, "spectral premise", c9_spectral()));
    results.push((10, "swing moment error", c10));
    results.sort_by_key(|r| r.0);

    let mut unexpected = 0;
    for (id, name, o) in &results {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        let note = if !o.passed && KNOWN_UNATTAINABLE.contains(id) {
            " [known unattainable]"
        } else {
            ""
        };
        println!("criterion {id:>2} {tag} {name}: {}{note}", o.detail);
        if !o.passed && !KNOWN_UNATTAINABLE.contains(id) {
            unexpected += 1;
        }
    }
    let passed = results.iter().filter(|r| r.2.passed).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if unexpected > 0 {
        std::process::exit(1);
    }
}
