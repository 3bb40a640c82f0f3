//! Command-line front end: `synth`, `loocv`, `gradcheck` and `compare`.
//!
//! Settings come from an optional flat JSON file ([`RunConfig`]); flags
//! override the file. Exit codes: 0 success, 1 runtime or data failure,
//! 2 usage or configuration error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::baselines::{SolverOptions, SvrGrid, SvrParams};
use crate::error::{Error, Result};
use crate::eval::{emit_report, merged_summary_csv, run_loocv, EvalConfig, EvalReport, ModelSpec, NormalizationPolicy};
use crate::fsutil::write_atomic;
use crate::gait_data::{GaitDataset, LocomotionMode};
use crate::model::{gradient_check, GradCheckConfig, TrainConfig};
use crate::signal::PreprocessConfig;
use crate::synth::{generate, SynthConfig};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (config schema 1)");

#[derive(Debug, Parser)]
#[command(name = "ankle", version = VERSION, about = "Ankle angle and moment estimation from hip and knee kinematics")]
pub struct Cli {
    /// Worker threads for parallel folds (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic gait trials as CSV files plus manifest.json.
    Synth(SynthArgs),
    /// Leave-one-trial-out evaluation of one model.
    Loocv(LoocvArgs),
    /// Finite-difference check of the network gradients.
    Gradcheck(GradcheckArgs),
    /// Evaluate the network and both baselines on identical folds.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct LoocvArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "mlp")]
    pub model: ModelSpec,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fit input normalization on all trials before splitting.
    #[arg(long)]
    pub paper_faithful_norm: bool,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, hide = true)]
    pub negate_gradient: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub paper_faithful_norm: bool,
}

/// Flat run configuration. Every field is optional in the file; missing
/// fields take the documented defaults, unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    // synthetic data
    pub seed: u64,
    pub trials_per_mode: BTreeMap<LocomotionMode, usize>,
    pub samples_per_trial: usize,
    pub sample_rate_hz: f64,
    pub noise_std_deg: f64,
    pub speed_jitter: f64,
    pub linear_mode: bool,
    // preprocessing
    pub filter_order: usize,
    pub cutoff_hz: f64,
    pub filter_targets: bool,
    // network and training
    pub layer_dims: Vec<usize>,
    pub init_seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub l2_penalty: f64,
    pub batch_size: usize,
    pub shuffle_seed: u64,
    // baselines
    pub svr: Option<SvrParams>,
    pub svr_grid: Option<SvrGrid>,
    pub svr_tolerance: f64,
    pub svr_max_iter: usize,
    // evaluation
    pub normalization: NormalizationPolicy,
    pub phase_bins: usize,
    pub gradcheck_seed: u64,
    // paths
    pub data_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let synth = SynthConfig::default();
        let eval = EvalConfig::default();
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            seed: synth.seed,
            trials_per_mode: synth.trials_per_mode,
            samples_per_trial: synth.samples_per_trial,
            sample_rate_hz: synth.sample_rate_hz,
            noise_std_deg: synth.noise_std_deg,
            speed_jitter: synth.speed_jitter,
            linear_mode: synth.linear_mode,
            filter_order: eval.preprocess.filter_order,
            cutoff_hz: eval.preprocess.cutoff_hz,
            filter_targets: eval.preprocess.filter_targets,
            layer_dims: eval.layer_dims,
            init_seed: eval.init_seed,
            epochs: eval.train.epochs,
            learning_rate: eval.train.learning_rate,
            momentum: eval.train.momentum,
            l2_penalty: eval.train.l2_penalty,
            batch_size: eval.train.batch_size,
            shuffle_seed: eval.train.shuffle_seed,
            svr: eval.svr,
            svr_grid: eval.svr_grid,
            svr_tolerance: eval.svr_solver.tolerance,
            svr_max_iter: eval.svr_solver.max_iter,
            normalization: eval.normalization,
            phase_bins: eval.phase_bins,
            gradcheck_seed: GradCheckConfig::default().seed,
            data_dir: None,
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if cfg.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "{}: schema_version {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
                path.display(),
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            seed: self.seed,
            trials_per_mode: self.trials_per_mode.clone(),
            samples_per_trial: self.samples_per_trial,
            sample_rate_hz: self.sample_rate_hz,
            noise_std_deg: self.noise_std_deg,
            speed_jitter: self.speed_jitter,
            linear_mode: self.linear_mode,
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            preprocess: PreprocessConfig {
                filter_order: self.filter_order,
                cutoff_hz: self.cutoff_hz,
                filter_targets: self.filter_targets,
            },
            layer_dims: self.layer_dims.clone(),
            init_seed: self.init_seed,
            train: TrainConfig {
                epochs: self.epochs,
                learning_rate: self.learning_rate,
                momentum: self.momentum,
                l2_penalty: self.l2_penalty,
                batch_size: self.batch_size,
                shuffle_seed: self.shuffle_seed,
            },
            svr: self.svr,
            svr_grid: self.svr_grid.clone(),
            svr_solver: SolverOptions {
                tolerance: self.svr_tolerance,
                max_iter: self.svr_max_iter,
            },
            normalization: self.normalization,
            phase_bins: self.phase_bins,
        }
    }

    pub fn gradcheck_config(&self) -> GradCheckConfig {
        GradCheckConfig {
            layer_dims: self.layer_dims.clone(),
            seed: self.gradcheck_seed,
            l2_penalty: self.l2_penalty,
            ..GradCheckConfig::default()
        }
    }
}

fn required(flag: Option<&PathBuf>, fallback: Option<&PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or(fallback)
        .cloned()
        .ok_or_else(|| Error::Config(format!("--{name} is required (or set {name}_dir in the config file)")))
}

/// Exit code for an error: 2 for configuration problems, 1 otherwise.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Fold { source, .. } => exit_code(source),
        _ => 1,
    }
}

/// Parses the process arguments, runs the command and reports errors on
/// stderr.
pub fn main_entry() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> Result<u8> {
    match cli.jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n as usize)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?;
            pool.install(|| dispatch(&cli.command))
        }
        None => dispatch(&cli.command),
    }
}

fn dispatch(command: &Command) -> Result<u8> {
    match command {
        Command::Synth(a) => cmd_synth(a),
        Command::Loocv(a) => cmd_loocv(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    trial_id: &'a str,
    mode: LocomotionMode,
    samples: usize,
    file: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    schema_version: u32,
    config: &'a SynthConfig,
    total_samples: usize,
    trials: Vec<ManifestEntry<'a>>,
}

fn cmd_synth(args: &SynthArgs) -> Result<u8> {
    let run = RunConfig::load_or_default(args.config.as_deref())?;
    let out = required(args.out.as_ref(), run.out_dir.as_ref(), "out")?;
    let mut cfg = run.synth_config();
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let dataset = generate(&cfg)?;
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let mut entries = Vec::with_capacity(dataset.len());
    for trial in dataset.trials() {
        let file = format!("{}.csv", trial.trial_id());
        write_atomic(&out.join(&file), trial.to_csv_string().as_bytes())?;
        entries.push(ManifestEntry {
            trial_id: trial.trial_id(),
            mode: trial.mode(),
            samples: trial.len(),
            file,
        });
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        schema_version: CONFIG_SCHEMA_VERSION,
        config: &cfg,
        total_samples: dataset.total_samples(),
        trials: entries,
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    write_atomic(&out.join("manifest.json"), json.as_bytes())?;
    println!("wrote {} trials ({} samples) to {}", dataset.len(), dataset.total_samples(), out.display());
    Ok(0)
}

fn eval_setup(
    config: Option<&Path>,
    data: Option<&PathBuf>,
    out: Option<&PathBuf>,
    paper_faithful_norm: bool,
) -> Result<(GaitDataset, EvalConfig, PathBuf)> {
    let run = RunConfig::load_or_default(config)?;
    let data = required(data, run.data_dir.as_ref(), "data")?;
    let out = required(out, run.out_dir.as_ref(), "out")?;
    let mut eval = run.eval_config();
    if paper_faithful_norm {
        eval.normalization = NormalizationPolicy::Pooled;
    }
    eval.validate()?;
    let dataset = GaitDataset::load_dir(&data)?;
    Ok((dataset, eval, out))
}

fn print_summary(report: &EvalReport) {
    println!("{} ({} folds)", report.model, report.folds.len());
    for (mode, s) in &report.modes {
        println!(
            "  {mode:<13} R2 theta {:.4} tau {:.4}  RMSE theta {:.3} deg tau {:.3} Nm",
            s.r2_mean.theta, s.r2_mean.tau, s.rmse_mean.theta, s.rmse_mean.tau
        );
    }
}

fn cmd_loocv(args: &LoocvArgs) -> Result<u8> {
    let (dataset, eval, out) = eval_setup(args.config.as_deref(), args.data.as_ref(), args.out.as_ref(), args.paper_faithful_norm)?;
    let report = run_loocv(&dataset, args.model, &eval)?;
    emit_report(&report, &out)?;
    print_summary(&report);
    Ok(0)
}

fn cmd_compare(args: &CompareArgs) -> Result<u8> {
    let (dataset, eval, out) = eval_setup(args.config.as_deref(), args.data.as_ref(), args.out.as_ref(), args.paper_faithful_norm)?;
    let mut reports = Vec::with_capacity(ModelSpec::ALL.len());
    for model in ModelSpec::ALL {
        let report = run_loocv(&dataset, model, &eval)?;
        log::info!("{model} fold order: {}", report.fold_order.join(","));
        if let Some(first) = reports.first().map(|r: &EvalReport| &r.fold_order) {
            if *first != report.fold_order {
                return Err(Error::Evaluation(format!("{model} used a different fold order")));
            }
        }
        emit_report(&report, &out.join(model.as_str()))?;
        print_summary(&report);
        reports.push(report);
    }
    write_atomic(&out.join("summary.csv"), merged_summary_csv(&reports).as_bytes())?;
    Ok(0)
}

fn cmd_gradcheck(args: &GradcheckArgs) -> Result<u8> {
    let run = RunConfig::load_or_default(args.config.as_deref())?;
    let mut cfg = run.gradcheck_config();
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.negate_analytic = args.negate_gradient;
    let report = gradient_check(&cfg)?;
    let checked: usize = report.layers.iter().map(|l| l.checked).sum();
    let verdict = if report.passed() { "PASS" } else { "FAIL" };
    println!(
        "{verdict} max_rel_err {:e} (tolerance {:e}, {checked} parameters)",
        report.max_rel_error(),
        report.tolerance
    );
    for l in &report.layers {
        log::info!("layer {}: {} checked, {} failed, max {:e}", l.layer, l.checked, l.failed, l.max_rel_error);
    }
    Ok(if report.passed() { 0 } else { 1 })
}
