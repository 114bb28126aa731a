//! `gon`: train, score and inspect generative optimization networks.

mod config;
mod svg;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gon_core::data::{save_csv, synth_faults, synth_gaussian, GaussianConfig, SynthFaultConfig};
use gon_core::eval::{confusion_metrics, gan_param_count, memory_estimate, roc_auc, DetectionReport};
use gon_core::gon::generate_batch;
use gon_core::neural::{load_checkpoint, save_checkpoint};
use gon_core::pipeline::{
    f1_per_gb_sweep, fit_detector, gaussian_demo, labels_csv, run_experiment, scores_csv, sweep_csv, DatasetSpec,
    Detector, GaussianDemoConfig, SEED_SCORE_TEST,
};
use gon_core::rng::{derive_seed, rng_from_seed};
use gon_core::{
    Activation, ExperimentConfig, GonError, LayerPlan, Matrix, NoiseInit, ReconInit, Result, StopMode, TimeSeries,
};

use crate::config::ConfigFile;

#[derive(Parser, Debug)]
#[command(
    name = "gon",
    version,
    about = "Generative optimization networks and POT anomaly detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a detector on a train split; writes model.gon1 and model.meta.
    Train(TrainCmd),
    /// Score and label a series with a trained detector.
    Detect(DetectCmd),
    /// Train, detect and evaluate in one go; writes the full report.
    Run(RunCmd),
    /// Run one experiment per hidden width and emit the F1/GB table.
    Sweep(SweepCmd),
    /// Draw samples from a trained discriminator by ascent from noise.
    Generate(GenerateCmd),
    /// Write a synthetic dataset as CSV.
    Synth(SynthCmd),
    /// Fit a GON to 2-D Gaussian data and plot generated samples.
    GaussianDemo(DemoCmd),
    /// Print a checkpoint's architecture and memory footprint.
    Inspect(InspectCmd),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReconInitArg {
    Input,
    Noise,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StopModeArg {
    Fixed,
    Stochastic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ClipArg {
    None,
    Unit,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NoiseArg {
    Uniform,
    Normal,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ActivationArg {
    Leaky,
    Tanh,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SynthKind {
    Faults,
    Gaussian,
}

#[derive(Args, Debug, Default, Clone)]
struct ModelFlags {
    /// Window length K.
    #[arg(long)]
    window: Option<usize>,
    /// Hidden-layer width.
    #[arg(long)]
    hidden: Option<usize>,
    /// Number of hidden layers.
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long, value_enum)]
    activation: Option<ActivationArg>,
}

#[derive(Args, Debug, Default, Clone)]
struct TrainFlags {
    #[arg(long)]
    epochs: Option<usize>,
    /// Minibatch size m [default: 64].
    #[arg(long)]
    batch: Option<usize>,
    /// Base learning rate [default: 1e-4].
    #[arg(long)]
    lr: Option<f64>,
    /// Decoupled weight decay [default: 1e-5].
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Ascent step size for generation and reconstruction.
    #[arg(long)]
    gamma: Option<f64>,
    /// Ascent iteration cap for generation and reconstruction.
    #[arg(long)]
    gen_iters: Option<usize>,
    /// Convergence tolerance on |Δ log D| for generation and reconstruction.
    #[arg(long)]
    gen_tol: Option<f64>,
    #[arg(long, value_enum)]
    stop_mode: Option<StopModeArg>,
    /// Clip generated samples during training.
    #[arg(long, value_enum)]
    clip: Option<ClipArg>,
}

#[derive(Args, Debug, Default, Clone)]
struct DetectFlags {
    #[arg(long, value_enum)]
    recon_init: Option<ReconInitArg>,
    /// POT risk level q [default: 1e-4].
    #[arg(long)]
    pot_q: Option<f64>,
    /// Tail fraction above the initial POT threshold.
    #[arg(long)]
    pot_level: Option<f64>,
}

#[derive(Args, Debug, Default, Clone)]
struct ExperimentFlags {
    /// Config file (`[section]` / `key = value`); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Train split CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// The train CSV has a trailing label column.
    #[arg(long)]
    labels: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    train: TrainFlags,
    #[command(flatten)]
    detect: DetectFlags,
}

#[derive(Args, Debug)]
struct TrainCmd {
    #[command(flatten)]
    exp: ExperimentFlags,
}

#[derive(Args, Debug)]
struct RunCmd {
    #[command(flatten)]
    exp: ExperimentFlags,
    /// Labeled test split CSV; without --data/--test the synthetic fault trace is used.
    #[arg(long)]
    test: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepCmd {
    #[command(flatten)]
    exp: ExperimentFlags,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Comma-separated hidden widths [default: 32,64,128,256].
    #[arg(long, value_delimiter = ',')]
    widths: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
struct DetectCmd {
    /// Checkpoint written by `train`; `model.meta` is read from the same stem.
    #[arg(long)]
    model: PathBuf,
    /// Series to score.
    #[arg(long)]
    data: PathBuf,
    /// The CSV has a trailing label column; enables the report.
    #[arg(long)]
    labels: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// POT risk level; recomputes the threshold from the stored tail fit.
    #[arg(long)]
    pot_q: Option<f64>,
    /// Batch size used for the memory estimate.
    #[arg(long, default_value_t = 64)]
    batch: usize,
}

#[derive(Args, Debug)]
struct GenerateCmd {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    gen_iters: Option<usize>,
    #[arg(long)]
    gen_tol: Option<f64>,
    #[arg(long, value_enum)]
    stop_mode: Option<StopModeArg>,
    #[arg(long, value_enum)]
    clip: Option<ClipArg>,
    #[arg(long, value_enum, default_value = "uniform")]
    noise: NoiseArg,
}

#[derive(Args, Debug)]
struct SynthCmd {
    #[arg(long, value_enum, default_value = "faults")]
    kind: SynthKind,
    /// Timesteps (faults) or samples (gaussian).
    #[arg(long)]
    n: Option<usize>,
    /// Dimensions of the fault trace.
    #[arg(long)]
    dims: Option<usize>,
    /// Fault amplitude in base-signal standard deviations.
    #[arg(long)]
    magnitude: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DemoCmd {
    /// Number of training samples and of generated samples.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    gen_iters: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
}

#[derive(Args, Debug)]
struct InspectCmd {
    #[arg(long)]
    model: PathBuf,
    /// Batch size used for the memory estimate.
    #[arg(long, default_value_t = 64)]
    batch: usize,
}

fn parse_flag<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| GonError::config(format!("bad value {v:?} for '{key}'")))
}

fn activation_from(name: &str) -> Result<Activation> {
    match name {
        "leaky" | "leaky_relu" => Ok(Activation::default()),
        "tanh" => Ok(Activation::Tanh),
        other => Err(GonError::config(format!("unknown activation {other:?}"))),
    }
}

fn stop_mode_from(name: &str) -> Result<StopMode> {
    match name {
        "fixed" => Ok(StopMode::FixedConvergence),
        "stochastic" => Ok(StopMode::StochasticStop),
        other => Err(GonError::config(format!("unknown stop mode {other:?}"))),
    }
}

fn clip_from(name: &str) -> Result<Option<(f64, f64)>> {
    match name {
        "none" => Ok(None),
        "unit" => Ok(Some((0.0, 1.0))),
        other => Err(GonError::config(format!("unknown clip {other:?}"))),
    }
}

fn recon_init_from(name: &str) -> Result<ReconInit> {
    match name {
        "input" => Ok(ReconInit::Input),
        "noise" => Ok(ReconInit::Noise),
        other => Err(GonError::config(format!("unknown recon init {other:?}"))),
    }
}

fn noise_from(name: &str) -> Result<NoiseInit> {
    match name {
        "uniform" => Ok(NoiseInit::Uniform01),
        "normal" => Ok(NoiseInit::StandardNormal),
        other => Err(GonError::config(format!("unknown noise {other:?}"))),
    }
}

/// Paths and switches resolved alongside the experiment config.
struct Resolved {
    config: ExperimentConfig,
    train_path: Option<PathBuf>,
    test_path: Option<PathBuf>,
    has_labels: bool,
    widths: Option<Vec<usize>>,
}

/// Defaults, then the config file, then flags.
fn resolve(flags: &ExperimentFlags, test: Option<&Path>) -> Result<Resolved> {
    let mut cfg = ExperimentConfig::default();
    let mut synth = SynthFaultConfig::default();
    let mut train_len: Option<usize> = None;
    let mut train_path = None;
    let mut test_path = None;
    let mut has_labels = false;
    let mut widths = None;

    if let Some(path) = &flags.config {
        let mut f = ConfigFile::load(path)?;
        if let Some(v) = f.take("seed")? {
            cfg.seed = v;
        }
        if let Some(v) = f.take_string("out") {
            cfg.out_dir = Some(PathBuf::from(v));
        }
        train_path = f.take_string("data.train").map(PathBuf::from);
        test_path = f.take_string("data.test").map(PathBuf::from);
        if let Some(v) = f.take("data.labels")? {
            has_labels = v;
        }
        if let Some(v) = f.take("synth.n_timesteps")? {
            synth.n_timesteps = v;
        }
        if let Some(v) = f.take("synth.dims")? {
            synth.n_dims = v;
        }
        if let Some(v) = f.take("synth.magnitude")? {
            synth.magnitude = v;
        }
        if let Some(v) = f.take("synth.interarrival_mean")? {
            synth.interarrival_mean = v;
        }
        if let Some(v) = f.take("synth.seed")? {
            synth.seed = v;
        }
        train_len = f.take("synth.train_len")?;
        if let Some(v) = f.take("model.window")? {
            cfg.window = v;
        }
        if let Some(v) = f.take("model.hidden")? {
            cfg.layers.hidden_width = v;
        }
        if let Some(v) = f.take("model.layers")? {
            cfg.layers.hidden_layers = v;
        }
        if let Some(v) = f.take_string("model.activation") {
            cfg.layers.activation = activation_from(&v)?;
        }
        let t = &mut cfg.train;
        if let Some(v) = f.take("train.epochs")? {
            t.epochs = v;
        }
        if let Some(v) = f.take("train.batch")? {
            t.batch_size = v;
        }
        if let Some(v) = f.take("train.lr")? {
            t.lr_schedule.base_lr = v;
        }
        if let Some(v) = f.take("train.min_lr")? {
            t.lr_schedule.min_lr = v;
        }
        if let Some(v) = f.take("train.restart_period")? {
            t.lr_schedule.restart_period_epochs = v;
        }
        if let Some(v) = f.take("train.weight_decay")? {
            t.lr_schedule.weight_decay = v;
        }
        if let Some(v) = f.take("train.gamma")? {
            t.gen_config.gamma = v;
        }
        if let Some(v) = f.take("train.gen_iters")? {
            t.gen_config.max_iters = v;
        }
        if let Some(v) = f.take("train.gen_tol")? {
            t.gen_config.convergence_tol = v;
        }
        if let Some(v) = f.take_string("train.stop_mode") {
            t.gen_config.mode = stop_mode_from(&v)?;
        }
        if let Some(v) = f.take_string("train.clip") {
            t.gen_config.clip = clip_from(&v)?;
        }
        if let Some(v) = f.take_string("train.noise") {
            t.gen_config.noise_init = noise_from(&v)?;
        }
        let r = &mut cfg.recon;
        if let Some(v) = f.take("detect.gamma")? {
            r.gamma = v;
        }
        if let Some(v) = f.take("detect.gen_iters")? {
            r.max_iters = v;
        }
        if let Some(v) = f.take("detect.gen_tol")? {
            r.convergence_tol = v;
        }
        if let Some(v) = f.take_string("detect.recon_init") {
            cfg.recon_init = recon_init_from(&v)?;
        }
        if let Some(v) = f.take("detect.pot_q")? {
            cfg.pot.risk = v;
        }
        if let Some(v) = f.take("detect.pot_level")? {
            cfg.pot.init_level = v;
        }
        if let Some(v) = f.take_string("sweep.widths") {
            widths = Some(
                v.split(',')
                    .map(|w| parse_flag("sweep.widths", w.trim()))
                    .collect::<Result<Vec<usize>>>()?,
            );
        }
        f.finish()?;
    }

    if let Some(v) = flags.seed {
        cfg.seed = v;
    }
    if let Some(v) = &flags.out {
        cfg.out_dir = Some(v.clone());
    }
    if let Some(v) = &flags.data {
        train_path = Some(v.clone());
    }
    if let Some(v) = test {
        test_path = Some(v.to_path_buf());
    }
    has_labels |= flags.labels;
    let m = &flags.model;
    if let Some(v) = m.window {
        cfg.window = v;
    }
    if let Some(v) = m.hidden {
        cfg.layers.hidden_width = v;
    }
    if let Some(v) = m.layers {
        cfg.layers.hidden_layers = v;
    }
    if let Some(v) = m.activation {
        cfg.layers.activation = match v {
            ActivationArg::Leaky => Activation::default(),
            ActivationArg::Tanh => Activation::Tanh,
        };
    }
    let tf = &flags.train;
    let t = &mut cfg.train;
    if let Some(v) = tf.epochs {
        t.epochs = v;
    }
    if let Some(v) = tf.batch {
        t.batch_size = v;
    }
    if let Some(v) = tf.lr {
        t.lr_schedule.base_lr = v;
    }
    if let Some(v) = tf.weight_decay {
        t.lr_schedule.weight_decay = v;
    }
    for g in [&mut t.gen_config, &mut cfg.recon] {
        if let Some(v) = tf.gamma {
            g.gamma = v;
        }
        if let Some(v) = tf.gen_iters {
            g.max_iters = v;
        }
        if let Some(v) = tf.gen_tol {
            g.convergence_tol = v;
        }
        if let Some(v) = tf.stop_mode {
            g.mode = match v {
                StopModeArg::Fixed => StopMode::FixedConvergence,
                StopModeArg::Stochastic => StopMode::StochasticStop,
            };
        }
    }
    if let Some(v) = tf.clip {
        t.gen_config.clip = match v {
            ClipArg::None => None,
            ClipArg::Unit => Some((0.0, 1.0)),
        };
    }
    let df = &flags.detect;
    if let Some(v) = df.recon_init {
        cfg.recon_init = match v {
            ReconInitArg::Input => ReconInit::Input,
            ReconInitArg::Noise => ReconInit::Noise,
        };
    }
    if let Some(v) = df.pot_q {
        cfg.pot.risk = v;
    }
    if let Some(v) = df.pot_level {
        cfg.pot.init_level = v;
    }

    cfg.dataset = match (&train_path, &test_path) {
        (Some(train), Some(test)) => DatasetSpec::Csv {
            train: train.clone(),
            test: test.clone(),
            has_labels,
        },
        (None, None) => {
            let train_len = train_len.unwrap_or(synth.n_timesteps / 2);
            DatasetSpec::Synthetic {
                config: synth,
                train_len,
            }
        }
        (None, Some(_)) => return Err(GonError::config("--test given without --data")),
        // train-only invocations; `run` and `sweep` reject this in check_split
        (Some(train), None) => DatasetSpec::Csv {
            train: train.clone(),
            test: PathBuf::new(),
            has_labels,
        },
    };
    cfg.validate()?;
    Ok(Resolved {
        config: cfg,
        train_path,
        test_path,
        has_labels,
        widths,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| GonError::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| GonError::io(dir, e))
}

fn meta_path(model: &Path) -> PathBuf {
    model.with_extension("meta")
}

fn require_out(cfg: &ExperimentConfig) -> Result<PathBuf> {
    cfg.out_dir.clone().ok_or_else(|| GonError::config("--out is required"))
}

fn print_report(r: &DetectionReport) {
    println!(
        "precision = {:.4}  recall = {:.4}  f1 = {:.4}  f1_macro = {:.4}  auc = {:.4}",
        r.precision, r.recall, r.f1_anomaly, r.f1_macro, r.roc_auc
    );
    println!(
        "memory = {} bytes  f1/GB = {:.2}  train = {:.2}s  test = {:.2}s",
        r.memory_bytes, r.f1_per_gb, r.train_seconds, r.test_seconds
    );
}

fn cmd_train(cmd: &TrainCmd) -> Result<()> {
    let resolved = resolve(&cmd.exp, None)?;
    let cfg = &resolved.config;
    let out = require_out(cfg)?;
    print!("{}", cfg.describe());
    let train = match &resolved.train_path {
        Some(p) => gon_core::data::load_csv(p, resolved.has_labels)?,
        None => cfg.dataset.load()?.0,
    };
    let train = TimeSeries::new(train.values, train.dim_names, None)?;
    let fit = fit_detector(&train, cfg)?;
    for e in &fit.epochs {
        println!(
            "epoch {:>3}  lr {:.3e}  objective {:.4}  D(real) {:.4}  D(fake) {:.4}",
            e.epoch, e.learning_rate, e.mean_objective, e.mean_real_score, e.mean_fake_score
        );
    }
    ensure_dir(&out)?;
    let model = out.join("model.gon1");
    save_checkpoint(&fit.detector.discriminator, &model)?;
    write_file(&meta_path(&model), &fit.detector.meta_text())?;
    write_file(&out.join("train_scores.csv"), &scores_csv(&fit.train_scores))?;
    println!(
        "POT threshold = {} (initial {}), model written to {}",
        fit.detector.threshold(),
        fit.detector.pot.init_threshold,
        model.display()
    );
    Ok(())
}

fn load_detector(model: &Path) -> Result<Detector> {
    let d = load_checkpoint(model)?;
    let meta = meta_path(model);
    let text = fs::read_to_string(&meta).map_err(|e| GonError::io(&meta, e))?;
    Detector::from_meta_text(d, &text)
}

fn cmd_detect(cmd: &DetectCmd) -> Result<()> {
    println!("seed = {}", cmd.seed);
    let mut detector = load_detector(&cmd.model)?;
    if let Some(q) = cmd.pot_q {
        if !(q > 0.0 && q < 1.0) {
            return Err(GonError::config(format!("POT risk must lie in (0, 1), got {q}")));
        }
        detector.pot.risk = q;
        detector.pot.final_threshold = detector.pot.threshold_at(q);
    }
    println!(
        "window = {}, threshold = {} (q = {:e})",
        detector.window,
        detector.threshold(),
        detector.pot.risk
    );
    let series = gon_core::data::load_csv(&cmd.data, cmd.labels)?;
    let scores = detector.score(&series, derive_seed(cmd.seed, SEED_SCORE_TEST))?;
    let pred = detector.label(&scores);
    ensure_dir(&cmd.out)?;
    write_file(&cmd.out.join("scores.csv"), &scores_csv(&scores))?;
    write_file(
        &cmd.out.join("labels.csv"),
        &labels_csv(&pred, series.labels.as_deref()),
    )?;
    println!(
        "{} of {} timesteps flagged anomalous",
        pred.iter().filter(|&&p| p).count(),
        pred.len()
    );
    if let Some(truth) = &series.labels {
        if !truth.iter().any(|&l| l) {
            return Err(GonError::UndefinedMetrics(
                "labels hold no anomalies; precision, recall and F1 are undefined".into(),
            ));
        }
        let metrics = confusion_metrics(&pred, truth)?;
        let auc = roc_auc(&scores, truth)?;
        let mem = memory_estimate(detector.discriminator.layer_sizes(), cmd.batch);
        let name = cmd
            .data
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let report = DetectionReport::new(name, &metrics, auc, mem.total_bytes(), 0.0, 0.0);
        write_file(&cmd.out.join("report.csv"), &report.to_csv())?;
        write_file(&cmd.out.join("report.txt"), &report.to_kv_text())?;
        print_report(&report);
    }
    Ok(())
}

fn check_split(resolved: &Resolved) -> Result<()> {
    if resolved.train_path.is_some() && resolved.test_path.is_none() {
        return Err(GonError::config("--data needs a --test split"));
    }
    Ok(())
}

fn cmd_run(cmd: &RunCmd) -> Result<()> {
    let resolved = resolve(&cmd.exp, cmd.test.as_deref())?;
    check_split(&resolved)?;
    let cfg = &resolved.config;
    print!("{}", cfg.describe());
    let outcome = run_experiment(cfg)?;
    for e in &outcome.epochs {
        println!(
            "epoch {:>3}  lr {:.3e}  objective {:.4}  D(real) {:.4}  D(fake) {:.4}",
            e.epoch, e.learning_rate, e.mean_objective, e.mean_real_score, e.mean_fake_score
        );
    }
    println!("POT threshold = {}", outcome.detector.threshold());
    print_report(&outcome.report);
    if let Some(out) = &cfg.out_dir {
        println!("artifacts written to {}", out.display());
    }
    Ok(())
}

fn cmd_sweep(cmd: &SweepCmd) -> Result<()> {
    let resolved = resolve(&cmd.exp, cmd.test.as_deref())?;
    check_split(&resolved)?;
    let cfg = &resolved.config;
    let widths = cmd
        .widths
        .clone()
        .or_else(|| resolved.widths.clone())
        .unwrap_or_else(|| vec![32, 64, 128, 256]);
    print!("{}", cfg.describe());
    println!("widths = {widths:?}");
    let plans: Vec<LayerPlan> = widths
        .iter()
        .map(|&w| LayerPlan {
            hidden_width: w,
            ..cfg.layers
        })
        .collect();
    let rows = f1_per_gb_sweep(cfg, &plans)?;
    print!("{}", sweep_csv(&rows));
    Ok(())
}

fn cmd_generate(cmd: &GenerateCmd) -> Result<()> {
    let d = load_checkpoint(&cmd.model)?;
    let mut g = gon_core::GenerationConfig {
        noise_init: match cmd.noise {
            NoiseArg::Uniform => NoiseInit::Uniform01,
            NoiseArg::Normal => NoiseInit::StandardNormal,
        },
        ..Default::default()
    };
    if let Some(v) = cmd.gamma {
        g.gamma = v;
    }
    if let Some(v) = cmd.gen_iters {
        g.max_iters = v;
    }
    if let Some(v) = cmd.gen_tol {
        g.convergence_tol = v;
    }
    if let Some(StopModeArg::Stochastic) = cmd.stop_mode {
        g.mode = StopMode::StochasticStop;
    }
    if let Some(ClipArg::Unit) = cmd.clip {
        g.clip = Some((0.0, 1.0));
    }
    g.validate()?;
    println!("seed = {}", cmd.seed);
    println!("generation: {g:?}");
    let mut rng = rng_from_seed(cmd.seed);
    let samples = generate_batch(&d, cmd.n, &g, &mut rng)?;
    let dim = d.input_dim();
    let mut data = Vec::with_capacity(cmd.n * dim);
    for s in &samples {
        data.extend_from_slice(&s.z_star);
    }
    let names = (0..dim).map(|j| format!("z{j}")).collect();
    let series = TimeSeries::new(Matrix::from_vec(cmd.n, dim, data)?, names, None)?;
    save_csv(&series, &cmd.out)?;
    let mean_score = samples.iter().map(|s| s.final_score).sum::<f64>() / samples.len().max(1) as f64;
    println!(
        "{} samples written to {} (mean D = {mean_score:.4})",
        cmd.n,
        cmd.out.display()
    );
    Ok(())
}

fn cmd_synth(cmd: &SynthCmd) -> Result<()> {
    println!("seed = {}", cmd.seed);
    let series = match cmd.kind {
        SynthKind::Faults => {
            let mut c = SynthFaultConfig {
                seed: cmd.seed,
                ..SynthFaultConfig::default()
            };
            if let Some(v) = cmd.n {
                c.n_timesteps = v;
            }
            if let Some(v) = cmd.dims {
                c.n_dims = v;
            }
            if let Some(v) = cmd.magnitude {
                c.magnitude = v;
            }
            println!("{c:?}");
            synth_faults(&c)?
        }
        SynthKind::Gaussian => {
            let demo = GaussianDemoConfig::default();
            let c = GaussianConfig {
                n_samples: cmd.n.unwrap_or(demo.data.n_samples),
                seed: cmd.seed,
                ..demo.data
            };
            println!("{c:?}");
            synth_gaussian(&c)?
        }
    };
    save_csv(&series, &cmd.out)?;
    println!("{} rows written to {}", series.len(), cmd.out.display());
    Ok(())
}

fn points_csv(points: &[Vec<f64>]) -> String {
    let mut s = String::from("x,y\n");
    for p in points {
        let _ = writeln!(s, "{},{}", p[0], p[1]);
    }
    s
}

fn cmd_demo(cmd: &DemoCmd) -> Result<()> {
    let mut c = GaussianDemoConfig {
        seed: cmd.seed,
        n_generate: cmd.n,
        ..GaussianDemoConfig::default()
    };
    c.data.n_samples = cmd.n;
    c.train.epochs = cmd.epochs;
    if let Some(v) = cmd.lr {
        c.train.lr_schedule.base_lr = v;
    }
    for g in [&mut c.train.gen_config, &mut c.generation] {
        if let Some(v) = cmd.gamma {
            g.gamma = v;
        }
        if let Some(v) = cmd.gen_iters {
            g.max_iters = v;
        }
    }
    if let Some(v) = cmd.hidden {
        c.layers.hidden_width = v;
    }
    if let Some(v) = cmd.layers {
        c.layers.hidden_layers = v;
    }
    println!("seed = {}", c.seed);
    println!("{c:?}");
    let o = gaussian_demo(&c)?;
    ensure_dir(&cmd.out)?;
    write_file(&cmd.out.join("train.csv"), &points_csv(&o.train))?;
    write_file(&cmd.out.join("generated.csv"), &points_csv(&o.generated))?;
    let svg = svg::scatter(
        "GON on a 2-D Gaussian",
        &[
            svg::Series {
                label: "data",
                color: "green",
                points: &o.train,
            },
            svg::Series {
                label: "generated",
                color: "blue",
                points: &o.generated,
            },
        ],
    );
    write_file(&cmd.out.join("scatter.svg"), &svg)?;
    println!("data      mean {:?}  cov {:?}", o.data_mean, o.data_cov);
    println!("generated mean {:?}  cov {:?}", o.gen_mean, o.gen_cov);
    let err = o.mean_error();
    println!(
        "mean error ({:.4}, {:.4}), covariance Frobenius error {:.4}, {:.2}s",
        err[0],
        err[1],
        o.cov_frobenius_error(),
        o.seconds
    );
    Ok(())
}

fn cmd_inspect(cmd: &InspectCmd) -> Result<()> {
    let d = load_checkpoint(&cmd.model)?;
    let sizes = d.layer_sizes();
    let mem = memory_estimate(sizes, cmd.batch);
    println!("layers = {sizes:?}");
    println!("activation = {}", d.activation().name());
    println!("parameters = {}", d.param_count());
    println!("parameter bytes = {}", mem.param_bytes());
    println!("training memory (batch {}) = {} bytes", cmd.batch, mem.total_bytes());
    println!("matched GAN parameters = {}", gan_param_count(sizes));
    if let Ok(text) = fs::read_to_string(meta_path(&cmd.model)) {
        let det = Detector::from_meta_text(d, &text)?;
        println!("window = {}", det.window);
        println!("POT threshold = {}", det.threshold());
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train(c) => cmd_train(c),
        Command::Detect(c) => cmd_detect(c),
        Command::Run(c) => cmd_run(c),
        Command::Sweep(c) => cmd_sweep(c),
        Command::Generate(c) => cmd_generate(c),
        Command::Synth(c) => cmd_synth(c),
        Command::GaussianDemo(c) => cmd_demo(c),
        Command::Inspect(c) => cmd_inspect(c),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("error[{}]: {first}", gon_core::ErrorCategory::Config.tag());
            return ExitCode::from(gon_core::ErrorCategory::Config.exit_code() as u8);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let cat = e.category();
            eprintln!("error[{}]: {e}", cat.tag());
            ExitCode::from(cat.exit_code() as u8)
        }
    }
}
