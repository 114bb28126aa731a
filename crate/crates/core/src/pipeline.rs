//! End-to-end experiments: fit a detector on a train split, score and label a
//! test split, and write the report artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::data::{load_csv, synth_faults, synth_gaussian, GaussianConfig, SynthFaultConfig};
use crate::error::{GonError, Result};
use crate::eval::{confusion_metrics, f1_per_gb, memory_estimate, roc_auc, DetectionReport};
use crate::gon::{generate_batch, EpochStats, GenerationConfig, NoiseInit, TrainConfig, Trainer};
use crate::neural::{layer_plan, save_checkpoint, Activation, Discriminator};
use crate::optim::LrSchedule;
use crate::pot::{fit_pot, label, PotConfig, PotModel};
use crate::rng::{derive_seed, rng_from_seed};
use crate::windows::{make_windows, score_windows, MinMaxScaler, ReconInit, TimeSeries};

pub const DEFAULT_WINDOW: usize = 10;

/// Stream tags passed to [`derive_seed`] with the experiment seed.
pub const SEED_INIT: u64 = 1;
pub const SEED_TRAIN: u64 = 2;
pub const SEED_SCORE_TRAIN: u64 = 3;
pub const SEED_SCORE_TEST: u64 = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    /// Separate train and test files; the test file must carry labels.
    Csv {
        train: PathBuf,
        test: PathBuf,
        has_labels: bool,
    },
    /// One fault-injected trace split at `train_len`; faults are only injected
    /// after the split so the train segment is normal operation.
    Synthetic { config: SynthFaultConfig, train_len: usize },
    InMemory {
        name: String,
        train: TimeSeries,
        test: TimeSeries,
    },
}

impl DatasetSpec {
    /// Default synthetic trace: the first half trains, the second half tests.
    pub fn synthetic_default(seed: u64) -> Self {
        let config = SynthFaultConfig {
            seed,
            ..SynthFaultConfig::default()
        };
        let train_len = config.n_timesteps / 2;
        DatasetSpec::Synthetic { config, train_len }
    }

    pub fn name(&self) -> String {
        match self {
            DatasetSpec::Csv { test, .. } => test
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "csv".into()),
            DatasetSpec::Synthetic { config, .. } => format!("synthetic-{}", config.seed),
            DatasetSpec::InMemory { name, .. } => name.clone(),
        }
    }

    /// Materializes `(train, test)`.
    pub fn load(&self) -> Result<(TimeSeries, TimeSeries)> {
        match self {
            DatasetSpec::Csv {
                train,
                test,
                has_labels,
            } => Ok((load_csv(train, *has_labels)?, load_csv(test, true)?)),
            DatasetSpec::Synthetic { config, train_len } => {
                if *train_len == 0 || *train_len >= config.n_timesteps {
                    return Err(GonError::config(format!(
                        "train length {train_len} must lie inside (0, {})",
                        config.n_timesteps
                    )));
                }
                let full = synth_faults(&SynthFaultConfig {
                    clean_prefix: config.clean_prefix.max(*train_len),
                    ..config.clone()
                })?;
                Ok((full.slice(0, *train_len)?, full.slice(*train_len, full.len())?))
            }
            DatasetSpec::InMemory { train, test, .. } => Ok((train.clone(), test.clone())),
        }
    }
}

/// Hidden-layer layout of the discriminator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerPlan {
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub activation: Activation,
}

impl Default for LayerPlan {
    fn default() -> Self {
        Self {
            hidden_width: crate::neural::DEFAULT_HIDDEN_WIDTH,
            hidden_layers: crate::neural::DEFAULT_HIDDEN_LAYERS,
            activation: Activation::default(),
        }
    }
}

impl LayerPlan {
    pub fn with_width(hidden_width: usize) -> Self {
        Self {
            hidden_width,
            ..Self::default()
        }
    }

    pub fn sizes(&self, input_dim: usize) -> Vec<usize> {
        layer_plan(input_dim, self.hidden_width, self.hidden_layers)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers > 0 && self.hidden_width == 0 {
            return Err(GonError::config("hidden width must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub window: usize,
    pub layers: LayerPlan,
    /// `train.seed` is ignored; all randomness derives from `seed`.
    pub train: TrainConfig,
    /// Ascent used to reconstruct windows at scoring time.
    pub recon: GenerationConfig,
    pub recon_init: ReconInit,
    pub pot: PotConfig,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSpec::synthetic_default(0),
            window: DEFAULT_WINDOW,
            layers: LayerPlan::default(),
            train: TrainConfig::default(),
            recon: GenerationConfig::default(),
            recon_init: ReconInit::Input,
            pot: PotConfig::default(),
            out_dir: None,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    /// Tuned settings for the synthetic fault trace, fixed by the committed
    /// pilot run. Dense faults contaminate most multi-step windows, so K = 1.
    pub fn synthetic_preset(seed: u64) -> Self {
        Self {
            window: 1,
            train: TrainConfig {
                epochs: 40,
                lr_schedule: LrSchedule {
                    base_lr: 1e-2,
                    restart_period_epochs: 40,
                    ..LrSchedule::default()
                },
                gen_config: GenerationConfig {
                    max_iters: 40,
                    ..GenerationConfig::default()
                },
                ..TrainConfig::default()
            },
            pot: PotConfig {
                risk: 1e-3,
                init_level: 0.02,
            },
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(GonError::config("window length must be at least 1"));
        }
        self.layers.validate()?;
        self.train.validate()?;
        self.recon.validate()?;
        self.pot.validate()
    }

    /// Human-readable dump of every resolved setting.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dataset = {:?}", self.dataset);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "window = {}", self.window);
        let _ = writeln!(
            s,
            "hidden = {} x {} ({})",
            self.layers.hidden_width,
            self.layers.hidden_layers,
            self.layers.activation.name()
        );
        let t = &self.train;
        let _ = writeln!(
            s,
            "train: epochs = {}, batch = {}, lr = {:e}, min_lr = {:e}, restart = {}, weight_decay = {:e}",
            t.epochs,
            t.batch_size,
            t.lr_schedule.base_lr,
            t.lr_schedule.min_lr,
            t.lr_schedule.restart_period_epochs,
            t.lr_schedule.weight_decay
        );
        let _ = writeln!(s, "train generation: {:?}", t.gen_config);
        let _ = writeln!(s, "reconstruction: {:?}, init = {:?}", self.recon, self.recon_init);
        let _ = writeln!(
            s,
            "pot: risk = {:e}, init_level = {}",
            self.pot.risk, self.pot.init_level
        );
        s
    }
}

/// A trained detector: everything needed to score new data.
#[derive(Debug, Clone, PartialEq)]
pub struct Detector {
    pub discriminator: Discriminator,
    pub scaler: MinMaxScaler,
    pub window: usize,
    pub recon: GenerationConfig,
    pub recon_init: ReconInit,
    pub pot: PotModel,
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub detector: Detector,
    pub train_scores: Vec<f64>,
    pub epochs: Vec<EpochStats>,
    pub seconds: f64,
}

/// Fits scaler, discriminator and POT threshold on a (label-free) train split.
pub fn fit_detector(train: &TimeSeries, config: &ExperimentConfig) -> Result<FitOutcome> {
    config.validate()?;
    let start = Instant::now();
    let scaler = MinMaxScaler::fit(train)?;
    let windows = make_windows(&scaler.transform(train)?, config.window)?;
    let sizes = config.layers.sizes(windows.flat_len());
    let d = Discriminator::new(&sizes, config.layers.activation, derive_seed(config.seed, SEED_INIT))?;
    let train_cfg = TrainConfig {
        seed: derive_seed(config.seed, SEED_TRAIN),
        ..config.train.clone()
    };
    let mut trainer = Trainer::new(d, train_cfg)?;
    let epochs = trainer.fit(&windows.windows)?;
    let discriminator = trainer.into_discriminator();
    let train_scores = score_windows(
        &discriminator,
        &windows,
        &config.recon,
        config.recon_init,
        derive_seed(config.seed, SEED_SCORE_TRAIN),
    )?;
    let pot = fit_pot(&train_scores, &config.pot)?;
    log::info!(
        "POT: t = {:.6}, shape = {:.4}, scale = {:.4}, z_q = {:.6} ({} peaks)",
        pot.init_threshold,
        pot.gpd_shape,
        pot.gpd_scale,
        pot.final_threshold,
        pot.n_peaks
    );
    Ok(FitOutcome {
        detector: Detector {
            discriminator,
            scaler,
            window: config.window,
            recon: config.recon.clone(),
            recon_init: config.recon_init,
            pot,
        },
        train_scores,
        epochs,
        seconds: start.elapsed().as_secs_f64(),
    })
}

impl Detector {
    /// Per-timestep anomaly scores for `series`, normalized with the train
    /// scaler.
    pub fn score(&self, series: &TimeSeries, seed: u64) -> Result<Vec<f64>> {
        if series.dims() != self.scaler.min.len() {
            return Err(GonError::DimensionMismatch {
                context: "series dimension vs model",
                expected: self.scaler.min.len(),
                actual: series.dims(),
            });
        }
        let windows = make_windows(&self.scaler.transform(series)?, self.window)?;
        score_windows(&self.discriminator, &windows, &self.recon, self.recon_init, seed)
    }

    pub fn threshold(&self) -> f64 {
        self.pot.final_threshold
    }

    pub fn label(&self, scores: &[f64]) -> Vec<bool> {
        label(scores, &self.pot)
    }

    /// `key = value` sidecar with everything but the network weights.
    pub fn meta_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let _ = writeln!(s, "window = {}", self.window);
        let _ = writeln!(s, "scaler_min = {}", join(&self.scaler.min));
        let _ = writeln!(s, "scaler_max = {}", join(&self.scaler.max));
        let _ = writeln!(s, "gamma = {}", self.recon.gamma);
        let _ = writeln!(s, "gen_iters = {}", self.recon.max_iters);
        let _ = writeln!(s, "gen_tol = {}", self.recon.convergence_tol);
        let _ = writeln!(
            s,
            "recon_init = {}",
            match self.recon_init {
                ReconInit::Input => "input",
                ReconInit::Noise => "noise",
            }
        );
        let _ = writeln!(s, "pot_init_threshold = {}", self.pot.init_threshold);
        let _ = writeln!(s, "pot_shape = {}", self.pot.gpd_shape);
        let _ = writeln!(s, "pot_scale = {}", self.pot.gpd_scale);
        let _ = writeln!(s, "pot_risk = {}", self.pot.risk);
        let _ = writeln!(s, "pot_n_total = {}", self.pot.n_total);
        let _ = writeln!(s, "pot_n_peaks = {}", self.pot.n_peaks);
        let _ = writeln!(s, "pot_threshold = {}", self.pot.final_threshold);
        s
    }

    /// Inverse of [`Detector::meta_text`] given the loaded network.
    pub fn from_meta_text(discriminator: Discriminator, text: &str) -> Result<Self> {
        let mut kv = std::collections::HashMap::new();
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| GonError::Checkpoint(format!("bad meta line {line:?}")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            kv.get(k)
                .map(String::as_str)
                .ok_or_else(|| GonError::Checkpoint(format!("meta is missing '{k}'")))
        };
        fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| GonError::Checkpoint(format!("meta '{k}' has bad value {v:?}")))
        }
        let vec = |k: &str| -> Result<Vec<f64>> { get(k)?.split(',').map(|v| num(k, v.trim())).collect() };
        let window: usize = num("window", get("window")?)?;
        let scaler = MinMaxScaler {
            min: vec("scaler_min")?,
            max: vec("scaler_max")?,
        };
        if scaler.min.len() != scaler.max.len() || window * scaler.min.len() != discriminator.input_dim() {
            return Err(GonError::Checkpoint(format!(
                "meta window {window} x {} dims does not match model input {}",
                scaler.min.len(),
                discriminator.input_dim()
            )));
        }
        let recon = GenerationConfig {
            gamma: num("gamma", get("gamma")?)?,
            max_iters: num("gen_iters", get("gen_iters")?)?,
            convergence_tol: num("gen_tol", get("gen_tol")?)?,
            ..GenerationConfig::default()
        };
        let recon_init = match get("recon_init")? {
            "input" => ReconInit::Input,
            "noise" => ReconInit::Noise,
            other => return Err(GonError::Checkpoint(format!("unknown recon_init {other:?}"))),
        };
        let pot = PotModel {
            init_threshold: num("pot_init_threshold", get("pot_init_threshold")?)?,
            peaks: Vec::new(),
            gpd_shape: num("pot_shape", get("pot_shape")?)?,
            gpd_scale: num("pot_scale", get("pot_scale")?)?,
            risk: num("pot_risk", get("pot_risk")?)?,
            n_total: num("pot_n_total", get("pot_n_total")?)?,
            n_peaks: num("pot_n_peaks", get("pot_n_peaks")?)?,
            final_threshold: num("pot_threshold", get("pot_threshold")?)?,
            method: crate::pot::TailFit::Grimshaw,
        };
        Ok(Self {
            discriminator,
            scaler,
            window,
            recon,
            recon_init,
            pot,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: DetectionReport,
    pub detector: Detector,
    pub train_scores: Vec<f64>,
    pub test_scores: Vec<f64>,
    pub predictions: Vec<bool>,
    pub truth: Vec<bool>,
    pub epochs: Vec<EpochStats>,
    pub layer_sizes: Vec<usize>,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| GonError::io(path, e))
}

pub fn scores_csv(scores: &[f64]) -> String {
    let mut s = String::from("t,score\n");
    for (t, v) in scores.iter().enumerate() {
        let _ = writeln!(s, "{t},{v}");
    }
    s
}

pub fn labels_csv(pred: &[bool], truth: Option<&[bool]>) -> String {
    let mut s = String::from(if truth.is_some() { "t,pred,truth\n" } else { "t,pred\n" });
    for (t, &p) in pred.iter().enumerate() {
        match truth {
            Some(tr) => {
                let _ = writeln!(s, "{t},{},{}", p as u8, tr[t] as u8);
            }
            None => {
                let _ = writeln!(s, "{t},{}", p as u8);
            }
        }
    }
    s
}

/// Train on the train split, score and label the test split, and evaluate.
///
/// With `out_dir` set, writes `model.gon1`, `model.meta`, `scores.csv`,
/// `labels.csv`, `report.csv` and `report.txt`. Scores are written before
/// metrics are computed, so they survive an undefined-metrics failure.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let (train, test) = config.dataset.load()?;
    if train.dims() != test.dims() {
        return Err(GonError::DimensionMismatch {
            context: "test dimension vs train",
            expected: train.dims(),
            actual: test.dims(),
        });
    }
    let truth = test
        .labels
        .clone()
        .ok_or_else(|| GonError::data("test split has no labels"))?;
    // training never sees labels
    let train = TimeSeries::new(train.values, train.dim_names, None)?;

    let fit = fit_detector(&train, config)?;
    let detector = fit.detector;
    let test_start = Instant::now();
    let test_scores = detector.score(&test, derive_seed(config.seed, SEED_SCORE_TEST))?;
    let predictions = detector.label(&test_scores);
    let test_seconds = test_start.elapsed().as_secs_f64();

    if let Some(dir) = &config.out_dir {
        fs::create_dir_all(dir).map_err(|e| GonError::io(dir, e))?;
        save_checkpoint(&detector.discriminator, dir.join("model.gon1"))?;
        write_file(&dir.join("model.meta"), &detector.meta_text())?;
        write_file(&dir.join("scores.csv"), &scores_csv(&test_scores))?;
        write_file(&dir.join("labels.csv"), &labels_csv(&predictions, Some(&truth)))?;
    }

    if !truth.iter().any(|&l| l) {
        return Err(GonError::UndefinedMetrics(
            "test split has no anomalies; precision, recall and F1 are undefined".into(),
        ));
    }
    if !test_scores.iter().any(|&s| s > detector.pot.init_threshold) {
        return Err(GonError::data(format!(
            "test split with no POT peaks: no score exceeds the initial threshold {}",
            detector.pot.init_threshold
        )));
    }
    let metrics = confusion_metrics(&predictions, &truth)?;
    let auc = roc_auc(&test_scores, &truth)?;
    let layer_sizes = detector.discriminator.layer_sizes().to_vec();
    let memory = memory_estimate(&layer_sizes, config.train.batch_size);
    let report = DetectionReport::new(
        config.dataset.name(),
        &metrics,
        auc,
        memory.total_bytes(),
        fit.seconds,
        test_seconds,
    );
    if let Some(dir) = &config.out_dir {
        write_file(&dir.join("report.csv"), &report.to_csv())?;
        write_file(&dir.join("report.txt"), &report.to_kv_text())?;
    }
    Ok(ExperimentOutcome {
        report,
        detector,
        train_scores: fit.train_scores,
        test_scores,
        predictions,
        truth,
        epochs: fit.epochs,
        layer_sizes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub param_count: usize,
    pub memory_bytes: usize,
    pub f1_anomaly: f64,
    pub f1_macro: f64,
    pub f1_per_gb: f64,
}

pub const SWEEP_CSV_HEADER: &str = "width,layers,params,mem_bytes,f1,f1_macro,f1_per_gb";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = format!("{SWEEP_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.hidden_width, r.hidden_layers, r.param_count, r.memory_bytes, r.f1_anomaly, r.f1_macro, r.f1_per_gb
        );
    }
    s
}

/// Runs one experiment per layer plan. Per-plan artifacts go to
/// `out_dir/w{width}_l{layers}`, the table to `out_dir/sweep.csv`.
pub fn f1_per_gb_sweep(config: &ExperimentConfig, plans: &[LayerPlan]) -> Result<Vec<SweepRow>> {
    if plans.len() < 2 {
        return Err(GonError::config(format!(
            "a sweep needs at least 2 layer plans, got {}",
            plans.len()
        )));
    }
    let mut rows = Vec::with_capacity(plans.len());
    for plan in plans {
        let run = ExperimentConfig {
            layers: *plan,
            out_dir: config
                .out_dir
                .as_ref()
                .map(|d| d.join(format!("w{}_l{}", plan.hidden_width, plan.hidden_layers))),
            ..config.clone()
        };
        let outcome = run_experiment(&run)?;
        let r = &outcome.report;
        log::info!(
            "sweep width {} layers {}: f1 {:.4}, f1_macro {:.4}, {} bytes",
            plan.hidden_width,
            plan.hidden_layers,
            r.f1_anomaly,
            r.f1_macro,
            r.memory_bytes
        );
        rows.push(SweepRow {
            hidden_width: plan.hidden_width,
            hidden_layers: plan.hidden_layers,
            param_count: outcome.detector.discriminator.param_count(),
            memory_bytes: r.memory_bytes,
            f1_anomaly: r.f1_anomaly,
            f1_macro: r.f1_macro,
            f1_per_gb: f1_per_gb(r.f1_macro, r.memory_bytes),
        });
    }
    if let Some(dir) = &config.out_dir {
        fs::create_dir_all(dir).map_err(|e| GonError::io(dir, e))?;
        write_file(&dir.join("sweep.csv"), &sweep_csv(&rows))?;
    }
    Ok(rows)
}


#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDemoConfig {
    pub data: GaussianConfig,
    pub n_generate: usize,
    pub layers: LayerPlan,
    pub train: TrainConfig,
    /// Ascent used to draw the reported samples.
    pub generation: GenerationConfig,
    pub seed: u64,
}

impl Default for GaussianDemoConfig {
    fn default() -> Self {
        let generation = GenerationConfig {
            gamma: 0.02,
            max_iters: 200,
            noise_init: NoiseInit::StandardNormal,
            ..GenerationConfig::default()
        };
        Self {
            data: GaussianConfig {
                n_samples: 1000,
                mean: [1.5, -1.0],
                covariance: [[1.0, 0.6], [0.6, 0.8]],
                seed: 0,
            },
            n_generate: 1000,
            layers: LayerPlan {
                hidden_width: 128,
                hidden_layers: 2,
                activation: Activation::default(),
            },
            train: TrainConfig {
                epochs: 5,
                batch_size: 32,
                // one cosine cycle: D settles by the last epoch
                lr_schedule: LrSchedule {
                    base_lr: 1e-2,
                    restart_period_epochs: 5,
                    ..LrSchedule::default()
                },
                gen_config: generation.clone(),
                ..TrainConfig::default()
            },
            // the final ascent must not outrun the region D was trained on
            generation,
            seed: 0,
        }
    }
}

/// Sample mean and (population) covariance of 2-D points.
pub fn mean_cov_2d(points: &[Vec<f64>]) -> ([f64; 2], [[f64; 2]; 2]) {
    let n = points.len() as f64;
    let mut m = [0.0; 2];
    for p in points {
        m[0] += p[0] / n;
        m[1] += p[1] / n;
    }
    let mut c = [[0.0; 2]; 2];
    for p in points {
        let d = [p[0] - m[0], p[1] - m[1]];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] += d[i] * d[j] / n;
            }
        }
    }
    (m, c)
}

#[derive(Debug, Clone)]
pub struct GaussianDemoOutcome {
    pub train: Vec<Vec<f64>>,
    pub generated: Vec<Vec<f64>>,
    pub data_mean: [f64; 2],
    pub data_cov: [[f64; 2]; 2],
    pub gen_mean: [f64; 2],
    pub gen_cov: [[f64; 2]; 2],
    pub epochs: Vec<EpochStats>,
    pub seconds: f64,
}

impl GaussianDemoOutcome {
    pub fn mean_error(&self) -> [f64; 2] {
        [
            (self.gen_mean[0] - self.data_mean[0]).abs(),
            (self.gen_mean[1] - self.data_mean[1]).abs(),
        ]
    }

    pub fn cov_frobenius_error(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += (self.gen_cov[i][j] - self.data_cov[i][j]).powi(2);
            }
        }
        s.sqrt()
    }
}

/// Trains a GON on 2-D Gaussian samples and draws fresh samples from noise.
pub fn gaussian_demo(config: &GaussianDemoConfig) -> Result<GaussianDemoOutcome> {
    config.layers.validate()?;
    config.generation.validate()?;
    let start = Instant::now();
    let data = synth_gaussian(&GaussianConfig {
        seed: derive_seed(config.seed, SEED_INIT),
        ..config.data.clone()
    })?;
    let train = data.rows();
    let d = Discriminator::new(
        &config.layers.sizes(2),
        config.layers.activation,
        derive_seed(config.seed, SEED_TRAIN),
    )?;
    let mut trainer = Trainer::new(
        d,
        TrainConfig {
            seed: derive_seed(config.seed, SEED_SCORE_TRAIN),
            ..config.train.clone()
        },
    )?;
    let epochs = trainer.fit(&train)?;
    let mut rng = rng_from_seed(derive_seed(config.seed, SEED_SCORE_TEST));
    let generated: Vec<Vec<f64>> =
        generate_batch(trainer.discriminator(), config.n_generate, &config.generation, &mut rng)?
            .into_iter()
            .map(|g| g.z_star)
            .collect();
    let (data_mean, data_cov) = mean_cov_2d(&train);
    let (gen_mean, gen_cov) = mean_cov_2d(&generated);
    Ok(GaussianDemoOutcome {
        train,
        generated,
        data_mean,
        data_cov,
        gen_mean,
        gen_cov,
        epochs,
        seconds: start.elapsed().as_secs_f64(),
    })
}
