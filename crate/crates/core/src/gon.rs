//! Sample generation by input-space ascent of `log D(z)` and the minibatch
//! training loop that alternates generation with a discriminator update.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{GonError, Result};
use crate::neural::{Discriminator, Gradients, LogTarget};
use crate::optim::{cosine_lr, AdamState, LrSchedule};
use crate::rng::{rng_from_seed, GonRng};

pub const DEFAULT_BATCH_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopMode {
    /// Stop once |Δ log D| falls below the tolerance (or at `max_iters`).
    #[default]
    FixedConvergence,
    /// After each step, stop with probability D(z).
    StochasticStop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseInit {
    #[default]
    Uniform01,
    StandardNormal,
}

impl NoiseInit {
    pub fn sample<R: Rng + ?Sized>(self, dim: usize, rng: &mut R) -> Vec<f64> {
        match self {
            NoiseInit::Uniform01 => (0..dim).map(|_| rng.random::<f64>()).collect(),
            NoiseInit::StandardNormal => (0..dim).map(|_| rng.sample(StandardNormal)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig {
    /// Adam learning rate of the ascent.
    pub gamma: f64,
    pub max_iters: usize,
    pub convergence_tol: f64,
    /// Elementwise `[lo, hi]` clamp applied after every step.
    pub clip: Option<(f64, f64)>,
    pub mode: StopMode,
    pub noise_init: NoiseInit,
    pub record_trajectory: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            gamma: 0.01,
            max_iters: 100,
            convergence_tol: 1e-6,
            clip: None,
            mode: StopMode::FixedConvergence,
            noise_init: NoiseInit::Uniform01,
            record_trajectory: false,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(GonError::config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.max_iters == 0 {
            return Err(GonError::config("max_iters must be at least 1"));
        }
        if !(self.convergence_tol >= 0.0) {
            return Err(GonError::config("convergence tolerance must be non-negative"));
        }
        if let Some((lo, hi)) = self.clip {
            if !(lo < hi) {
                return Err(GonError::config(format!("clip bounds need lo < hi, got [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationResult {
    /// Best iterate seen, by D-value.
    pub z_star: Vec<f64>,
    /// D(z*).
    pub final_score: f64,
    /// D(z0).
    pub initial_score: f64,
    pub iters_used: usize,
    /// log D after each iterate, starting with z0.
    pub trajectory_log_d: Option<Vec<f64>>,
}

/// Adam ascent on `log D(z)` from `z0`, returning the best iterate seen.
///
/// `rng` is only consulted in [`StopMode::StochasticStop`].
pub fn generate_sample<R: Rng + ?Sized>(
    d: &Discriminator,
    z0: &[f64],
    config: &GenerationConfig,
    rng: &mut R,
) -> Result<GenerationResult> {
    config.validate()?;
    if z0.len() != d.input_dim() {
        return Err(GonError::DimensionMismatch {
            context: "generation start point",
            expected: d.input_dim(),
            actual: z0.len(),
        });
    }

    let mut z = z0.to_vec();
    let (mut log_d, initial_score, mut grad) = d.log_d_with_input_grad(&z)?;
    let mut best_z = z.clone();
    let mut best_log_d = log_d;
    let mut best_score = initial_score;
    let mut trajectory = config.record_trajectory.then(|| vec![log_d]);
    let mut adam = AdamState::for_vector(z.len());
    let mut iters_used = 0;

    for it in 1..=config.max_iters {
        adam.step_vector(&mut z, &grad, config.gamma, 0.0, true)?;
        if let Some((lo, hi)) = config.clip {
            z.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
        }
        let previous = log_d;
        let (next_log_d, score, next_grad) = d.log_d_with_input_grad(&z)?;
        log_d = next_log_d;
        grad = next_grad;
        iters_used = it;
        if let Some(t) = trajectory.as_mut() {
            t.push(log_d);
        }
        if log_d > best_log_d {
            best_log_d = log_d;
            best_score = score;
            best_z.copy_from_slice(&z);
        }
        let stop = match config.mode {
            StopMode::FixedConvergence => (log_d - previous).abs() < config.convergence_tol,
            StopMode::StochasticStop => rng.random::<f64>() < score,
        };
        if stop {
            break;
        }
    }

    Ok(GenerationResult {
        z_star: best_z,
        final_score: best_score,
        initial_score,
        iters_used,
        trajectory_log_d: trajectory,
    })
}

/// `(1/m) Σ [log D(x_i) + log(1 − D(z_i))]` with clamped logs.
pub fn discriminator_objective(d: &Discriminator, real_batch: &[Vec<f64>], fake_batch: &[Vec<f64>]) -> Result<f64> {
    if real_batch.is_empty() || fake_batch.is_empty() {
        return Err(GonError::data("objective needs non-empty batches"));
    }
    if real_batch.len() != fake_batch.len() {
        return Err(GonError::DimensionMismatch {
            context: "objective batch size",
            expected: real_batch.len(),
            actual: fake_batch.len(),
        });
    }
    let mut total = 0.0;
    for (x, z) in real_batch.iter().zip(fake_batch) {
        total += d.log_d(x, LogTarget::Real)? + d.log_d(z, LogTarget::Fake)?;
    }
    Ok(total / real_batch.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr_schedule: LrSchedule,
    pub gen_config: GenerationConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: DEFAULT_BATCH_SIZE,
            epochs: 10,
            lr_schedule: LrSchedule::default(),
            gen_config: GenerationConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(GonError::config("batch size must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(GonError::config("epochs must be at least 1"));
        }
        self.lr_schedule.validate()?;
        self.gen_config.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Mean over minibatches of the objective, evaluated before each update.
    pub mean_objective: f64,
    pub mean_real_score: f64,
    pub mean_fake_score: f64,
    pub mean_gen_iters: f64,
    pub updates: usize,
    pub seconds: f64,
}

/// One pass over `dataset` in shuffled minibatches.
///
/// Per minibatch: draw noise, take the next real samples, generate from each
/// noise vector, then take one Adam ascent step on the objective. Noise and
/// per-sample generation seeds come from `rng` in a fixed order, and the
/// parallel generation results are collected by index, so the outcome only
/// depends on the seed.
pub fn train_epoch(
    d: &mut Discriminator,
    adam: &mut AdamState,
    dataset: &[Vec<f64>],
    config: &TrainConfig,
    epoch_index: usize,
    rng: &mut GonRng,
) -> Result<EpochStats> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(GonError::data("training set is empty"));
    }
    let dim = d.input_dim();
    if let Some(bad) = dataset.iter().find(|x| x.len() != dim) {
        return Err(GonError::DimensionMismatch {
            context: "training sample",
            expected: dim,
            actual: bad.len(),
        });
    }

    let start = Instant::now();
    let lr = cosine_lr(&config.lr_schedule, epoch_index);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(rng);

    let (mut objective_sum, mut real_sum, mut fake_sum, mut iter_sum) = (0.0, 0.0, 0.0, 0usize);
    let mut updates = 0;
    for batch in order.chunks(config.batch_size) {
        let m = batch.len();
        let noise: Vec<Vec<f64>> = (0..m).map(|_| config.gen_config.noise_init.sample(dim, rng)).collect();
        let seeds: Vec<u64> = (0..m).map(|_| rng.random()).collect();
        let generated = {
            let d: &Discriminator = d;
            noise
                .par_iter()
                .zip(seeds.par_iter())
                .map(|(z0, &seed)| generate_sample(d, z0, &config.gen_config, &mut rng_from_seed(seed)))
                .collect::<Result<Vec<_>>>()?
        };

        let scale = 1.0 / m as f64;
        let mut grads = Gradients::zeros_like(d);
        let mut objective = 0.0;
        for &i in batch {
            let (p, trace) = d.forward(&dataset[i])?;
            objective += trace.log_term(LogTarget::Real);
            real_sum += p;
            d.accumulate_param_grad(&trace, LogTarget::Real, scale, &mut grads)?;
        }
        for g in &generated {
            let (p, trace) = d.forward(&g.z_star)?;
            objective += trace.log_term(LogTarget::Fake);
            fake_sum += p;
            iter_sum += g.iters_used;
            d.accumulate_param_grad(&trace, LogTarget::Fake, scale, &mut grads)?;
        }
        objective_sum += objective * scale;

        adam.step(
            &mut d.param_buffers_mut(),
            &grads.buffers(),
            lr,
            config.lr_schedule.weight_decay,
            true,
        )?;
        if !d.params_finite() {
            return Err(GonError::NonFinite("discriminator parameters after update"));
        }
        updates += 1;
    }

    let n = dataset.len() as f64;
    Ok(EpochStats {
        epoch: epoch_index,
        learning_rate: lr,
        mean_objective: objective_sum / updates as f64,
        mean_real_score: real_sum / n,
        mean_fake_score: fake_sum / n,
        mean_gen_iters: iter_sum as f64 / n,
        updates,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Owns the discriminator, its optimizer state, and the training RNG.
#[derive(Debug, Clone)]
pub struct Trainer {
    discriminator: Discriminator,
    adam: AdamState,
    config: TrainConfig,
    rng: GonRng,
    epochs_done: usize,
}

impl Trainer {
    pub fn new(discriminator: Discriminator, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let lens: Vec<usize> = discriminator.param_buffers().iter().map(|b| b.len()).collect();
        Ok(Self {
            adam: AdamState::new(&lens),
            rng: rng_from_seed(config.seed),
            discriminator,
            config,
            epochs_done: 0,
        })
    }

    pub fn discriminator(&self) -> &Discriminator {
        &self.discriminator
    }

    pub fn into_discriminator(self) -> Discriminator {
        self.discriminator
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn epochs_done(&self) -> usize {
        self.epochs_done
    }

    pub fn adam_updates(&self) -> u64 {
        self.adam.step_count()
    }

    pub fn train_epoch(&mut self, dataset: &[Vec<f64>]) -> Result<EpochStats> {
        let stats = train_epoch(
            &mut self.discriminator,
            &mut self.adam,
            dataset,
            &self.config,
            self.epochs_done,
            &mut self.rng,
        )?;
        self.epochs_done += 1;
        Ok(stats)
    }

    /// Runs the configured number of epochs.
    pub fn fit(&mut self, dataset: &[Vec<f64>]) -> Result<Vec<EpochStats>> {
        (0..self.config.epochs)
            .map(|_| {
                let stats = self.train_epoch(dataset)?;
                log::debug!(
                    "epoch {} lr {:.3e} objective {:.4} D(real) {:.4} D(fake) {:.4} ({:.2}s)",
                    stats.epoch,
                    stats.learning_rate,
                    stats.mean_objective,
                    stats.mean_real_score,
                    stats.mean_fake_score,
                    stats.seconds
                );
                Ok(stats)
            })
            .collect()
    }

    /// Draws `n` noise vectors and optimizes each into a sample.
    pub fn generate(&mut self, n: usize, config: &GenerationConfig) -> Result<Vec<GenerationResult>> {
        generate_batch(&self.discriminator, n, config, &mut self.rng)
    }
}

/// Generates `n` samples from fresh noise drawn from `rng`.
pub fn generate_batch(
    d: &Discriminator,
    n: usize,
    config: &GenerationConfig,
    rng: &mut GonRng,
) -> Result<Vec<GenerationResult>> {
    let dim = d.input_dim();
    let starts: Vec<(Vec<f64>, u64)> = (0..n)
        .map(|_| (config.noise_init.sample(dim, rng), rng.random()))
        .collect();
    starts
        .par_iter()
        .map(|(z0, seed)| generate_sample(d, z0, config, &mut rng_from_seed(*seed)))
        .collect()
}
