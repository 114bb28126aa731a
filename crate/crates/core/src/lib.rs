//! Generative optimization networks (GON).
//!
//! A GON has no generator network. Samples are produced by gradient ascent of
//! `log D(z)` in the input space of a single discriminator `D`, and the
//! discriminator is trained to separate real data from those optimized
//! samples. This crate implements the model, its minibatch training loop, and
//! a reconstruction-based anomaly detector for multivariate time series with
//! Peaks-Over-Threshold labeling.
//!
//! Module map:
//!
//! - [`neural`]: the MLP discriminator with exact reverse-mode gradients.
//! - [`optim`]: Adam with decoupled weight decay and a cosine warm-restart schedule.
//! - [`gon`]: input-space sample generation and discriminator training.
//! - [`windows`]: sliding windows, normalization, and reconstruction scores.
//! - [`pot`]: Peaks-Over-Threshold thresholding with a GPD tail fit.
//! - [`eval`]: detection metrics, ROC/AUC, and memory accounting.
//! - [`data`]: CSV ingestion and synthetic data generators.
//! - [`pipeline`]: end-to-end experiments and the F1/GB sweep.

// `!(x > 0.0)` is how validation rejects NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod eval;
pub mod gon;
pub mod neural;
pub mod optim;
pub mod pipeline;
pub mod pot;
pub mod rng;
pub mod windows;

pub use error::{ErrorCategory, GonError, Result};
pub use eval::{DetectionReport, MemoryEstimate};
pub use gon::{GenerationConfig, GenerationResult, NoiseInit, StopMode, TrainConfig, Trainer};
pub use neural::{Activation, Discriminator, Matrix};
pub use optim::{AdamState, LrSchedule};
pub use pipeline::{DatasetSpec, ExperimentConfig, ExperimentOutcome, LayerPlan};
pub use pot::{PotConfig, PotModel};
pub use windows::{ReconInit, TimeSeries, WindowedSeries};
