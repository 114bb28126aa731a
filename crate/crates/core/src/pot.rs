//! Peaks-Over-Threshold thresholding.
//!
//! Scores above an initial empirical quantile `t` are treated as a sample of
//! excesses from a Generalized Pareto distribution GPD(ξ, σ). The tail is fit
//! by maximum likelihood using Grimshaw's reduction to a one-dimensional root
//! search, and the anomaly threshold at risk `q` is
//!
//! ```text
//! z_q = t + (σ/ξ)·((q·n/N_t)^(−ξ) − 1)      (→ t + σ·ln(N_t/(q·n)) as ξ → 0)
//! ```

use crate::error::{GonError, Result};

pub const MIN_SCORES: usize = 30;
pub const MIN_PEAKS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotConfig {
    /// Risk level q.
    pub risk: f64,
    /// Fraction of scores above the initial threshold.
    pub init_level: f64,
}

impl Default for PotConfig {
    fn default() -> Self {
        Self {
            risk: 1e-4,
            init_level: 0.07,
        }
    }
}

impl PotConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.risk > 0.0 && self.risk < 1.0) {
            return Err(GonError::config(format!(
                "POT risk must lie in (0, 1), got {}",
                self.risk
            )));
        }
        if !(self.init_level > 0.0 && self.init_level < 1.0) {
            return Err(GonError::config(format!(
                "POT init level must lie in (0, 1), got {}",
                self.init_level
            )));
        }
        Ok(())
    }
}

/// How the tail parameters were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailFit {
    /// A likelihood-equation root (or the exponential candidate) maximized the likelihood.
    Grimshaw,
    /// Method-of-moments fallback.
    Moments,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailEstimate {
    pub shape: f64,
    pub scale: f64,
    pub method: TailFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotModel {
    pub init_threshold: f64,
    pub peaks: Vec<f64>,
    pub gpd_shape: f64,
    pub gpd_scale: f64,
    pub risk: f64,
    pub n_total: usize,
    pub n_peaks: usize,
    pub final_threshold: f64,
    pub method: TailFit,
}

impl PotModel {
    /// Threshold for another risk level under the same fit.
    pub fn threshold_at(&self, risk: f64) -> f64 {
        pot_quantile(
            self.init_threshold,
            self.gpd_shape,
            self.gpd_scale,
            risk,
            self.n_total,
            self.n_peaks,
        )
    }
}

/// Linear-interpolation empirical quantile of ascending `sorted`.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `t + (σ/ξ)((q·n/N_t)^(−ξ) − 1)`, evaluated as `σ·expm1(−ξ·ln r)/ξ` so the
/// ξ → 0 limit `σ·ln(1/r)` is continuous.
pub fn pot_quantile(t: f64, shape: f64, scale: f64, risk: f64, n_total: usize, n_peaks: usize) -> f64 {
    let r = risk * n_total as f64 / n_peaks as f64;
    let ln_r = r.ln();
    if shape == 0.0 {
        t - scale * ln_r
    } else {
        t + scale * (-shape * ln_r).exp_m1() / shape
    }
}

/// GPD log-likelihood of `peaks`; `−∞` outside the support.
pub fn gpd_log_likelihood(peaks: &[f64], shape: f64, scale: f64) -> f64 {
    if !(scale > 0.0) {
        return f64::NEG_INFINITY;
    }
    let n = peaks.len() as f64;
    if shape == 0.0 {
        return -n * scale.ln() - peaks.iter().sum::<f64>() / scale;
    }
    let mut acc = 0.0;
    for &y in peaks {
        let s = 1.0 + shape * y / scale;
        if s <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += s.ln();
    }
    -n * scale.ln() - (1.0 + 1.0 / shape) * acc
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Grimshaw's reduced likelihood equation `w(x) = u(x)·v(x) − 1` with
/// `u = mean(1/(1 + x·y))`, `v = 1 + mean(ln(1 + x·y))`, where `x = ξ/σ`.
fn grimshaw_w(peaks: &[f64], x: f64) -> f64 {
    let (mut u, mut v) = (0.0, 0.0);
    for &y in peaks {
        let s = 1.0 + x * y;
        u += 1.0 / s;
        v += s.ln();
    }
    let n = peaks.len() as f64;
    (u / n) * (1.0 + v / n) - 1.0
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}

/// Bisection on a bracketing pair.
fn refine_root(peaks: &[f64], mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a.min(b) || mid >= a.max(b) {
            break;
        }
        let fm = grimshaw_w(peaks, mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

fn roots_on(peaks: &[f64], grid: &[f64]) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &x in grid {
        let fx = grimshaw_w(peaks, x);
        if !fx.is_finite() {
            prev = None;
            continue;
        }
        if let Some((px, pf)) = prev {
            if fx == 0.0 {
                roots.push(x);
            } else if pf != 0.0 && (pf < 0.0) != (fx < 0.0) {
                roots.push(refine_root(peaks, px, x, pf));
            }
        }
        prev = Some((x, fx));
    }
    roots
}

/// Candidate roots of the likelihood equation, scanned over Grimshaw's
/// bracket `(−1/max(y), 2(ȳ − min y)/min(y)²]` on log-spaced grids that
/// avoid the trivial root at 0.
fn grimshaw_roots(peaks: &[f64]) -> Vec<f64> {
    let y_max = peaks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let y_min = peaks.iter().cloned().fold(f64::INFINITY, f64::min);
    let y_mean = mean(peaks);

    // negative side: x = −r/y_max with r ∈ (0, 1), dense near both ends
    let mut left: Vec<f64> = log_grid(1e-5, 0.5, 80)
        .chain(
            log_grid(1e-10, 0.5, 80)
                .map(|e| 1.0 - e)
                .collect::<Vec<_>>()
                .into_iter()
                .rev(),
        )
        .map(|r| -r / y_max)
        .collect();
    left.sort_by(|a, b| a.partial_cmp(b).unwrap());
    left.dedup();
    let mut roots = roots_on(peaks, &left);

    let upper = 2.0 * (y_mean - y_min) / (y_min * y_min);
    let lower = 1e-5 / y_mean;
    if upper.is_finite() && upper > lower {
        let decades = (upper / lower).log10().ceil().max(1.0) as usize;
        let right: Vec<f64> = log_grid(lower, upper, 20 * decades + 1).collect();
        roots.extend(roots_on(peaks, &right));
    }
    roots
}

/// Maximum-likelihood GPD fit via Grimshaw's roots. Returns `None` when no
/// admissible root exists.
pub fn grimshaw(peaks: &[f64]) -> Option<(f64, f64)> {
    if peaks.len() < MIN_PEAKS || peaks.iter().any(|&y| !(y > 0.0 && y.is_finite())) {
        return None;
    }
    let y_mean = mean(peaks);
    let mut best: Option<(f64, f64, f64)> = None;
    let mut found = false;
    for x in grimshaw_roots(peaks) {
        let shape = peaks.iter().map(|&y| (x * y).ln_1p()).sum::<f64>() / peaks.len() as f64;
        let scale = shape / x;
        if !(shape.is_finite() && scale > 0.0 && scale.is_finite()) {
            continue;
        }
        found = true;
        let ll = gpd_log_likelihood(peaks, shape, scale);
        if ll.is_finite() && best.is_none_or(|b| ll > b.2) {
            best = Some((shape, scale, ll));
        }
    }
    if !found {
        return None;
    }
    // the exponential (ξ = 0) candidate always competes
    let ll_exp = gpd_log_likelihood(peaks, 0.0, y_mean);
    match best {
        Some((shape, scale, ll)) if ll > ll_exp => Some((shape, scale)),
        _ => Some((0.0, y_mean)),
    }
}

/// Moment estimates, with ξ held at or above −1 so σ stays bounded when the
/// excesses have (near) zero variance.
pub fn method_of_moments(peaks: &[f64]) -> (f64, f64) {
    let m = mean(peaks);
    let var = peaks.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / peaks.len() as f64;
    let shape = if var > 0.0 {
        (0.5 * (1.0 - m * m / var)).max(-1.0)
    } else {
        -1.0
    };
    (shape, m * (1.0 - shape))
}

fn is_degenerate(peaks: &[f64]) -> bool {
    let m = mean(peaks);
    peaks.iter().all(|&y| (y - m).abs() <= 1e-12 * m.abs())
}

/// GPD fit of positive excesses: Grimshaw, falling back to moments when the
/// excesses are degenerate or no likelihood root is found.
pub fn fit_tail(peaks: &[f64]) -> Result<TailEstimate> {
    if peaks.len() < MIN_PEAKS {
        return Err(GonError::TooFewPeaks {
            found: peaks.len(),
            needed: MIN_PEAKS,
        });
    }
    if peaks.iter().any(|&y| !(y > 0.0 && y.is_finite())) {
        return Err(GonError::data("excesses must be positive and finite"));
    }
    let grimshaw_fit = if is_degenerate(peaks) { None } else { grimshaw(peaks) };
    Ok(match grimshaw_fit {
        Some((shape, scale)) => TailEstimate {
            shape,
            scale,
            method: TailFit::Grimshaw,
        },
        None => {
            let (shape, scale) = method_of_moments(peaks);
            log::debug!("POT tail fit fell back to moments: ξ={shape} σ={scale}");
            TailEstimate {
                shape,
                scale,
                method: TailFit::Moments,
            }
        }
    })
}

/// Static POT fit over a full score series.
pub fn fit_pot(scores: &[f64], config: &PotConfig) -> Result<PotModel> {
    config.validate()?;
    if scores.len() < MIN_SCORES {
        return Err(GonError::data(format!(
            "POT needs at least {MIN_SCORES} scores, got {}",
            scores.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(GonError::NonFinite("anomaly scores"));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(GonError::Degenerate(format!(
            "all {} scores equal {}",
            scores.len(),
            sorted[0]
        )));
    }
    let t = empirical_quantile(&sorted, 1.0 - config.init_level);
    let peaks: Vec<f64> = scores.iter().filter(|&&s| s > t).map(|&s| s - t).collect();
    if peaks.len() < MIN_PEAKS {
        return Err(GonError::TooFewPeaks {
            found: peaks.len(),
            needed: MIN_PEAKS,
        });
    }
    let tail = fit_tail(&peaks)?;
    let n_peaks = peaks.len();
    let final_threshold = pot_quantile(t, tail.shape, tail.scale, config.risk, scores.len(), n_peaks);
    if !final_threshold.is_finite() {
        return Err(GonError::NonFinite("POT threshold"));
    }
    Ok(PotModel {
        init_threshold: t,
        peaks,
        gpd_shape: tail.shape,
        gpd_scale: tail.scale,
        risk: config.risk,
        n_total: scores.len(),
        n_peaks,
        final_threshold,
        method: tail.method,
    })
}

/// `score > z_q`, strictly.
pub fn label(scores: &[f64], model: &PotModel) -> Vec<bool> {
    label_with_threshold(scores, model.final_threshold)
}

pub fn label_with_threshold(scores: &[f64], threshold: f64) -> Vec<bool> {
    scores.iter().map(|&s| s > threshold).collect()
}
