//! Sliding windows over multivariate series and the reconstruction score.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{GonError, Result};
use crate::gon::{generate_sample, GenerationConfig};
use crate::neural::{Discriminator, Matrix};
use crate::rng::{derive_seed, rng_from_seed};

/// A `T × d` multivariate series with optional per-timestep labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub values: Matrix,
    pub dim_names: Vec<String>,
    pub labels: Option<Vec<bool>>,
}

impl TimeSeries {
    pub fn new(values: Matrix, dim_names: Vec<String>, labels: Option<Vec<bool>>) -> Result<Self> {
        if dim_names.len() != values.cols() {
            return Err(GonError::DimensionMismatch {
                context: "dimension names",
                expected: values.cols(),
                actual: dim_names.len(),
            });
        }
        if let Some(l) = &labels {
            if l.len() != values.rows() {
                return Err(GonError::DimensionMismatch {
                    context: "label count",
                    expected: values.rows(),
                    actual: l.len(),
                });
            }
        }
        if !values.is_finite() {
            return Err(GonError::data("series contains non-finite values"));
        }
        Ok(Self {
            values,
            dim_names,
            labels,
        })
    }

    /// Unlabeled series with generated column names `x0, x1, …`.
    pub fn from_values(values: Matrix) -> Result<Self> {
        let names = (0..values.cols()).map(|i| format!("x{i}")).collect();
        Self::new(values, names, None)
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn dims(&self) -> usize {
        self.values.cols()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        self.values.row(t)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.iter_rows().map(<[f64]>::to_vec).collect()
    }

    /// Rows `[start, end)` as a new series, labels included.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(GonError::config(format!(
                "invalid slice [{start}, {end}) of a series of length {}",
                self.len()
            )));
        }
        let d = self.dims();
        let values = Matrix::from_vec(end - start, d, self.values.data()[start * d..end * d].to_vec())?;
        Self::new(
            values,
            self.dim_names.clone(),
            self.labels.as_ref().map(|l| l[start..end].to_vec()),
        )
    }
}

/// One flattened `K × d` window per timestep; window `t` ends at row `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSeries {
    pub window_len: usize,
    pub dim: usize,
    pub windows: Vec<Vec<f64>>,
}

impl WindowedSeries {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn flat_len(&self) -> usize {
        self.window_len * self.dim
    }
}

/// Windows of length `k` with replication padding: positions before the
/// series start repeat row 0.
pub fn make_windows(series: &TimeSeries, k: usize) -> Result<WindowedSeries> {
    if k == 0 {
        return Err(GonError::config("window length must be at least 1"));
    }
    if series.is_empty() {
        return Err(GonError::data("cannot window an empty series"));
    }
    let d = series.dims();
    let windows = (0..series.len())
        .map(|t| {
            let mut w = Vec::with_capacity(k * d);
            for offset in (0..k).rev() {
                w.extend_from_slice(series.row(t.saturating_sub(offset)));
            }
            w
        })
        .collect();
    Ok(WindowedSeries {
        window_len: k,
        dim: d,
        windows,
    })
}

/// Per-dimension min–max scaling to `[0, 1]`, fitted on one series and
/// applied to others. Constant dimensions map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(series: &TimeSeries) -> Result<Self> {
        if series.is_empty() {
            return Err(GonError::data("cannot fit a scaler on an empty series"));
        }
        let d = series.dims();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for row in series.values.iter_rows() {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(Self { min, max })
    }

    pub fn transform_value(&self, j: usize, v: f64) -> f64 {
        let range = self.max[j] - self.min[j];
        if range > 0.0 {
            (v - self.min[j]) / range
        } else {
            0.0
        }
    }

    pub fn transform(&self, series: &TimeSeries) -> Result<TimeSeries> {
        if series.dims() != self.min.len() {
            return Err(GonError::DimensionMismatch {
                context: "scaler dimensions",
                expected: self.min.len(),
                actual: series.dims(),
            });
        }
        let d = series.dims();
        let data = series
            .values
            .data()
            .iter()
            .enumerate()
            .map(|(i, &v)| self.transform_value(i % d, v))
            .collect();
        TimeSeries::new(
            Matrix::from_vec(series.len(), d, data)?,
            series.dim_names.clone(),
            series.labels.clone(),
        )
    }
}

/// Starting point of the reconstruction ascent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReconInit {
    /// Start from the input window itself.
    #[default]
    Input,
    /// Start from fresh noise drawn per the generation config.
    Noise,
}

/// Reconstruction `x̂` of window `x`: the generation loop's `z*`.
pub fn reconstruct<R: Rng + ?Sized>(
    d: &Discriminator,
    x: &[f64],
    config: &GenerationConfig,
    init: ReconInit,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if x.len() != d.input_dim() {
        return Err(GonError::DimensionMismatch {
            context: "reconstruction window",
            expected: d.input_dim(),
            actual: x.len(),
        });
    }
    let z0 = match init {
        ReconInit::Input => x.to_vec(),
        ReconInit::Noise => config.noise_init.sample(x.len(), rng),
    };
    Ok(generate_sample(d, &z0, config, rng)?.z_star)
}

/// L2 distance between the final time-step slices (last `d` entries).
pub fn anomaly_score(x: &[f64], x_hat: &[f64], k: usize, d: usize) -> Result<f64> {
    let n = k * d;
    if x.len() != n || x_hat.len() != n {
        return Err(GonError::DimensionMismatch {
            context: "anomaly score window",
            expected: n,
            actual: if x.len() != n { x.len() } else { x_hat.len() },
        });
    }
    Ok(x[n - d..]
        .iter()
        .zip(&x_hat[n - d..])
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Scores every window; each window gets its own RNG stream so the result
/// does not depend on scheduling.
pub fn score_windows(
    d: &Discriminator,
    windows: &WindowedSeries,
    config: &GenerationConfig,
    init: ReconInit,
    seed: u64,
) -> Result<Vec<f64>> {
    windows
        .windows
        .par_iter()
        .enumerate()
        .map(|(t, x)| {
            let mut rng = rng_from_seed(derive_seed(seed, t as u64));
            let x_hat = reconstruct(d, x, config, init, &mut rng)?;
            anomaly_score(x, &x_hat, windows.window_len, windows.dim)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::Activation;
    use proptest::prelude::*;

    fn series(rows: &[Vec<f64>]) -> TimeSeries {
        TimeSeries::from_values(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn replication_padding() {
        let (a, b, c) = (vec![1.0, 10.0], vec![2.0, 20.0], vec![3.0, 30.0]);
        let s = series(&[a.clone(), b.clone(), c.clone()]);
        let w = make_windows(&s, 2).unwrap();
        assert_eq!(w.windows[0], [a.clone(), a.clone()].concat());
        assert_eq!(w.windows[1], [a.clone(), b.clone()].concat());
        assert_eq!(w.windows[2], [b, c].concat());
    }

    #[test]
    fn window_len_one_is_identity() {
        let s = series(&[vec![1.0], vec![2.0], vec![5.0]]);
        let w = make_windows(&s, 1).unwrap();
        assert_eq!(w.windows, s.rows());
    }

    #[test]
    fn window_longer_than_series() {
        let s = series(&[vec![7.0], vec![8.0]]);
        let w = make_windows(&s, 4).unwrap();
        assert_eq!(w.windows[0], vec![7.0; 4]);
        assert_eq!(w.windows[1], vec![7.0, 7.0, 7.0, 8.0]);
    }

    #[test]
    fn windowing_errors() {
        let s = series(&[vec![1.0]]);
        assert!(make_windows(&s, 0).is_err());
        let empty = TimeSeries::from_values(Matrix::zeros(0, 2)).unwrap();
        assert!(make_windows(&empty, 3).is_err());
    }

    #[test]
    fn score_uses_last_slice_only() {
        let x = [9.0, -4.0, 1.0, 2.0];
        let xh = [0.0, 100.0, 1.0, 0.0];
        assert_eq!(anomaly_score(&x, &xh, 2, 2).unwrap(), 2.0);
        assert_eq!(anomaly_score(&x, &x, 2, 2).unwrap(), 0.0);
        assert!(anomaly_score(&x, &xh[..3], 2, 2).is_err());
    }

    #[test]
    fn zero_network_reconstructs_exactly() {
        let d = Discriminator::zeros(&[4, 8, 1], Activation::default()).unwrap();
        let x = [0.1, 0.2, 0.3, 0.4];
        let cfg = GenerationConfig::default();
        let xh = reconstruct(&d, &x, &cfg, ReconInit::Input, &mut rng_from_seed(0)).unwrap();
        assert_eq!(xh, x);
        assert_eq!(anomaly_score(&x, &xh, 2, 2).unwrap(), 0.0);
        assert!(reconstruct(&d, &x[..3], &cfg, ReconInit::Input, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn scaler_fits_train_only() {
        let train = series(&[vec![0.0, 5.0], vec![10.0, 5.0]]);
        let test = series(&[vec![5.0, 7.0], vec![20.0, 5.0]]);
        let scaler = MinMaxScaler::fit(&train).unwrap();
        let t = scaler.transform(&test).unwrap();
        assert_eq!(t.rows(), vec![vec![0.5, 0.0], vec![2.0, 0.0]]);
    }

    #[test]
    fn slice_keeps_labels() {
        let s = TimeSeries::new(
            Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap(),
            vec!["a".into()],
            Some(vec![false, true, false]),
        )
        .unwrap();
        let tail = s.slice(1, 3).unwrap();
        assert_eq!(tail.rows(), vec![vec![2.0], vec![3.0]]);
        assert_eq!(tail.labels, Some(vec![true, false]));
        assert!(s.slice(2, 2).is_err());
    }

    proptest! {
        #[test]
        fn window_invariants(t in 1usize..40, d in 1usize..4, k in 1usize..12, seed in 0u64..1000) {
            let rows: Vec<Vec<f64>> = (0..t)
                .map(|i| (0..d).map(|j| ((i * 31 + j * 7) as u64 ^ seed) as f64).collect())
                .collect();
            let s = series(&rows);
            let w = make_windows(&s, k).unwrap();
            prop_assert_eq!(w.len(), t);
            for (i, win) in w.windows.iter().enumerate() {
                prop_assert_eq!(win.len(), k * d);
                prop_assert_eq!(&win[(k - 1) * d..], s.row(i));
            }
        }

        #[test]
        fn score_properties(
            a in proptest::collection::vec(-5.0f64..5.0, 6),
            b in proptest::collection::vec(-5.0f64..5.0, 6),
            noise in proptest::collection::vec(-5.0f64..5.0, 4),
        ) {
            let s = anomaly_score(&a, &b, 3, 2).unwrap();
            prop_assert!(s >= 0.0);
            let oracle = ((a[4] - b[4]).powi(2) + (a[5] - b[5]).powi(2)).sqrt();
            prop_assert!((s - oracle).abs() <= 1e-12 * (1.0 + oracle));
            let mut a2 = a.clone();
            a2[..4].copy_from_slice(&noise);
            prop_assert_eq!(anomaly_score(&a2, &b, 3, 2).unwrap(), s);
            let mut b2 = b.clone();
            b2[4..].copy_from_slice(&a[4..]);
            prop_assert_eq!(anomaly_score(&a, &b2, 3, 2).unwrap(), 0.0);
        }
    }
}
