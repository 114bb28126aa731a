//! Dataset ingestion (CSV) and synthetic generators: a 2-D Gaussian source
//! and a fault-injected multivariate resource trace.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{GonError, Result};
use crate::neural::Matrix;
use crate::rng::{rng_from_seed, GonRng};
use crate::windows::TimeSeries;

pub const LABEL_COLUMN: &str = "label";

/// Parses a header + comma-separated float body. With `has_labels` the last
/// column must be named `label` and hold 0/1.
pub fn read_csv<R: Read>(reader: R, has_labels: bool) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| GonError::data(format!("unreadable header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(GonError::data("CSV header is empty"));
    }
    let n_cols = header.len();
    let mut dim_names = header;
    if has_labels {
        if dim_names.last().map(String::as_str) != Some(LABEL_COLUMN) {
            return Err(GonError::data(format!(
                "expected a trailing '{LABEL_COLUMN}' column, header is {dim_names:?}"
            )));
        }
        dim_names.pop();
        if dim_names.is_empty() {
            return Err(GonError::data("CSV has a label column but no value columns"));
        }
    }
    let d = dim_names.len();

    let mut values = Vec::new();
    let mut labels = has_labels.then(Vec::new);
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| GonError::Parse {
            row,
            col: 0,
            msg: e.to_string(),
        })?;
        if record.len() != n_cols {
            return Err(GonError::Parse {
                row,
                col: record.len().min(n_cols) + 1,
                msg: format!("expected {n_cols} fields, found {}", record.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| GonError::Parse {
                row,
                col: j + 1,
                msg: format!("not a number: {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(GonError::Parse {
                    row,
                    col: j + 1,
                    msg: format!("non-finite value {cell:?}"),
                });
            }
            if j < d {
                values.push(v);
            } else if let Some(l) = labels.as_mut() {
                if v != 0.0 && v != 1.0 {
                    return Err(GonError::Parse {
                        row,
                        col: j + 1,
                        msg: format!("label must be 0 or 1, got {cell:?}"),
                    });
                }
                l.push(v == 1.0);
            }
        }
    }
    let rows = values.len() / d;
    TimeSeries::new(Matrix::from_vec(rows, d, values)?, dim_names, labels)
}

pub fn load_csv(path: impl AsRef<Path>, has_labels: bool) -> Result<TimeSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| GonError::io(path, e))?;
    read_csv(file, has_labels)
}

/// Writes the CSV layout read by [`read_csv`]; floats use the shortest
/// representation that round-trips exactly.
pub fn write_csv<W: Write>(series: &TimeSeries, mut w: W) -> std::io::Result<()> {
    let mut header = series.dim_names.join(",");
    if series.labels.is_some() {
        header.push(',');
        header.push_str(LABEL_COLUMN);
    }
    writeln!(w, "{header}")?;
    for (t, row) in series.values.iter_rows().enumerate() {
        let mut line = row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        if let Some(l) = &series.labels {
            line.push_str(if l[t] { ",1" } else { ",0" });
        }
        writeln!(w, "{line}")?;
    }
    w.flush()
}

pub fn save_csv(series: &TimeSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| GonError::io(path, e))?;
    write_csv(series, BufWriter::new(file)).map_err(|e| GonError::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianConfig {
    pub n_samples: usize,
    pub mean: [f64; 2],
    pub covariance: [[f64; 2]; 2],
    pub seed: u64,
}

impl Default for GaussianConfig {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            mean: [0.0, 0.0],
            covariance: [[1.0, 0.0], [0.0, 1.0]],
            seed: 0,
        }
    }
}

/// Lower Cholesky factor of a symmetric positive-definite 2 × 2 matrix.
pub fn cholesky_2x2(c: &[[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    let symmetric = (c[0][1] - c[1][0]).abs() <= 1e-12 * (c[0][1].abs() + c[1][0].abs()).max(1.0);
    if !symmetric {
        return Err(GonError::config(format!("covariance {c:?} is not symmetric")));
    }
    if !(c[0][0] > 0.0) {
        return Err(GonError::config(format!("covariance {c:?} is not positive-definite")));
    }
    let l11 = c[0][0].sqrt();
    let l21 = c[1][0] / l11;
    let rem = c[1][1] - l21 * l21;
    if !(rem > 0.0) {
        return Err(GonError::config(format!("covariance {c:?} is not positive-definite")));
    }
    Ok([[l11, 0.0], [l21, rem.sqrt()]])
}

/// Box–Muller pair of independent standard normals.
fn box_muller(rng: &mut GonRng) -> (f64, f64) {
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    (r * (2.0 * PI * u2).cos(), r * (2.0 * PI * u2).sin())
}

/// `n` draws from N(mean, covariance) as an `n × 2` series.
pub fn synth_gaussian(config: &GaussianConfig) -> Result<TimeSeries> {
    let l = cholesky_2x2(&config.covariance)?;
    let mut rng = rng_from_seed(config.seed);
    let mut data = Vec::with_capacity(2 * config.n_samples);
    for _ in 0..config.n_samples {
        let (a, b) = box_muller(&mut rng);
        data.push(config.mean[0] + l[0][0] * a);
        data.push(config.mean[1] + l[1][0] * a + l[1][1] * b);
    }
    TimeSeries::new(
        Matrix::from_vec(config.n_samples, 2, data)?,
        vec!["x".into(), "y".into()],
        None,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseSignal {
    /// Two sinusoids of random period and phase plus white noise.
    SinusoidMix,
    /// Mean-reverting random walk.
    RandomWalk,
}

/// Injected fault classes. Each dimension carries one resource role
/// (`dim % 4`: cpu, ram, disk, net) and a fault perturbs the dimensions of its
/// role.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultType {
    /// Saturation ramp.
    CpuOverload,
    /// Level shift.
    RamContention,
    /// Variance burst.
    DiskAttack,
    /// Spike train.
    DdosAttack,
}

impl FaultType {
    pub const ALL: [FaultType; 4] = [
        FaultType::CpuOverload,
        FaultType::RamContention,
        FaultType::DiskAttack,
        FaultType::DdosAttack,
    ];

    fn role(self) -> usize {
        match self {
            FaultType::CpuOverload => 0,
            FaultType::RamContention => 1,
            FaultType::DiskAttack => 2,
            FaultType::DdosAttack => 3,
        }
    }
}

const ROLE_NAMES: [&str; 4] = ["cpu", "ram", "disk", "net"];

/// How fault start times are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArrivalModel {
    /// Idle gaps between the end of one fault and the start of the next are
    /// i.i.d. Poisson with the configured mean.
    #[default]
    PoissonGaps,
    /// Starts form a Bernoulli process with rate `1/mean` per timestep;
    /// faults may overlap.
    PoissonRate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthFaultConfig {
    pub n_timesteps: usize,
    pub n_dims: usize,
    pub base_signal: BaseSignal,
    pub fault_types: Vec<FaultType>,
    pub interarrival_mean: f64,
    /// Inclusive range of fault durations in timesteps.
    pub duration_range: (usize, usize),
    /// Fault amplitude in units of each dimension's base-signal standard deviation.
    pub magnitude: f64,
    pub noise_std: f64,
    /// Leading timesteps kept fault-free.
    pub clean_prefix: usize,
    pub arrival: ArrivalModel,
    pub seed: u64,
}

impl Default for SynthFaultConfig {
    fn default() -> Self {
        Self {
            n_timesteps: 2000,
            n_dims: 4,
            base_signal: BaseSignal::SinusoidMix,
            fault_types: FaultType::ALL.to_vec(),
            interarrival_mean: 5.0,
            duration_range: (1, 5),
            magnitude: 6.0,
            noise_std: 0.05,
            clean_prefix: 0,
            arrival: ArrivalModel::PoissonGaps,
            seed: 0,
        }
    }
}

impl SynthFaultConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fault_types.is_empty() {
            return Err(GonError::config("no fault types enabled"));
        }
        if self.n_dims == 0 {
            return Err(GonError::config("n_dims must be at least 1"));
        }
        if !(self.interarrival_mean > 0.0) {
            return Err(GonError::config("interarrival mean must be positive"));
        }
        if (self.n_timesteps as f64) < self.interarrival_mean {
            return Err(GonError::config(format!(
                "n_timesteps {} is shorter than the interarrival mean {}",
                self.n_timesteps, self.interarrival_mean
            )));
        }
        let (lo, hi) = self.duration_range;
        if lo == 0 || lo > hi {
            return Err(GonError::config(format!("invalid duration range [{lo}, {hi}]")));
        }
        if !(self.magnitude >= 0.0 && self.noise_std >= 0.0) {
            return Err(GonError::config("magnitude and noise must be non-negative"));
        }
        if self.clean_prefix > self.n_timesteps {
            return Err(GonError::config("clean prefix exceeds the series length"));
        }
        Ok(())
    }
}

fn standard_normal(rng: &mut GonRng) -> f64 {
    box_muller(rng).0
}

fn base_signal(config: &SynthFaultConfig, rng: &mut GonRng) -> Vec<Vec<f64>> {
    let n = config.n_timesteps;
    (0..config.n_dims)
        .map(|_| match config.base_signal {
            BaseSignal::SinusoidMix => {
                let a1 = rng.random_range(0.5..1.0);
                let p1 = rng.random_range(24.0..96.0);
                let a2 = rng.random_range(0.1..0.3);
                let p2 = rng.random_range(5.0..15.0);
                let (ph1, ph2) = (rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI));
                (0..n)
                    .map(|t| {
                        let t = t as f64;
                        a1 * (2.0 * PI * t / p1 + ph1).sin()
                            + a2 * (2.0 * PI * t / p2 + ph2).sin()
                            + config.noise_std * standard_normal(rng)
                    })
                    .collect()
            }
            BaseSignal::RandomWalk => {
                let mut x = 0.0;
                (0..n)
                    .map(|_| {
                        x = 0.98 * x + 0.1 * standard_normal(rng);
                        x + config.noise_std * standard_normal(rng)
                    })
                    .collect()
            }
        })
        .collect()
}

fn std_dev(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Fault intervals `[start, end)` with their types.
fn fault_schedule(config: &SynthFaultConfig, rng: &mut GonRng) -> Result<Vec<(usize, usize, FaultType)>> {
    let n = config.n_timesteps;
    let (dmin, dmax) = config.duration_range;
    let pick = |rng: &mut GonRng| {
        let ty = config.fault_types[rng.random_range(0..config.fault_types.len())];
        (rng.random_range(dmin..=dmax), ty)
    };
    let mut faults = Vec::new();
    match config.arrival {
        ArrivalModel::PoissonGaps => {
            let poisson = Poisson::new(config.interarrival_mean)
                .map_err(|e| GonError::config(format!("bad interarrival mean: {e}")))?;
            let mut t = config.clean_prefix;
            loop {
                let start = t + poisson.sample(rng) as usize;
                if start >= n {
                    break;
                }
                let (dur, ty) = pick(rng);
                let end = (start + dur).min(n);
                faults.push((start, end, ty));
                t = end;
            }
        }
        ArrivalModel::PoissonRate => {
            let rate = 1.0 / config.interarrival_mean;
            for start in config.clean_prefix..n {
                if rng.random::<f64>() < rate {
                    let (dur, ty) = pick(rng);
                    faults.push((start, (start + dur).min(n), ty));
                }
            }
        }
    }
    Ok(faults)
}

/// Fault-injected multivariate trace with ground-truth labels, renormalized
/// to `[0, 1]` per dimension.
pub fn synth_faults(config: &SynthFaultConfig) -> Result<TimeSeries> {
    config.validate()?;
    let mut rng = rng_from_seed(config.seed);
    let n = config.n_timesteps;
    let d = config.n_dims;
    let mut signal = base_signal(config, &mut rng);
    let scale: Vec<f64> = signal.iter().map(|s| std_dev(s).max(1e-6)).collect();
    let mut labels = vec![false; n];

    for (start, end, ty) in fault_schedule(config, &mut rng)? {
        let mut dims: Vec<usize> = (0..d).filter(|j| j % 4 == ty.role()).collect();
        if dims.is_empty() {
            dims.push(ty.role() % d);
        }
        let amp = config.magnitude;
        let level = rng.random_range(0.8..1.2);
        let len = end - start;
        for (k, t) in (start..end).enumerate() {
            labels[t] = true;
            for &j in &dims {
                let offset = match ty {
                    FaultType::CpuOverload => 0.6 + 0.4 * (k + 1) as f64 / len as f64,
                    FaultType::RamContention => level,
                    FaultType::DiskAttack => {
                        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        sign * rng.random_range(0.7..1.3)
                    }
                    FaultType::DdosAttack => rng.random_range(0.8..1.6),
                };
                signal[j][t] += amp * scale[j] * offset;
            }
        }
    }

    for s in &mut signal {
        let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        for v in s.iter_mut() {
            *v = if range > 0.0 { (*v - lo) / range } else { 0.0 };
        }
    }
    let mut data = Vec::with_capacity(n * d);
    for t in 0..n {
        data.extend(signal.iter().map(|s| s[t]));
    }
    let names = (0..d).map(|j| format!("{}_{}", ROLE_NAMES[j % 4], j / 4)).collect();
    TimeSeries::new(Matrix::from_vec(n, d, data)?, names, Some(labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_plain_and_labeled() {
        let s = read_csv("a,b\n1,2\n3,4\n5,6\n".as_bytes(), false).unwrap();
        assert_eq!((s.len(), s.dims()), (3, 2));
        assert_eq!(s.dim_names, vec!["a", "b"]);
        assert_eq!(s.row(2), &[5.0, 6.0]);
        assert!(s.labels.is_none());

        let s = read_csv("a,b,label\n1,2,0\n3,4,1\n".as_bytes(), true).unwrap();
        assert_eq!(s.dims(), 2);
        assert_eq!(s.labels, Some(vec![false, true]));
    }

    #[test]
    fn parse_errors_name_location() {
        let err = read_csv("a,b\n1,2\n3,abc\n".as_bytes(), false).unwrap_err();
        match err {
            GonError::Parse { row, col, .. } => assert_eq!((row, col), (2, 2)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            read_csv("a,b\n1,2\n3\n".as_bytes(), false),
            Err(GonError::Parse { row: 2, .. })
        ));
        assert!(read_csv("a,b\n1,2\n".as_bytes(), true).is_err());
        assert!(read_csv("a,label\n1,2\n".as_bytes(), true).is_err());
    }

    #[test]
    fn csv_round_trip_exact() {
        let series = TimeSeries::new(
            Matrix::from_rows(&[vec![0.1, -1e-300], vec![1.0 / 3.0, 12345.678e10]]).unwrap(),
            vec!["p".into(), "q".into()],
            Some(vec![true, false]),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&series, &mut buf).unwrap();
        assert!(!buf.contains(&b'\r'));
        let back = read_csv(buf.as_slice(), true).unwrap();
        assert_eq!(back, series);
    }

    #[test]
    fn gaussian_moments_and_determinism() {
        let cfg = GaussianConfig {
            n_samples: 10_000,
            ..GaussianConfig::default()
        };
        let s = synth_gaussian(&cfg).unwrap();
        for j in 0..2 {
            let m = s.values.column(j).iter().sum::<f64>() / 10_000.0;
            assert!(m.abs() < 0.05, "mean {m}");
        }
        assert_eq!(s, synth_gaussian(&cfg).unwrap());
        let other = synth_gaussian(&GaussianConfig { seed: 1, ..cfg.clone() }).unwrap();
        assert_ne!(s, other);
    }

    #[test]
    fn gaussian_covariance_is_applied() {
        let cfg = GaussianConfig {
            n_samples: 50_000,
            mean: [1.0, -2.0],
            covariance: [[2.0, 0.8], [0.8, 1.0]],
            seed: 4,
        };
        let s = synth_gaussian(&cfg).unwrap();
        let (x, y) = (s.values.column(0), s.values.column(1));
        let (mx, my) = (x.iter().sum::<f64>() / 5e4, y.iter().sum::<f64>() / 5e4);
        let cxy = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / 5e4;
        assert!((mx - 1.0).abs() < 0.03 && (my + 2.0).abs() < 0.03);
        assert!((cxy - 0.8).abs() < 0.05, "cov {cxy}");
    }

    #[test]
    fn rejects_non_spd() {
        let cfg = GaussianConfig {
            covariance: [[1.0, 2.0], [2.0, 1.0]],
            ..GaussianConfig::default()
        };
        assert!(synth_gaussian(&cfg).is_err());
        let cfg = GaussianConfig {
            covariance: [[1.0, 0.1], [0.2, 1.0]],
            ..GaussianConfig::default()
        };
        assert!(synth_gaussian(&cfg).is_err());
    }

    #[test]
    fn faults_require_types() {
        let cfg = SynthFaultConfig {
            fault_types: vec![],
            ..SynthFaultConfig::default()
        };
        assert!(synth_faults(&cfg).is_err());
    }

    #[test]
    fn fault_series_shape_and_range() {
        let cfg = SynthFaultConfig::default();
        let s = synth_faults(&cfg).unwrap();
        assert_eq!(s.len(), cfg.n_timesteps);
        assert_eq!(s.dims(), 4);
        assert_eq!(s.dim_names, vec!["cpu_0", "ram_0", "disk_0", "net_0"]);
        assert!(s.values.data().iter().all(|v| (0.0..=1.0).contains(v)));
        let labels = s.labels.as_ref().unwrap();
        assert!(labels.iter().any(|&l| l));
        assert_eq!(s, synth_faults(&cfg).unwrap());
    }

    #[test]
    fn clean_prefix_has_no_faults() {
        let cfg = SynthFaultConfig {
            clean_prefix: 700,
            n_timesteps: 1000,
            ..SynthFaultConfig::default()
        };
        let s = synth_faults(&cfg).unwrap();
        let labels = s.labels.unwrap();
        assert!(labels[..700].iter().all(|&l| !l));
        assert!(labels[700..].iter().any(|&l| l));
    }

    #[test]
    fn labels_match_schedule() {
        let cfg = SynthFaultConfig {
            n_timesteps: 500,
            ..SynthFaultConfig::default()
        };
        let mut rng = rng_from_seed(cfg.seed);
        let _ = base_signal(&cfg, &mut rng);
        let schedule = fault_schedule(&cfg, &mut rng).unwrap();
        let mut expected = vec![false; cfg.n_timesteps];
        for (a, b, _) in schedule {
            expected[a..b].iter_mut().for_each(|l| *l = true);
        }
        assert_eq!(synth_faults(&cfg).unwrap().labels.unwrap(), expected);
    }

    #[test]
    fn single_dimension_still_perturbed() {
        let cfg = SynthFaultConfig {
            n_dims: 1,
            fault_types: vec![FaultType::DdosAttack],
            ..SynthFaultConfig::default()
        };
        let s = synth_faults(&cfg).unwrap();
        let labels = s.labels.as_ref().unwrap();
        let col = s.values.column(0);
        let mean = |pred: bool| {
            let v: Vec<f64> = col
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == pred)
                .map(|(v, _)| *v)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean(true) > mean(false) + 0.2);
    }

    #[test]
    fn rate_arrival_model_runs() {
        let cfg = SynthFaultConfig {
            arrival: ArrivalModel::PoissonRate,
            base_signal: BaseSignal::RandomWalk,
            ..SynthFaultConfig::default()
        };
        let s = synth_faults(&cfg).unwrap();
        let frac = s.labels.unwrap().iter().filter(|&&l| l).count() as f64 / cfg.n_timesteps as f64;
        assert!(frac > 0.2 && frac < 0.6, "fraction {frac}");
    }
}
