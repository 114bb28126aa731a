//! Detection metrics, ROC/AUC, and analytic memory accounting.

use std::fmt::Write as _;

use crate::error::{GonError, Result};
use crate::neural::param_count_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_labels(pred: &[bool], truth: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (&p, &t) in pred.iter().zip(truth) {
            match (p, t) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// `2tp / (2tp + fp + fn)`, 0 when undefined.
fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

fn ratio(num: usize, denom: usize) -> Option<f64> {
    (denom > 0).then(|| num as f64 / denom as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationMetrics {
    pub confusion: Confusion,
    /// Anomaly-class precision; 0 when nothing was predicted positive.
    pub precision: f64,
    /// Anomaly-class recall; 0 when there are no true anomalies.
    pub recall: f64,
    pub f1_anomaly: f64,
    /// Mean of anomaly- and normal-class F1. Equals `f1_anomaly` when the
    /// ground truth holds a single class.
    pub f1_macro: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub single_class: bool,
}

pub fn confusion_metrics(pred: &[bool], truth: &[bool]) -> Result<ClassificationMetrics> {
    if pred.len() != truth.len() {
        return Err(GonError::DimensionMismatch {
            context: "prediction/truth length",
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(GonError::data("no labels to evaluate"));
    }
    let c = Confusion::from_labels(pred, truth);
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1_anomaly = f1(c.tp, c.fp, c.fn_);
    let positives = c.tp + c.fn_;
    let single_class = positives == 0 || positives == c.total();
    let f1_macro = if single_class {
        log::warn!("ground truth holds a single class; macro F1 reports the anomaly class only");
        f1_anomaly
    } else {
        // normal class: roles of tp/tn and fp/fn swap
        0.5 * (f1_anomaly + f1(c.tn, c.fn_, c.fp))
    };
    if precision.is_none() {
        log::warn!("precision undefined (no positive predictions); reported as 0");
    }
    Ok(ClassificationMetrics {
        confusion: c,
        precision: precision.unwrap_or(0.0),
        recall: recall.unwrap_or(0.0),
        f1_anomaly,
        f1_macro,
        precision_undefined: precision.is_none(),
        recall_undefined: recall.is_none(),
        single_class,
    })
}

/// Probability that a random anomaly outscores a random normal point, ties
/// counting ½, computed from midranks in `O(n log n)`.
pub fn roc_auc(scores: &[f64], truth: &[bool]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(GonError::DimensionMismatch {
            context: "score/truth length",
            expected: truth.len(),
            actual: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(GonError::NonFinite("ROC scores"));
    }
    let n_pos = truth.iter().filter(|&&t| t).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(GonError::UndefinedMetrics(
            "ROC/AUC needs both classes in the ground truth".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let mid_rank = (i + j + 2) as f64 / 2.0;
        let pos_in_tie = order[i..=j].iter().filter(|&&k| truth[k]).count();
        rank_sum_pos += mid_rank * pos_in_tie as f64;
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Analytic training-memory footprint in 64-bit words:
///
/// ```text
/// parameters      P = Σ out·(in + 1)
/// Adam moments    2P
/// activations     2m · (Σ layer widths + Σ non-input widths)
///                 (forward traces of m real and m generated samples)
/// input batches   2m · d_in (real minibatch and noise minibatch)
/// bytes           8 · (P + 2P + activations + inputs)
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryEstimate {
    pub param_count: usize,
    pub optimizer_values: usize,
    pub activation_values: usize,
    pub input_values: usize,
}

pub const BYTES_PER_VALUE: usize = 8;

impl MemoryEstimate {
    pub fn for_layers(layer_sizes: &[usize], batch_size: usize) -> Self {
        let param_count = param_count_for(layer_sizes);
        let trace: usize = layer_sizes.iter().sum::<usize>() + layer_sizes[1..].iter().sum::<usize>();
        Self {
            param_count,
            optimizer_values: 2 * param_count,
            activation_values: 2 * batch_size * trace,
            input_values: 2 * batch_size * layer_sizes[0],
        }
    }

    pub fn param_bytes(&self) -> usize {
        BYTES_PER_VALUE * self.param_count
    }

    pub fn total_bytes(&self) -> usize {
        BYTES_PER_VALUE * (self.param_count + self.optimizer_values + self.activation_values + self.input_values)
    }

    pub fn gigabytes(&self) -> f64 {
        self.total_bytes() as f64 / (1u64 << 30) as f64
    }
}

pub fn memory_estimate(layer_sizes: &[usize], batch_size: usize) -> MemoryEstimate {
    MemoryEstimate::for_layers(layer_sizes, batch_size)
}

/// Generator of the matched GAN: the discriminator's hidden stack mirrored,
/// mapping a latent vector of the data dimension back to the data dimension.
pub fn mirrored_generator_sizes(discriminator_sizes: &[usize]) -> Vec<usize> {
    let d_in = discriminator_sizes[0];
    let hidden = &discriminator_sizes[1..discriminator_sizes.len() - 1];
    let mut sizes = Vec::with_capacity(hidden.len() + 2);
    sizes.push(d_in);
    sizes.extend(hidden.iter().rev());
    sizes.push(d_in);
    sizes
}

/// Parameters of a GAN with this discriminator plus its mirrored generator.
pub fn gan_param_count(discriminator_sizes: &[usize]) -> usize {
    param_count_for(discriminator_sizes) + param_count_for(&mirrored_generator_sizes(discriminator_sizes))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub dataset: String,
    pub precision: f64,
    pub recall: f64,
    pub f1_anomaly: f64,
    pub f1_macro: f64,
    pub roc_auc: f64,
    pub confusion: Confusion,
    pub memory_bytes: usize,
    pub train_seconds: f64,
    pub test_seconds: f64,
    pub f1_per_gb: f64,
    pub precision_undefined: bool,
    pub single_class: bool,
}

pub const REPORT_CSV_HEADER: &str = "dataset,p,r,f1,f1_macro,auc,mem_bytes,f1_per_gb,train_s,test_s";

impl DetectionReport {
    pub fn new(
        dataset: impl Into<String>,
        metrics: &ClassificationMetrics,
        roc_auc: f64,
        memory_bytes: usize,
        train_seconds: f64,
        test_seconds: f64,
    ) -> Self {
        Self {
            dataset: dataset.into(),
            precision: metrics.precision,
            recall: metrics.recall,
            f1_anomaly: metrics.f1_anomaly,
            f1_macro: metrics.f1_macro,
            roc_auc,
            confusion: metrics.confusion,
            memory_bytes,
            train_seconds,
            test_seconds,
            f1_per_gb: f1_per_gb(metrics.f1_macro, memory_bytes),
            precision_undefined: metrics.precision_undefined,
            single_class: metrics.single_class,
        }
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.dataset,
            self.precision,
            self.recall,
            self.f1_anomaly,
            self.f1_macro,
            self.roc_auc,
            self.memory_bytes,
            self.f1_per_gb,
            self.train_seconds,
            self.test_seconds
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{REPORT_CSV_HEADER}\n{}\n", self.to_csv_row())
    }

    /// Flat `key=value` block, one entry per line.
    pub fn to_kv_text(&self) -> String {
        let mut s = String::new();
        let c = self.confusion;
        let _ = writeln!(s, "dataset={}", self.dataset);
        let _ = writeln!(s, "precision={}", self.precision);
        let _ = writeln!(s, "recall={}", self.recall);
        let _ = writeln!(s, "f1={}", self.f1_anomaly);
        let _ = writeln!(s, "f1_macro={}", self.f1_macro);
        let _ = writeln!(s, "roc_auc={}", self.roc_auc);
        let _ = writeln!(s, "tp={}", c.tp);
        let _ = writeln!(s, "fp={}", c.fp);
        let _ = writeln!(s, "tn={}", c.tn);
        let _ = writeln!(s, "fn={}", c.fn_);
        let _ = writeln!(s, "memory_bytes={}", self.memory_bytes);
        let _ = writeln!(s, "f1_per_gb={}", self.f1_per_gb);
        let _ = writeln!(s, "train_seconds={}", self.train_seconds);
        let _ = writeln!(s, "test_seconds={}", self.test_seconds);
        let _ = writeln!(s, "precision_undefined={}", self.precision_undefined);
        let _ = writeln!(s, "single_class={}", self.single_class);
        s
    }
}

pub fn f1_per_gb(f1_macro: f64, memory_bytes: usize) -> f64 {
    f1_macro / (memory_bytes as f64 / (1u64 << 30) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pairwise_auc(scores: &[f64], truth: &[bool]) -> f64 {
        let (mut wins, mut pairs) = (0.0, 0.0);
        for (i, &ti) in truth.iter().enumerate() {
            for (j, &tj) in truth.iter().enumerate() {
                if ti && !tj {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn perfect_prediction() {
        let truth = [true, false, true, false];
        let m = confusion_metrics(&truth, &truth).unwrap();
        assert_eq!((m.precision, m.recall, m.f1_anomaly, m.f1_macro), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn all_negative_prediction() {
        let truth = [true, false, true, false];
        let m = confusion_metrics(&[false; 4], &truth).unwrap();
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.precision, 0.0);
        assert!(m.precision_undefined);
        assert!(!m.recall_undefined);
    }

    #[test]
    fn hand_computed_confusion() {
        // tp=2, fp=1, fn=1, tn=6
        let pred = [true, true, true, false, false, false, false, false, false, false];
        let truth = [true, true, false, true, false, false, false, false, false, false];
        let m = confusion_metrics(&pred, &truth).unwrap();
        assert_eq!(
            m.confusion,
            Confusion {
                tp: 2,
                fp: 1,
                tn: 6,
                fn_: 1
            }
        );
        assert_relative_eq!(m.precision, 2.0 / 3.0);
        assert_relative_eq!(m.recall, 2.0 / 3.0);
        assert_relative_eq!(m.f1_anomaly, 2.0 / 3.0);
        // normal class: P = R = 6/7
        assert_relative_eq!(m.f1_macro, 0.5 * (2.0 / 3.0 + 6.0 / 7.0), max_relative = 1e-15);
    }

    #[test]
    fn single_class_truth_falls_back() {
        let m = confusion_metrics(&[false, true], &[false, false]).unwrap();
        assert!(m.single_class);
        assert_eq!(m.f1_macro, m.f1_anomaly);
        assert!(confusion_metrics(&[], &[]).is_err());
        assert!(confusion_metrics(&[true], &[true, false]).is_err());
    }

    #[test]
    fn auc_cases() {
        let truth = [false, false, true, true];
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &truth).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.5; 4], &truth).unwrap(), 0.5);
        let scores = [0.3, 0.7, 0.7, 0.1, 0.9, 0.3];
        let truth = [true, false, true, false, true, false];
        assert_relative_eq!(roc_auc(&scores, &truth).unwrap(), pairwise_auc(&scores, &truth));
        assert!(roc_auc(&[0.1, 0.2], &[true, true]).is_err());
    }

    #[test]
    fn memory_for_small_net() {
        let m = memory_estimate(&[4, 128, 1], 64);
        assert_eq!(m.param_count, 769);
        assert_eq!(m.param_bytes(), 6152);
        // trace: (4 + 128 + 1) + (128 + 1) = 262 values per sample
        assert_eq!(m.activation_values, 2 * 64 * 262);
        assert_eq!(m.total_bytes(), 8 * (769 * 3 + 2 * 64 * 262 + 2 * 64 * 4));
    }

    #[test]
    fn mirrored_generator_shape() {
        assert_eq!(mirrored_generator_sizes(&[10, 32, 64, 1]), vec![10, 64, 32, 10]);
        assert_eq!(gan_param_count(&[4, 128, 1]), 769 + (4 * 128 + 128) + (128 * 4 + 4));
    }

    #[test]
    fn report_serialization() {
        let metrics = confusion_metrics(&[true, false], &[true, false]).unwrap();
        let r = DetectionReport::new("toy", &metrics, 1.0, 1 << 30, 1.5, 0.25);
        assert_eq!(r.f1_per_gb, 1.0);
        assert_eq!(r.to_csv_row(), "toy,1,1,1,1,1,1073741824,1,1.5,0.25");
        assert!(r.to_csv().starts_with(REPORT_CSV_HEADER));
        assert!(r.to_kv_text().contains("f1_macro=1\n"));
    }

    proptest! {
        #[test]
        fn auc_matches_pairwise_and_is_rank_invariant(
            pts in proptest::collection::vec((0u8..6, any::<bool>()), 2..40)
        ) {
            let scores: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
            let truth: Vec<bool> = pts.iter().map(|p| p.1).collect();
            prop_assume!(truth.iter().any(|&t| t) && truth.iter().any(|&t| !t));
            let auc = roc_auc(&scores, &truth).unwrap();
            prop_assert!((auc - pairwise_auc(&scores, &truth)).abs() < 1e-12);
            let warped: Vec<f64> = scores.iter().map(|s| (s * 0.7).exp() + 3.0).collect();
            prop_assert!((roc_auc(&warped, &truth).unwrap() - auc).abs() < 1e-12);
        }

        #[test]
        fn macro_f1_symmetric_under_relabeling(
            pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..50)
        ) {
            let pred: Vec<bool> = pairs.iter().map(|p| p.0).collect();
            let truth: Vec<bool> = pairs.iter().map(|p| p.1).collect();
            prop_assume!(truth.iter().any(|&t| t) && truth.iter().any(|&t| !t));
            let a = confusion_metrics(&pred, &truth).unwrap();
            let flip = |v: &[bool]| v.iter().map(|b| !b).collect::<Vec<_>>();
            let b = confusion_metrics(&flip(&pred), &flip(&truth)).unwrap();
            prop_assert!((a.f1_macro - b.f1_macro).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a.f1_macro));
            prop_assert_eq!(a.confusion.total(), pred.len());
        }

        #[test]
        fn memory_monotone(d in 1usize..20, h in 1usize..64, extra in 1usize..32, m in 1usize..128) {
            let base = memory_estimate(&[d, h, h, 1], m).total_bytes();
            prop_assert!(memory_estimate(&[d, h + extra, h, 1], m).total_bytes() > base);
            prop_assert!(memory_estimate(&[d, h, h, 1], m + 1).total_bytes() > base);
        }
    }
}
