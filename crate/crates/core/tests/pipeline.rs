use gon_core::data::SynthFaultConfig;
use gon_core::eval::f1_per_gb;
use gon_core::pipeline::{f1_per_gb_sweep, run_experiment, DatasetSpec, ExperimentConfig, LayerPlan};
use gon_core::{GenerationConfig, GonError, Matrix, PotConfig, TimeSeries, TrainConfig};

fn small(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        dataset: DatasetSpec::Synthetic {
            config: SynthFaultConfig {
                n_timesteps: 400,
                n_dims: 2,
                magnitude: 6.0,
                ..SynthFaultConfig::default()
            },
            train_len: 200,
        },
        window: 2,
        layers: LayerPlan {
            hidden_width: 16,
            hidden_layers: 1,
            ..LayerPlan::default()
        },
        train: TrainConfig {
            epochs: 3,
            batch_size: 32,
            gen_config: GenerationConfig {
                max_iters: 15,
                ..GenerationConfig::default()
            },
            ..TrainConfig::default()
        },
        recon: GenerationConfig {
            max_iters: 20,
            ..GenerationConfig::default()
        },
        pot: PotConfig {
            init_level: 0.1,
            ..PotConfig::default()
        },
        seed,
        ..ExperimentConfig::default()
    }
}

fn read(path: &std::path::Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn rerun_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        run_experiment(&ExperimentConfig {
            out_dir: Some(dir.path().to_path_buf()),
            ..small(5)
        })
        .unwrap();
    }
    for f in ["scores.csv", "labels.csv", "model.gon1", "model.meta"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f} differs");
    }
    let other = tempfile::tempdir().unwrap();
    run_experiment(&ExperimentConfig {
        out_dir: Some(other.path().to_path_buf()),
        ..small(6)
    })
    .unwrap();
    assert_ne!(
        read(&a.path().join("model.gon1")),
        read(&other.path().join("model.gon1"))
    );
}

#[test]
fn artifacts_and_report_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&ExperimentConfig {
        out_dir: Some(dir.path().to_path_buf()),
        ..small(0)
    })
    .unwrap();
    let r = &out.report;
    assert_eq!(r.f1_per_gb, f1_per_gb(r.f1_macro, r.memory_bytes));
    assert_eq!(r.f1_per_gb, r.f1_macro / (r.memory_bytes as f64 / (1u64 << 30) as f64));
    let scores = std::fs::read_to_string(dir.path().join("scores.csv")).unwrap();
    assert_eq!(scores.lines().next(), Some("t,score"));
    assert_eq!(scores.lines().count(), 201);
    let labels = std::fs::read_to_string(dir.path().join("labels.csv")).unwrap();
    assert_eq!(labels.lines().next(), Some("t,pred,truth"));
    let report = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(report.starts_with("dataset,p,r,f1,f1_macro,auc,mem_bytes,f1_per_gb,train_s,test_s\n"));
    assert!(dir.path().join("report.txt").exists());
}

fn in_memory(test_labels: Vec<bool>, test_shift: f64) -> DatasetSpec {
    let full = gon_core::data::synth_faults(&SynthFaultConfig {
        n_timesteps: 400,
        n_dims: 2,
        clean_prefix: 400,
        ..SynthFaultConfig::default()
    })
    .unwrap();
    let train = full.slice(0, 200).unwrap();
    let mut test_values = full.slice(200, 400).unwrap().values;
    test_values.data_mut().iter_mut().for_each(|v| *v += test_shift);
    let test = TimeSeries::new(test_values, full.dim_names.clone(), Some(test_labels)).unwrap();
    DatasetSpec::InMemory {
        name: "mem".into(),
        train: TimeSeries::new(train.values, train.dim_names, None).unwrap(),
        test,
    }
}

#[test]
fn zero_anomaly_labels_are_undefined_but_scores_written() {
    let dir = tempfile::tempdir().unwrap();
    let err = run_experiment(&ExperimentConfig {
        dataset: in_memory(vec![false; 200], 0.0),
        out_dir: Some(dir.path().to_path_buf()),
        ..small(0)
    })
    .unwrap_err();
    assert!(matches!(err, GonError::UndefinedMetrics(_)), "{err:?}");
    assert!(dir.path().join("scores.csv").exists());
}

#[test]
fn test_split_never_influences_training() {
    let mut labels = vec![false; 200];
    labels[50..60].iter_mut().for_each(|l| *l = true);
    let a = run_experiment(&ExperimentConfig {
        dataset: in_memory(labels.clone(), 0.0),
        ..small(2)
    })
    .unwrap();
    let b = run_experiment(&ExperimentConfig {
        dataset: in_memory(labels, 0.3),
        ..small(2)
    })
    .unwrap();
    assert_eq!(a.detector, b.detector);
    assert_eq!(a.train_scores, b.train_scores);
    assert_ne!(a.test_scores, b.test_scores);
}

#[test]
fn dimension_mismatch_between_splits() {
    let train = TimeSeries::from_values(Matrix::from_vec(50, 2, vec![0.5; 100]).unwrap()).unwrap();
    let test = TimeSeries::new(
        Matrix::from_vec(50, 3, vec![0.5; 150]).unwrap(),
        vec!["a".into(), "b".into(), "c".into()],
        Some(vec![true; 50]),
    )
    .unwrap();
    let err = run_experiment(&ExperimentConfig {
        dataset: DatasetSpec::InMemory {
            name: "bad".into(),
            train,
            test,
        },
        ..small(0)
    })
    .unwrap_err();
    assert!(matches!(err, GonError::DimensionMismatch { .. }));
}

#[test]
fn sweep_emits_one_row_per_plan() {
    let dir = tempfile::tempdir().unwrap();
    let plans: Vec<LayerPlan> = [4, 8, 16].iter().map(|&w| LayerPlan::with_width(w)).collect();
    let plans: Vec<LayerPlan> = plans.into_iter().map(|p| LayerPlan { hidden_layers: 1, ..p }).collect();
    let rows = f1_per_gb_sweep(
        &ExperimentConfig {
            out_dir: Some(dir.path().to_path_buf()),
            ..small(0)
        },
        &plans,
    )
    .unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[0].memory_bytes < w[1].memory_bytes));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(dir.path().join("w8_l1").join("report.csv").exists());
}
