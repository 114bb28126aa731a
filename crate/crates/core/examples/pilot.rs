//! Reproduces the committed pilot table in docs/pilot.md.
//!
//! cargo run --release -p gon-core --example pilot [n_seeds]

use gon_core::pipeline::{
    f1_per_gb_sweep, gaussian_demo, run_experiment, ExperimentConfig, GaussianDemoConfig, LayerPlan,
};

fn main() -> gon_core::Result<()> {
    let n_seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);

    println!("detection: synthetic faults, data seed 0, model seed varies");
    println!("seed,f1,f1_macro,auc,precision,recall,train_s");
    for seed in 0..n_seeds {
        let out = run_experiment(&ExperimentConfig::synthetic_preset(seed))?;
        let r = &out.report;
        println!(
            "{seed},{:.4},{:.4},{:.4},{:.4},{:.4},{:.1}",
            r.f1_anomaly, r.f1_macro, r.roc_auc, r.precision, r.recall, r.train_seconds
        );
    }

    println!("\nwidth sweep: seed 0");
    println!("width,params,mem_bytes,f1,f1_macro,f1_per_gb");
    let plans: Vec<LayerPlan> = [32, 64, 128, 256].map(LayerPlan::with_width).to_vec();
    for row in f1_per_gb_sweep(&ExperimentConfig::synthetic_preset(0), &plans)? {
        println!(
            "{},{},{},{:.4},{:.4},{:.2}",
            row.hidden_width, row.param_count, row.memory_bytes, row.f1_anomaly, row.f1_macro, row.f1_per_gb
        );
    }

    println!("\ngaussian demo: 5 epochs, n = 1000");
    println!("seed,mean_err_x,mean_err_y,cov_frobenius_err,seconds");
    for seed in 0..n_seeds + 1 {
        let out = gaussian_demo(&GaussianDemoConfig {
            seed,
            ..GaussianDemoConfig::default()
        })?;
        let e = out.mean_error();
        println!(
            "{seed},{:.3},{:.3},{:.3},{:.1}",
            e[0],
            e[1],
            out.cov_frobenius_error(),
            out.seconds
        );
    }
    Ok(())
}
