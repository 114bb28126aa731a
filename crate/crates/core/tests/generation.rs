use gon_core::gon::{generate_sample, GenerationConfig, NoiseInit};
use gon_core::neural::{Activation, Discriminator, LogTarget, Matrix};
use gon_core::rng::rng_from_seed;
use proptest::prelude::*;

/// 2-4-1 tanh net whose logit is a smooth bump with its single maximum at `c`.
fn bump(c: [f64; 2]) -> Discriminator {
    Discriminator::from_parts(
        vec![2, 4, 1],
        vec![
            Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap(),
            Matrix::from_rows(&[vec![2.0, -2.0, 2.0, -2.0]]).unwrap(),
        ],
        vec![vec![1.0 - c[0], -1.0 - c[0], 1.0 - c[1], -1.0 - c[1]], vec![-3.0]],
        Activation::Tanh,
    )
    .unwrap()
}

fn grid_max(d: &Discriminator) -> f64 {
    let n = 801;
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            let z = [
                -2.0 + 4.0 * i as f64 / (n - 1) as f64,
                -2.0 + 4.0 * j as f64 / (n - 1) as f64,
            ];
            best = best.max(d.log_d(&z, LogTarget::Real).unwrap());
        }
    }
    best
}

#[test]
fn bump_ascent_reaches_grid_optimum() {
    let d = bump([0.5, -0.3]);
    let optimum = grid_max(&d);
    // the farthest start is ~1 unit away per coordinate; γ = 0.01 needs room
    let cfg = GenerationConfig {
        max_iters: 300,
        ..GenerationConfig::default()
    };
    for z0 in [[-0.2, 0.4], [0.5, -0.3], [1.2, -0.9], [0.0, 0.0]] {
        let r = generate_sample(&d, &z0, &cfg, &mut rng_from_seed(0)).unwrap();
        let log_d = d.log_d(&r.z_star, LogTarget::Real).unwrap();
        assert!(r.final_score >= r.initial_score);
        assert!((log_d - optimum).abs() < 1e-3, "from {z0:?}: {log_d} vs grid {optimum}");
    }
}

#[test]
fn clipped_generation_stays_in_box() {
    let d = bump([3.0, -3.0]);
    let cfg = GenerationConfig {
        clip: Some((0.0, 1.0)),
        ..GenerationConfig::default()
    };
    let mut rng = rng_from_seed(1);
    for _ in 0..20 {
        let z0 = NoiseInit::Uniform01.sample(2, &mut rng);
        let r = generate_sample(&d, &z0, &cfg, &mut rng).unwrap();
        assert!(r.z_star.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(r.final_score >= r.initial_score);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn best_iterate_never_loses(seed in any::<u64>(), gamma in 1e-3f64..0.5, tanh in any::<bool>(),
                                z0 in prop::collection::vec(-3.0f64..3.0, 3)) {
        let act = if tanh { Activation::Tanh } else { Activation::default() };
        let d = Discriminator::new(&[3, 8, 8, 1], act, seed).unwrap();
        let cfg = GenerationConfig { gamma, max_iters: 30, ..GenerationConfig::default() };
        let r = generate_sample(&d, &z0, &cfg, &mut rng_from_seed(seed)).unwrap();
        prop_assert!(r.final_score >= r.initial_score);
        prop_assert!(r.final_score > 0.0 && r.final_score < 1.0);
        prop_assert_eq!(d.probability(&r.z_star).unwrap(), r.final_score);
    }
}
