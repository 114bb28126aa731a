use gon_core::eval::{gan_param_count, memory_estimate, mirrored_generator_sizes};
use gon_core::neural::param_count_for;
use gon_core::{Activation, Discriminator};
use proptest::prelude::*;

fn formula(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gon_params_at_most_half_of_gan(
        d_in in 1usize..=64,
        hidden in prop::collection::vec(1usize..=256, 0..=4),
    ) {
        let mut sizes = vec![d_in];
        sizes.extend(&hidden);
        sizes.push(1);
        let d = Discriminator::zeros(&sizes, Activation::default()).unwrap();
        prop_assert_eq!(d.param_count(), formula(&sizes));
        prop_assert_eq!(param_count_for(&sizes), formula(&sizes));
        let gen = mirrored_generator_sizes(&sizes);
        prop_assert_eq!(gan_param_count(&sizes), formula(&sizes) + formula(&gen));
        let gon_bytes = memory_estimate(&sizes, 64).param_bytes();
        prop_assert_eq!(gon_bytes, 8 * formula(&sizes));
        prop_assert!(2 * gon_bytes <= 8 * gan_param_count(&sizes));
    }
}
