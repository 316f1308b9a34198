use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tinynn::{clip_grad_norm, Adam, Head, Input, Mlp};

/// Gradient of the natural loss for each head with respect to the logits.
fn logit_grad(head: Head, out: &[f64], target: usize) -> Vec<f64> {
    match head {
        Head::Linear => vec![out[0] - target as f64 * 3.0],
        Head::Sigmoid => vec![out[0] - (target % 2) as f64],
        Head::Softmax => out.iter().enumerate().map(|(k, p)| p - f64::from(k == target)).collect(),
    }
}

#[test]
fn parameters_stay_finite_over_1e5_random_steps() {
    for (head, out_dim) in [(Head::Linear, 1), (Head::Sigmoid, 1), (Head::Softmax, 4)] {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut net = Mlp::new(&[8, 16, 16, out_dim], head, &mut rng);
        let mut adam = Adam::new(net.num_params(), 1e-2);
        for t in 0..100_000u64 {
            let x: Vec<f64> = (0..8).map(|_| rng.random_range(-50.0..50.0_f64).clamp(-10.0, 10.0)).collect();
            let cache = net.forward(Input::Dense(&x));
            let mut g = net.zero_grads();
            net.backward_logits(&cache, &logit_grad(head, cache.output(), rng.random_range(0..out_dim.max(2))), &mut g);
            clip_grad_norm(&mut [&mut g], 4.0);
            adam.step(net.params_mut(), &g);
            assert_eq!(adam.steps(), t + 1);
        }
        assert!(net.params().iter().all(|p| p.is_finite()), "{head:?}");
    }
}

proptest! {
    #[test]
    fn forward_of_finite_input_is_finite(x in prop::collection::vec(-1e6..1e6f64, 8), seed in any::<u64>(), scale in 0.1..50.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (head, out) in [(Head::Linear, 2), (Head::Sigmoid, 1), (Head::Softmax, 3)] {
            let mut net = Mlp::new(&[8, 16, out], head, &mut rng);
            net.scale_output_layer(scale);
            prop_assert!(net.predict(Input::Dense(&x)).iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn sigmoid_output_in_open_unit_interval(x in prop::collection::vec(-10.0..10.0f64, 8), seed in any::<u64>(), scale in 0.1..5.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Mlp::new(&[8, 16, 1], Head::Sigmoid, &mut rng);
        net.scale_output_layer(scale);
        let p = net.predict(Input::Dense(&x))[0];
        prop_assert!(p > 0.0 && p < 1.0, "{p}");
    }
}
