//! Analytic backward pass against central finite differences.

use gradmeta::nn::{backward, forward, Architecture, ModelParams, Mode};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// NLL of `target` under the model, in double precision.
fn loss(model: &ModelParams, x: &[f32], target: usize) -> f64 {
    let cache = forward(model, x, Mode::Infer, 0.0).unwrap();
    -cache.dist.probs[target].ln()
}

/// Largest relative error over every parameter coordinate.
fn worst_relative_error(arch: Architecture, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = ModelParams::init(arch, seed).unwrap();
    for v in model.values_mut() {
        // nonzero biases and a less symmetric weight draw
        *v += rng.random_range(-0.05..0.05);
    }
    let x: Vec<f32> = (0..arch.input_len()).map(|_| rng.random()).collect();
    let target = rng.random_range(0..arch.classes);
    let cache = forward(&model, &x, Mode::Infer, 0.0).unwrap();
    let mut onehot = vec![0.0; arch.classes];
    onehot[target] = 1.0;
    let grad = backward(&model, &x, &onehot, &cache).unwrap();

    let h = 1e-5;
    let mut worst = 0.0f64;
    for j in 0..model.len() {
        let orig = model.values()[j];
        model.values_mut()[j] = orig + h;
        let up = loss(&model, &x, target);
        model.values_mut()[j] = orig - h;
        let down = loss(&model, &x, target);
        model.values_mut()[j] = orig;
        let numeric = (up - down) / (2.0 * h);
        let analytic = grad.combined()[j];
        let scale = analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic - numeric).abs() / scale);
    }
    worst
}

fn small() -> Architecture {
    Architecture {
        input_side: 24,
        filters: 3,
        classes: 10,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn backward_matches_central_differences(seed in any::<u64>()) {
        let err = worst_relative_error(small(), seed);
        prop_assert!(err < 1e-4, "seed {seed}: relative error {err}");
    }
}

#[test]
fn full_size_network_sampled_coordinates() {
    let arch = Architecture::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let model = ModelParams::init(arch, 3).unwrap();
    let x: Vec<f32> = (0..arch.input_len()).map(|_| rng.random()).collect();
    let cache = forward(&model, &x, Mode::Infer, 0.0).unwrap();
    let target = cache.dist.predicted;
    let grad = backward(&model, &x, &cache.dist.one_hot(), &cache).unwrap();
    let mut m = model.clone();
    for _ in 0..200 {
        let j = rng.random_range(0..m.len());
        let orig = m.values()[j];
        m.values_mut()[j] = orig + 1e-5;
        let up = loss(&m, &x, target);
        m.values_mut()[j] = orig - 1e-5;
        let down = loss(&m, &x, target);
        m.values_mut()[j] = orig;
        let numeric = (up - down) / 2e-5;
        let analytic = grad.combined()[j];
        let scale = analytic.abs().max(numeric.abs()).max(1e-6);
        assert!((analytic - numeric).abs() / scale < 1e-4, "coord {j}: {analytic} vs {numeric}");
    }
}
