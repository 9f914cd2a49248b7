//! Central finite-difference gradient check.

use gitract_core::fusion::fusion_spec;
use gitract_core::nnet::{one_hot, Activation, Loss, NetSpec, NetState, OutputActivation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-5;

/// Largest |a − n| / max(|a| + |n|, 1e-8) over all parameters.
pub fn max_relative_error(net: &NetState, xs: &[Vec<f64>], targets: &[Vec<f64>]) -> f64 {
    let (grads, _) = net.gradients(xs, targets).unwrap();
    let analytic = grads.flatten();
    let params = net.parameters();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let mut p = params.clone();
        p[i] = params[i] + STEP;
        probe.set_parameters(&p).unwrap();
        let up = probe.loss(xs, targets).unwrap();
        p[i] = params[i] - STEP;
        probe.set_parameters(&p).unwrap();
        let down = probe.loss(xs, targets).unwrap();
        let n = (up - down) / (2.0 * STEP);
        worst = worst.max((a - n).abs() / (a.abs() + n.abs()).max(1e-8));
    }
    worst
}

fn batch(rng: &mut ChaCha8Rng, spec: &NetSpec, size: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let inputs = spec.input_size();
    let outputs = spec.output_size();
    let xs = (0..size)
        .map(|_| (0..inputs).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let ts = (0..size)
        .map(|_| one_hot(rng.random_range(0..outputs), outputs))
        .collect();
    (xs, ts)
}

/// The 32-32-16 fusion head (sigmoid outputs, BCE).
pub fn fusion_head_error(seed: u64) -> f64 {
    let spec = fusion_spec();
    let net = NetState::new(spec.clone(), seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let (xs, ts) = batch(&mut rng, &spec, 4);
    max_relative_error(&net, &xs, &ts)
}

/// A small softmax/cross-entropy branch network.
pub fn softmax_branch_error(seed: u64, hidden: Activation) -> f64 {
    let spec = NetSpec {
        layer_sizes: vec![12, 10, 8, 6],
        hidden,
        output: OutputActivation::Softmax,
        loss: Loss::CrossEntropy,
    };
    let net = NetState::new(spec.clone(), seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb4a7);
    let (xs, ts) = batch(&mut rng, &spec, 5);
    max_relative_error(&net, &xs, &ts)
}
