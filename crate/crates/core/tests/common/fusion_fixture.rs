//! Complementary-branch fixture: two synthetic probability sources, each
//! informative on its own half of the classes and systematically wrong on
//! the other half.
//!
//! For a class in its half, a branch peaks on the true class with a
//! moderate logit margin. For a class in the other half it peaks, with a
//! larger margin, on a fixed class of its own half (a seeded permutation),
//! mimicking a network that consistently confuses look-alike classes.

use gitract_core::fusion::{
    build_fusion_mlp, predict_average, predict_mlp, train_fusion, write_predictions_csv,
    BranchOutputs, Prediction, ProbabilityVector,
};
use gitract_core::nnet::FitConfig;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const CLASSES: usize = 16;
pub const PER_CLASS: usize = 200;
const HALF: usize = CLASSES / 2;

pub struct Fixture {
    pub b1: BranchOutputs,
    pub b2: BranchOutputs,
    pub train: Vec<(String, usize)>,
    pub val: Vec<(String, usize)>,
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

pub fn build(seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.5).unwrap();
    // confusion targets: branch b maps the other half onto its own half
    let mut targets = [[0usize; CLASSES]; 2];
    for (b, t) in targets.iter_mut().enumerate() {
        let mut own: Vec<usize> = (b * HALF..(b + 1) * HALF).collect();
        own.shuffle(&mut rng);
        let other = (1 - b) * HALF..(2 - b) * HALF;
        for (c, &target) in other.zip(&own) {
            t[c] = target;
        }
    }

    let mut b1 = BranchOutputs::new("branch1");
    let mut b2 = BranchOutputs::new("branch2");
    let mut train = Vec::new();
    let mut val = Vec::new();
    for c in 0..CLASSES {
        for i in 0..PER_CLASS {
            let id = format!("c{c:02}_{i:03}");
            for (b, out) in [&mut b1, &mut b2].into_iter().enumerate() {
                let mut logits: Vec<f64> = (0..CLASSES).map(|_| noise.sample(&mut rng)).collect();
                if c / HALF == b {
                    logits[c] += rng.random_range(2.0..4.5);
                } else {
                    logits[targets[b][c]] += rng.random_range(3.0..5.5);
                }
                let p = ProbabilityVector::new(&softmax(&logits)).unwrap();
                out.probs.insert(id.clone(), p);
            }
            if i < PER_CLASS / 2 {
                train.push((id, c));
            } else {
                val.push((id, c));
            }
        }
    }
    Fixture { b1, b2, train, val }
}

pub struct Outcome {
    pub average_accuracy: f64,
    pub mlp_accuracy: f64,
    pub average: Vec<Prediction>,
    pub mlp: Vec<Prediction>,
    pub mlp_json: String,
}

fn accuracy(predictions: &[Prediction], truth: &[(String, usize)]) -> f64 {
    let hits = predictions.iter().zip(truth).filter(|(p, (_, c))| p.label == *c).count();
    hits as f64 / truth.len() as f64
}

/// Average fusion and a trained MLP head, both scored on the validation half.
pub fn run(seed: u64) -> Outcome {
    let f = build(seed);
    let train: Vec<(&str, usize)> = f.train.iter().map(|(id, c)| (id.as_str(), *c)).collect();
    let val: Vec<(&str, usize)> = f.val.iter().map(|(id, c)| (id.as_str(), *c)).collect();
    let val_ids: Vec<&str> = val.iter().map(|(id, _)| *id).collect();
    let cfg = FitConfig {
        seed,
        ..FitConfig::default()
    };
    let outcome = train_fusion(&build_fusion_mlp(seed), &f.b1, &f.b2, &train, &val, &cfg).unwrap();
    let average = predict_average(&f.b1, &f.b2, &val_ids).unwrap();
    let mlp = predict_mlp(&outcome.best, &f.b1, &f.b2, &val_ids).unwrap();
    Outcome {
        average_accuracy: accuracy(&average, &f.val),
        mlp_accuracy: accuracy(&mlp, &f.val),
        average,
        mlp,
        mlp_json: outcome.best.to_json().unwrap(),
    }
}

/// Everything a rerun must reproduce byte for byte.
pub fn serialized(o: &Outcome) -> Vec<u8> {
    let mut bytes = Vec::new();
    write_predictions_csv(&mut bytes, &o.average).unwrap();
    write_predictions_csv(&mut bytes, &o.mlp).unwrap();
    bytes.extend_from_slice(o.mlp_json.as_bytes());
    bytes
}
