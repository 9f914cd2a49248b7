//! Small dense feedforward networks trained with momentum SGD and a
//! reduce-on-plateau learning-rate schedule.
//!
//! Weights are stored row-major per layer (`out × in`). Training is
//! single-threaded and fully determined by the configured seed.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::{argmax, seeded_rng};

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid network spec: {0}")]
    Spec(String),
    #[error("expected input of length {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("invalid target: {0}")]
    Target(String),
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("no training data")]
    EmptyData,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Softmax,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    CrossEntropy,
    Bce,
}

/// Layer sizes include the input width; `[32, 32, 16]` is one hidden layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSpec {
    pub layer_sizes: Vec<usize>,
    pub hidden: Activation,
    pub output: OutputActivation,
    pub loss: Loss,
}

impl NetSpec {
    pub fn validate(&self) -> Result<(), NetError> {
        if self.layer_sizes.len() < 2 {
            return Err(NetError::Spec("need an input size and at least one layer".into()));
        }
        if self.layer_sizes.contains(&0) {
            return Err(NetError::Spec("layer sizes must be positive".into()));
        }
        match (self.output, self.loss) {
            (OutputActivation::Softmax, Loss::CrossEntropy) | (OutputActivation::Sigmoid, Loss::Bce) => {
                Ok(())
            }
            (o, l) => Err(NetError::Spec(format!("{o:?} output cannot be trained with {l:?}"))),
        }
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub weight_velocity: Vec<f64>,
    pub bias_velocity: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
            weight_velocity: vec![0.0; inputs * outputs],
            bias_velocity: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                self.biases[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }
}

/// Gradients of the mean loss, shaped like the layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    /// All entries in parameter order (per layer: weights, then biases).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetState {
    pub spec: NetSpec,
    pub layers: Vec<Layer>,
    pub seed: u64,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn log_softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

impl NetState {
    /// Uniform Glorot initialization, biases zero.
    pub fn new(spec: NetSpec, seed: u64) -> Result<Self, NetError> {
        spec.validate()?;
        let mut rng = seeded_rng(seed);
        let layers = spec
            .layer_sizes
            .windows(2)
            .map(|w| {
                let mut layer = Layer::zeros(w[0], w[1]);
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                for v in &mut layer.weights {
                    *v = rng.random_range(-limit..=limit);
                }
                layer
            })
            .collect();
        Ok(Self { spec, layers, seed })
    }

    /// All weights and biases zero.
    pub fn zeros(spec: NetSpec) -> Result<Self, NetError> {
        spec.validate()?;
        let layers = spec
            .layer_sizes
            .windows(2)
            .map(|w| Layer::zeros(w[0], w[1]))
            .collect();
        Ok(Self { spec, layers, seed: 0 })
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Parameters in the order used by [`Gradients::flatten`].
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<(), NetError> {
        if params.len() != self.param_count() {
            return Err(NetError::Shape {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let mut i = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[i..i + nw]);
            i += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&params[i..i + nb]);
            i += nb;
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<(), NetError> {
        if x.len() != self.spec.input_size() {
            return Err(NetError::Shape {
                expected: self.spec.input_size(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(NetError::NonFinite("input"));
        }
        Ok(())
    }

    fn hidden(&self, z: f64) -> f64 {
        match self.spec.hidden {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Pre-activations of the output layer plus every layer's input.
    fn forward_trace(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut a = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(&a);
            inputs.push(a);
            if i == last {
                return (inputs, z);
            }
            a = z.into_iter().map(|v| self.hidden(v)).collect();
        }
        unreachable!()
    }

    fn output(&self, logits: &[f64]) -> Vec<f64> {
        match self.spec.output {
            OutputActivation::Softmax => log_softmax(logits).into_iter().map(f64::exp).collect(),
            OutputActivation::Sigmoid => logits.iter().map(|&z| sigmoid(z)).collect(),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NetError> {
        self.check_input(x)?;
        let (_, logits) = self.forward_trace(x);
        Ok(self.output(&logits))
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize, NetError> {
        Ok(argmax(&self.forward(x)?))
    }

    fn check_target(&self, t: &[f64]) -> Result<(), NetError> {
        if t.len() != self.spec.output_size() {
            return Err(NetError::Target(format!(
                "length {} for {} outputs",
                t.len(),
                self.spec.output_size()
            )));
        }
        if t.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(NetError::Target("entries must be 0 or 1".into()));
        }
        if self.spec.loss == Loss::CrossEntropy && t.iter().filter(|&&v| v == 1.0).count() != 1 {
            return Err(NetError::Target("cross-entropy needs a one-hot target".into()));
        }
        Ok(())
    }

    fn sample_loss(&self, logits: &[f64], t: &[f64]) -> f64 {
        match self.spec.loss {
            Loss::CrossEntropy => -log_softmax(logits)
                .iter()
                .zip(t)
                .map(|(l, t)| l * t)
                .sum::<f64>(),
            Loss::Bce => logits.iter().zip(t).map(|(&z, &t)| softplus(z) - t * z).sum(),
        }
    }

    /// Mean loss over a batch. BCE sums over outputs before averaging.
    pub fn loss(&self, xs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64, NetError> {
        self.check_batch(xs, targets)?;
        let total: f64 = xs
            .iter()
            .zip(targets)
            .map(|(x, t)| self.sample_loss(&self.forward_trace(x).1, t))
            .sum();
        Ok(total / xs.len() as f64)
    }

    fn check_batch(&self, xs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<(), NetError> {
        if xs.is_empty() || xs.len() != targets.len() {
            return Err(NetError::EmptyData);
        }
        for (x, t) in xs.iter().zip(targets) {
            self.check_input(x)?;
            self.check_target(t)?;
        }
        Ok(())
    }

    /// Backpropagated gradients of the mean batch loss, with that loss.
    pub fn gradients(&self, xs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<(Gradients, f64), NetError> {
        self.check_batch(xs, targets)?;
        let scale = 1.0 / xs.len() as f64;
        let mut grads = Gradients {
            weights: self.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: self.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        };
        let mut loss = 0.0;
        for (x, t) in xs.iter().zip(targets) {
            let (inputs, logits) = self.forward_trace(x);
            loss += self.sample_loss(&logits, t);
            // both shipped pairings reduce to p − t at the logits
            let mut delta: Vec<f64> = self
                .output(&logits)
                .iter()
                .zip(t)
                .map(|(p, t)| (p - t) * scale)
                .collect();
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let a = &inputs[li];
                let rows = grads.weights[li].chunks_mut(layer.inputs);
                for ((bias, row), &d) in grads.biases[li].iter_mut().zip(rows).zip(&delta) {
                    *bias += d;
                    for (g, v) in row.iter_mut().zip(a) {
                        *g += d * v;
                    }
                }
                if li == 0 {
                    break;
                }
                // a = hidden(z) of the previous layer
                delta = (0..layer.inputs)
                    .map(|i| {
                        let back: f64 = (0..layer.outputs)
                            .map(|o| layer.weights[o * layer.inputs + i] * delta[o])
                            .sum();
                        let d = match self.spec.hidden {
                            Activation::Relu => {
                                if a[i] > 0.0 {
                                    1.0
                                } else {
                                    0.0
                                }
                            }
                            Activation::Sigmoid => a[i] * (1.0 - a[i]),
                        };
                        back * d
                    })
                    .collect();
            }
        }
        Ok((grads, loss * scale))
    }

    /// Momentum update: `v ← μ·v + g`, `w ← w − lr·v`.
    pub fn sgd_step(&mut self, grads: &Gradients, lr: f64, momentum: f64) -> Result<(), NetError> {
        if grads.flatten().iter().any(|g| !g.is_finite()) {
            return Err(NetError::NonFinite("gradient"));
        }
        let mut next = self.layers.clone();
        for (li, layer) in next.iter_mut().enumerate() {
            for ((w, v), g) in layer
                .weights
                .iter_mut()
                .zip(&mut layer.weight_velocity)
                .zip(&grads.weights[li])
            {
                *v = momentum * *v + g;
                *w -= lr * *v;
            }
            for ((b, v), g) in layer
                .biases
                .iter_mut()
                .zip(&mut layer.bias_velocity)
                .zip(&grads.biases[li])
            {
                *v = momentum * *v + g;
                *b -= lr * *v;
            }
            if layer.weights.iter().chain(&layer.biases).any(|w| !w.is_finite()) {
                return Err(NetError::NonFinite("weight update"));
            }
        }
        self.layers = next;
        Ok(())
    }

    pub fn accuracy(&self, xs: &[Vec<f64>], labels: &[usize]) -> Result<f64, NetError> {
        if xs.is_empty() {
            return Ok(0.0);
        }
        let mut correct = 0;
        for (x, &l) in xs.iter().zip(labels) {
            if self.predict(x)? == l {
                correct += 1;
            }
        }
        Ok(correct as f64 / xs.len() as f64)
    }

    pub fn to_json(&self) -> Result<String, NetError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, NetError> {
        let net: Self = serde_json::from_str(text)?;
        net.spec.validate()?;
        let shapes_ok = net.layers.len() == net.spec.layer_sizes.len() - 1
            && net.layers.iter().zip(net.spec.layer_sizes.windows(2)).all(|(l, w)| {
                l.inputs == w[0]
                    && l.outputs == w[1]
                    && l.weights.len() == w[0] * w[1]
                    && l.biases.len() == w[1]
                    && l.weight_velocity.len() == w[0] * w[1]
                    && l.bias_velocity.len() == w[1]
            });
        if !shapes_ok {
            return Err(NetError::Spec("layer shapes do not match the spec".into()));
        }
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<(), NetError> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NetError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// One-hot target vector.
pub fn one_hot(label: usize, n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n];
    t[label] = 1.0;
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleConfig {
    pub initial_lr: f64,
    pub factor: f64,
    pub patience: usize,
    pub min_lr: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            initial_lr: 0.01,
            factor: 0.1,
            patience: 3,
            min_lr: 1e-5,
        }
    }
}

/// Reduce-on-plateau schedule driven by validation accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct LrSchedule {
    pub config: ScheduleConfig,
    pub lr: f64,
    pub best: Option<f64>,
    pub epochs_since_improve: usize,
}

impl LrSchedule {
    pub fn new(config: ScheduleConfig) -> Result<Self, NetError> {
        let c = config;
        let valid = c.factor > 0.0 && c.factor < 1.0 && c.min_lr >= 0.0 && c.initial_lr >= c.min_lr;
        if !valid {
            return Err(NetError::Spec(format!("invalid schedule {c:?}")));
        }
        Ok(Self {
            config,
            lr: c.initial_lr,
            best: None,
            epochs_since_improve: 0,
        })
    }

    /// Records an epoch's validation accuracy and returns the learning rate
    /// for the next epoch.
    pub fn update(&mut self, val_accuracy: f64) -> f64 {
        if self.best.is_none_or(|b| val_accuracy > b) {
            self.best = Some(val_accuracy);
            self.epochs_since_improve = 0;
        } else {
            self.epochs_since_improve += 1;
            if self.epochs_since_improve >= self.config.patience {
                self.lr = (self.lr * self.config.factor).max(self.config.min_lr);
                self.epochs_since_improve = 0;
            }
        }
        self.lr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub momentum: f64,
    pub schedule: ScheduleConfig,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            momentum: 0.9,
            schedule: ScheduleConfig::default(),
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: f64,
    /// Learning rate used during this epoch.
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Snapshot with the highest validation accuracy (earliest on ties).
    pub best: NetState,
    pub best_epoch: Option<usize>,
    pub best_val_acc: Option<f64>,
    pub last: NetState,
    pub history: Vec<EpochRecord>,
}

/// Sample order for one epoch: a fresh shuffle from the shared generator.
pub fn epoch_order<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// One pass of minibatch SGD over `order`; returns the mean training loss.
#[allow(clippy::too_many_arguments)]
pub fn train_epoch(
    net: &mut NetState,
    xs: &[Vec<f64>],
    targets: &[Vec<f64>],
    order: &[usize],
    batch_size: usize,
    lr: f64,
    momentum: f64,
    epoch: usize,
) -> Result<f64, NetError> {
    let mut total = 0.0;
    for batch in order.chunks(batch_size.max(1)) {
        let bx: Vec<Vec<f64>> = batch.iter().map(|&i| xs[i].clone()).collect();
        let bt: Vec<Vec<f64>> = batch.iter().map(|&i| targets[i].clone()).collect();
        let (grads, loss) = net.gradients(&bx, &bt)?;
        if !loss.is_finite() {
            return Err(NetError::Diverged { epoch });
        }
        net.sgd_step(&grads, lr, momentum)
            .map_err(|_| NetError::Diverged { epoch })?;
        total += loss * batch.len() as f64;
    }
    Ok(total / order.len() as f64)
}

pub fn train(
    net: &NetState,
    train_x: &[Vec<f64>],
    train_y: &[usize],
    val_x: &[Vec<f64>],
    val_y: &[usize],
    cfg: &FitConfig,
) -> Result<TrainOutcome, NetError> {
    if train_x.is_empty() || train_x.len() != train_y.len() || val_x.len() != val_y.len() {
        return Err(NetError::EmptyData);
    }
    let n_out = net.spec.output_size();
    if let Some(&bad) = train_y.iter().chain(val_y).find(|&&l| l >= n_out) {
        return Err(NetError::Target(format!("label {bad} out of range")));
    }
    let targets: Vec<Vec<f64>> = train_y.iter().map(|&l| one_hot(l, n_out)).collect();
    let mut schedule = LrSchedule::new(cfg.schedule)?;
    let mut rng = seeded_rng(cfg.seed);
    let mut current = net.clone();
    let mut best = net.clone();
    let (mut best_epoch, mut best_val_acc) = (None, None);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let lr = schedule.lr;
        let order = epoch_order(&mut rng, train_x.len());
        let train_loss = train_epoch(
            &mut current,
            train_x,
            &targets,
            &order,
            cfg.batch_size,
            lr,
            cfg.momentum,
            epoch,
        )?;
        let val_acc = current.accuracy(val_x, val_y)?;
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_acc,
            lr,
        });
        if best_val_acc.is_none_or(|b| val_acc > b) {
            best = current.clone();
            best_epoch = Some(epoch);
            best_val_acc = Some(val_acc);
        }
        schedule.update(val_acc);
    }
    Ok(TrainOutcome {
        best,
        best_epoch,
        best_val_acc,
        last: current,
        history,
    })
}

pub fn write_history_csv<W: Write>(mut out: W, history: &[EpochRecord]) -> std::io::Result<()> {
    writeln!(out, "epoch,train_loss,val_acc,lr")?;
    for r in history {
        writeln!(out, "{},{},{},{}", r.epoch, r.train_loss, r.val_acc, r.lr)?;
    }
    Ok(())
}
