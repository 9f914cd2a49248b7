//! Late fusion of two classifier branches.
//!
//! Average fusion takes the elementwise mean of the two probability vectors.
//! MLP fusion freezes both branches and trains a 32-32-16 network on the
//! concatenated vectors, with sigmoid outputs and binary cross-entropy
//! against one-hot targets. Both predict the argmax, lowest index on ties.
//!
//! Branch probabilities travel as CSV (`image_id,p00..p15`), so externally
//! trained networks can be fused the same way as internal ones.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::ClassLabel;
use crate::nnet::{
    self, epoch_order, one_hot, Activation, FitConfig, LrSchedule, NetError, NetSpec, NetState,
    OutputActivation, ScheduleConfig, TrainOutcome,
};
use crate::util::{argmax, seeded_rng};
use crate::NUM_CLASSES;

/// Tolerance on the sum of an internally produced probability vector.
pub const SUM_TOLERANCE: f64 = 1e-6;
/// Accepted range for the sum of an imported vector before renormalizing.
pub const IMPORT_SUM_RANGE: (f64, f64) = (0.98, 1.02);

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("expected {NUM_CLASSES} probabilities, got {0}")]
    Length(usize),
    #[error("probability {value} at index {index} outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("probabilities sum to {0}")]
    Sum(f64),
    #[error("{source_name} is missing {} image id(s): {}", ids.len(), ids.join(", "))]
    MissingIds { source_name: String, ids: Vec<String> },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("no samples")]
    Empty,
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector([f64; NUM_CLASSES]);

impl ProbabilityVector {
    fn check_entries(values: &[f64]) -> Result<[f64; NUM_CLASSES], FusionError> {
        let arr: [f64; NUM_CLASSES] = values
            .try_into()
            .map_err(|_| FusionError::Length(values.len()))?;
        for (index, &value) in arr.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(FusionError::OutOfRange { index, value });
            }
        }
        Ok(arr)
    }

    /// A vector that must already sum to 1 within 1e-6.
    pub fn new(values: &[f64]) -> Result<Self, FusionError> {
        let arr = Self::check_entries(values)?;
        let sum: f64 = arr.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(FusionError::Sum(sum));
        }
        Ok(Self(arr))
    }

    /// An externally produced vector: the sum must lie in [0.98, 1.02] and
    /// the result is rescaled to sum to 1.
    pub fn from_import(values: &[f64]) -> Result<Self, FusionError> {
        let mut arr = Self::check_entries(values)?;
        let sum: f64 = arr.iter().sum();
        if !(IMPORT_SUM_RANGE.0..=IMPORT_SUM_RANGE.1).contains(&sum) {
            return Err(FusionError::Sum(sum));
        }
        for v in &mut arr {
            *v /= sum;
        }
        Ok(Self(arr))
    }

    pub fn uniform() -> Self {
        Self([1.0 / NUM_CLASSES as f64; NUM_CLASSES])
    }

    pub fn one_hot(class: usize) -> Self {
        let mut arr = [0.0; NUM_CLASSES];
        arr[class] = 1.0;
        Self(arr)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Predicted class, lowest index on ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    pub fn max(&self) -> f64 {
        self.0[self.argmax()]
    }
}

pub fn average_fusion(p1: &ProbabilityVector, p2: &ProbabilityVector) -> ProbabilityVector {
    let mut out = [0.0; NUM_CLASSES];
    for (o, (a, b)) in out.iter_mut().zip(p1.0.iter().zip(&p2.0)) {
        *o = (a + b) / 2.0;
    }
    ProbabilityVector(out)
}

/// Per-image probabilities from one branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchOutputs {
    /// Model id or file path the probabilities came from.
    pub source: String,
    pub probs: BTreeMap<String, ProbabilityVector>,
}

impl BranchOutputs {
    pub fn new(source: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            probs: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ProbabilityVector> {
        self.probs.get(id)
    }

    /// Errors with every id in `ids` that this branch lacks.
    pub fn require(&self, ids: &[&str]) -> Result<(), FusionError> {
        let missing: Vec<String> = ids
            .iter()
            .filter(|id| !self.probs.contains_key(**id))
            .map(|id| id.to_string())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(FusionError::MissingIds {
                source_name: self.source.clone(),
                ids: missing,
            })
        }
    }

    pub fn read_csv<R: Read>(input: R, source: impl Into<String>) -> Result<Self, FusionError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(input);
        let header = reader.headers()?.clone();
        let expected: Vec<String> = std::iter::once("image_id".to_string())
            .chain((0..NUM_CLASSES).map(|k| format!("p{k:02}")))
            .collect();
        if header.iter().map(str::trim).ne(expected.iter().map(String::as_str)) {
            return Err(FusionError::Format {
                line: 1,
                message: format!("header must be {}", expected.join(",")),
            });
        }
        let mut out = Self::new(source);
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let line = record.position().map_or(i + 2, |p| p.line() as usize);
            let fail = |message: String| FusionError::Format { line, message };
            if record.len() != NUM_CLASSES + 1 {
                return Err(fail(format!(
                    "expected {} fields, got {}",
                    NUM_CLASSES + 1,
                    record.len()
                )));
            }
            let id = record[0].trim().to_string();
            let values = record
                .iter()
                .skip(1)
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| fail(e.to_string()))?;
            let p = ProbabilityVector::from_import(&values).map_err(|e| fail(e.to_string()))?;
            if out.probs.insert(id.clone(), p).is_some() {
                return Err(fail(format!("duplicate image id {id}")));
            }
        }
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = (0..NUM_CLASSES).map(|k| format!("p{k:02}")).collect();
        writeln!(out, "image_id,{}", header.join(","))?;
        for (id, p) in &self.probs {
            let values: Vec<String> = p.0.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{},{}", id, values.join(","))?;
        }
        Ok(())
    }
}

pub fn import_branch_probs(path: &Path) -> Result<BranchOutputs, FusionError> {
    let file = std::fs::File::open(path)?;
    let out = BranchOutputs::read_csv(file, path.display().to_string())?;
    log::info!("imported {} probability rows from {}", out.len(), path.display());
    Ok(out)
}

/// `[p1 ‖ p2]` for each id, after checking both branches cover all ids.
pub fn fusion_inputs(
    b1: &BranchOutputs,
    b2: &BranchOutputs,
    ids: &[&str],
) -> Result<Vec<Vec<f64>>, FusionError> {
    b1.require(ids)?;
    b2.require(ids)?;
    Ok(ids
        .iter()
        .map(|id| {
            let mut x = b1.probs[*id].0.to_vec();
            x.extend_from_slice(&b2.probs[*id].0);
            x
        })
        .collect())
}

pub fn fusion_spec() -> NetSpec {
    NetSpec {
        layer_sizes: vec![2 * NUM_CLASSES, 32, NUM_CLASSES],
        hidden: Activation::Relu,
        output: OutputActivation::Sigmoid,
        loss: nnet::Loss::Bce,
    }
}

pub fn build_fusion_mlp(seed: u64) -> NetState {
    NetState::new(fusion_spec(), seed).expect("fusion spec is valid")
}

/// Trains only the fusion head; branch outputs are read, never modified.
pub fn train_fusion(
    mlp: &NetState,
    b1: &BranchOutputs,
    b2: &BranchOutputs,
    train: &[(&str, usize)],
    val: &[(&str, usize)],
    cfg: &FitConfig,
) -> Result<TrainOutcome, FusionError> {
    if train.is_empty() {
        return Err(FusionError::Empty);
    }
    let (train_ids, train_y): (Vec<&str>, Vec<usize>) = train.iter().copied().unzip();
    let (val_ids, val_y): (Vec<&str>, Vec<usize>) = val.iter().copied().unzip();
    let train_x = fusion_inputs(b1, b2, &train_ids)?;
    let val_x = fusion_inputs(b1, b2, &val_ids)?;
    Ok(nnet::train(mlp, &train_x, &train_y, &val_x, &val_y, cfg)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub image_id: String,
    pub label: usize,
    pub confidence: f64,
}

pub fn predict_average(
    b1: &BranchOutputs,
    b2: &BranchOutputs,
    ids: &[&str],
) -> Result<Vec<Prediction>, FusionError> {
    b1.require(ids)?;
    b2.require(ids)?;
    Ok(ids
        .iter()
        .map(|id| {
            let p = average_fusion(&b1.probs[*id], &b2.probs[*id]);
            Prediction {
                image_id: id.to_string(),
                label: p.argmax(),
                confidence: p.max(),
            }
        })
        .collect())
}

/// MLP predictions; confidence is the winning sigmoid output.
pub fn predict_mlp(
    mlp: &NetState,
    b1: &BranchOutputs,
    b2: &BranchOutputs,
    ids: &[&str],
) -> Result<Vec<Prediction>, FusionError> {
    let xs = fusion_inputs(b1, b2, ids)?;
    ids.iter()
        .zip(xs)
        .map(|(id, x)| {
            let out = mlp.forward(&x)?;
            let label = argmax(&out);
            Ok(Prediction {
                image_id: id.to_string(),
                label,
                confidence: out[label],
            })
        })
        .collect()
}

fn label_name(label: usize) -> String {
    ClassLabel::from_index(label).map_or_else(|| label.to_string(), |c| c.name().to_string())
}

/// CSV `image_id,predicted_label,confidence` with class names as labels.
pub fn write_predictions_csv<W: Write>(mut out: W, predictions: &[Prediction]) -> std::io::Result<()> {
    writeln!(out, "image_id,predicted_label,confidence")?;
    for p in predictions {
        writeln!(out, "{},{},{}", p.image_id, label_name(p.label), p.confidence)?;
    }
    Ok(())
}

pub fn read_predictions_csv<R: Read>(input: R) -> Result<Vec<Prediction>, FusionError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let fail = |message: String| FusionError::Format { line, message };
        if record.len() != 3 {
            return Err(fail(format!("expected 3 fields, got {}", record.len())));
        }
        let label = record[1]
            .trim()
            .parse::<ClassLabel>()
            .map_err(|e| fail(e.to_string()))?;
        let confidence = record[2]
            .trim()
            .parse::<f64>()
            .map_err(|e| fail(e.to_string()))?;
        out.push(Prediction {
            image_id: record[0].trim().to_string(),
            label: label.index(),
            confidence,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualBranchConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub momentum: f64,
    pub schedule: ScheduleConfig,
    pub seed: u64,
    /// Multipliers applied to the shared learning rate for each branch.
    pub lr_scale: [f64; 2],
}

impl Default for DualBranchConfig {
    fn default() -> Self {
        let fit = FitConfig::default();
        Self {
            epochs: fit.epochs,
            batch_size: fit.batch_size,
            momentum: fit.momentum,
            schedule: fit.schedule,
            seed: fit.seed,
            lr_scale: [1.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualEpochRecord {
    pub epoch: usize,
    pub train_loss: [f64; 2],
    /// Accuracy of the averaged branch outputs on the validation data.
    pub val_acc: f64,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct DualBranchOutcome {
    pub best: [NetState; 2],
    pub best_epoch: Option<usize>,
    pub best_val_acc: Option<f64>,
    pub last: [NetState; 2],
    pub history: Vec<DualEpochRecord>,
}

/// Input views for the two branches over the same samples.
#[derive(Debug, Clone, Copy)]
pub struct DualData<'a> {
    pub x: [&'a [Vec<f64>]; 2],
    pub y: &'a [usize],
}

fn softmax_probs(net: &NetState, x: &[f64]) -> Result<ProbabilityVector, FusionError> {
    let out = net.forward(x)?;
    let arr: [f64; NUM_CLASSES] = out
        .as_slice()
        .try_into()
        .map_err(|_| FusionError::Length(out.len()))?;
    Ok(ProbabilityVector(arr))
}

/// Accuracy of averaged branch outputs.
pub fn fused_accuracy(branches: [&NetState; 2], data: DualData<'_>) -> Result<f64, FusionError> {
    if data.y.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0;
    for (i, &label) in data.y.iter().enumerate() {
        let p1 = softmax_probs(branches[0], &data.x[0][i])?;
        let p2 = softmax_probs(branches[1], &data.x[1][i])?;
        if average_fusion(&p1, &p2).argmax() == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.y.len() as f64)
}

/// Trains both branches in one epoch loop: they share the sample order and
/// the learning-rate schedule (driven by fused validation accuracy), but
/// each is updated from its own cross-entropy loss only.
pub fn train_dual_branch(
    branches: [&NetState; 2],
    train: DualData<'_>,
    val: DualData<'_>,
    cfg: &DualBranchConfig,
) -> Result<DualBranchOutcome, FusionError> {
    for net in branches {
        if net.spec.output != OutputActivation::Softmax || net.spec.output_size() != NUM_CLASSES {
            return Err(NetError::Spec("branches need a 16-way softmax output".into()).into());
        }
    }
    let n = train.y.len();
    if n == 0 || train.x.iter().any(|x| x.len() != n) || val.x.iter().any(|x| x.len() != val.y.len()) {
        return Err(FusionError::Empty);
    }
    let targets: Vec<Vec<f64>> = train.y.iter().map(|&l| one_hot(l, NUM_CLASSES)).collect();
    let mut schedule = LrSchedule::new(cfg.schedule)?;
    let mut rng = seeded_rng(cfg.seed);
    let mut current = [branches[0].clone(), branches[1].clone()];
    let mut best = current.clone();
    let (mut best_epoch, mut best_val_acc) = (None, None);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let lr = schedule.lr;
        let order = epoch_order(&mut rng, n);
        let mut losses = [0.0; 2];
        for (b, net) in current.iter_mut().enumerate() {
            losses[b] = nnet::train_epoch(
                net,
                train.x[b],
                &targets,
                &order,
                cfg.batch_size,
                lr * cfg.lr_scale[b],
                cfg.momentum,
                epoch,
            )?;
        }
        let val_acc = fused_accuracy([&current[0], &current[1]], val)?;
        history.push(DualEpochRecord {
            epoch,
            train_loss: losses,
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
    Ok(DualBranchOutcome {
        best,
        best_epoch,
        best_val_acc,
        last: current,
        history,
    })
}

/// Branch probabilities from a trained softmax network.
pub fn branch_outputs(
    net: &NetState,
    source: impl Into<String>,
    ids: &[&str],
    xs: &[Vec<f64>],
) -> Result<BranchOutputs, FusionError> {
    let mut out = BranchOutputs::new(source);
    for (id, x) in ids.iter().zip(xs) {
        out.probs.insert(id.to_string(), softmax_probs(net, x)?);
    }
    Ok(out)
}
