//! Subcommand arguments. Every field is optional on the command line so it
//! can also come from the `--config` file; flags win over file values.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

use crate::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Sl,
    Lmt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    Avg,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsetChoice {
    Train,
    Val,
    All,
}

macro_rules! mergeable {
    ($t:ident, $table:ident; $($f:ident),* $(,)?) => {
        impl $t {
            fn merge(&mut self, file: $t) {
                $(if self.$f.is_none() {
                    self.$f = file.$f;
                })*
            }

            /// Fill unset flags from the config file's table for this subcommand.
            pub fn resolve(mut self, file: &mut ConfigFile) -> Self {
                if let Some(table) = file.$table.take() {
                    self.merge(table);
                }
                self.apply_globals(file);
                self
            }
        }
    };
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitArgs {
    /// Dataset root with one sub-directory per class.
    #[arg(long)]
    pub root: Option<PathBuf>,
    /// Training fraction per class, strictly between 0 and 1 [default: 0.7].
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory of distractor images that replace out-of-patient training images.
    #[arg(long)]
    pub distractors: Option<PathBuf>,
    /// Output split CSV [default: split.csv].
    #[arg(long)]
    pub out: Option<PathBuf>,
}
mergeable!(SplitArgs, split; root, ratio, seed, distractors, out);

impl SplitArgs {
    fn apply_globals(&mut self, file: &ConfigFile) {
        self.seed = self.seed.or(file.seed);
    }
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractArgs {
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Directory that relative image ids are resolved against.
    #[arg(long)]
    pub root: Option<PathBuf>,
    /// Output feature CSV [default: features.csv].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (output order never depends on this).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Write each standardized 512×512 image here as PNG.
    #[arg(long)]
    pub dump_dir: Option<PathBuf>,
}
mergeable!(ExtractArgs, extract; split, root, out, threads, dump_dir);

impl ExtractArgs {
    fn apply_globals(&mut self, file: &ConfigFile) {
        self.threads = self.threads.or(file.threads);
    }
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub classifier: Option<ClassifierKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output model JSON [default: model.json].
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Directory for report.md, report.json and confusion.csv [default: report].
    #[arg(long)]
    pub report_dir: Option<PathBuf>,
    /// Upper bound on boosting iterations [default: 200].
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Validation predictions CSV.
    #[arg(long)]
    pub predictions_out: Option<PathBuf>,
    /// Validation class probabilities in branch format (`image_id,p00..p15`).
    #[arg(long)]
    pub probs_out: Option<PathBuf>,
}
mergeable!(TrainArgs, train; features, split, classifier, seed, model, report_dir, max_iterations, predictions_out, probs_out);

impl TrainArgs {
    fn apply_globals(&mut self, file: &ConfigFile) {
        self.seed = self.seed.or(file.seed);
    }
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuseArgs {
    /// First branch probabilities (`image_id,p00..p15`).
    #[arg(long)]
    pub branch1: Option<PathBuf>,
    #[arg(long)]
    pub branch2: Option<PathBuf>,
    /// Split CSV supplying labels: train rows fit the MLP, val rows are scored.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<FusionMode>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output predictions CSV [default: predictions.csv].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report_dir: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Initial learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    /// Learning-rate reduction factor on plateau.
    #[arg(long)]
    pub lr_factor: Option<f64>,
    /// Epochs without validation improvement before reducing the rate.
    #[arg(long)]
    pub lr_patience: Option<usize>,
    #[arg(long)]
    pub min_lr: Option<f64>,
    /// Training history CSV (MLP mode).
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Trained fusion network JSON (MLP mode).
    #[arg(long)]
    pub mlp_out: Option<PathBuf>,
}
mergeable!(FuseArgs, fuse; branch1, branch2, labels, mode, seed, out, report_dir, epochs, batch_size, lr, momentum, lr_factor, lr_patience, min_lr, history, mlp_out);

impl FuseArgs {
    fn apply_globals(&mut self, file: &ConfigFile) {
        self.seed = self.seed.or(file.seed);
    }
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Output predictions CSV [default: predictions.csv].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Class probabilities in branch format.
    #[arg(long)]
    pub probs_out: Option<PathBuf>,
    /// Restrict to one half of this split.
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub subset: Option<SubsetChoice>,
}
mergeable!(PredictArgs, predict; model, features, out, probs_out, split, subset);

impl PredictArgs {
    fn apply_globals(&mut self, _file: &ConfigFile) {}
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Split CSV with the true labels.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Which labelled rows must be predicted [default: val].
    #[arg(long, value_enum)]
    pub subset: Option<SubsetChoice>,
    #[arg(long)]
    pub report_dir: Option<PathBuf>,
    /// Method name shown in the report [default: predictions].
    #[arg(long)]
    pub method: Option<String>,
    /// Overall accuracy to compare against; the report states the gap.
    #[arg(long)]
    pub reference_accuracy: Option<f64>,
    #[arg(long)]
    pub reference_label: Option<String>,
    /// Throughput to show in the FPS column.
    #[arg(long)]
    pub fps: Option<f64>,
}
mergeable!(EvaluateArgs, evaluate; predictions, labels, subset, report_dir, method, reference_accuracy, reference_label, fps);

impl EvaluateArgs {
    fn apply_globals(&mut self, _file: &ConfigFile) {}
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchArgs {
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long)]
    pub root: Option<PathBuf>,
    /// Benchmark at most this many images.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Timing summary as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
mergeable!(BenchArgs, bench; split, root, limit, threads, out);

impl BenchArgs {
    fn apply_globals(&mut self, file: &ConfigFile) {
        self.threads = self.threads.or(file.threads);
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub split: Option<SplitArgs>,
    pub extract: Option<ExtractArgs>,
    pub train: Option<TrainArgs>,
    pub fuse: Option<FuseArgs>,
    pub predict: Option<PredictArgs>,
    pub evaluate: Option<EvaluateArgs>,
    pub bench: Option<BenchArgs>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// A value that must be given by flag or config file.
pub fn required<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Usage(format!("missing required option --{flag}")))
}
