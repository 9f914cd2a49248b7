//! Classification of gastrointestinal endoscopy images.
//!
//! Two families of methods live here:
//!
//! * global-feature pipelines: six whole-image descriptors concatenated into
//!   a 702-dimensional [`descriptors::FeatureVector`], classified by
//!   LogitBoost-fitted multinomial logistic regression
//!   ([`classifiers::SimpleLogistic`]) or a logistic model tree
//!   ([`classifiers::LogisticModelTree`]);
//! * two-branch late fusion of class-probability outputs, either by plain
//!   averaging or by a small sigmoid MLP trained on frozen branch outputs
//!   ([`fusion`]).
//!
//! [`metrics`] holds the confusion-matrix arithmetic used for reporting.

pub mod classifiers;
pub mod dataset;
pub mod descriptors;
pub mod fusion;
pub mod imaging;
pub mod metrics;
pub mod nnet;

mod util;

pub use dataset::{ClassLabel, NUM_CLASSES};
