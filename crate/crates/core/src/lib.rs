//! Contextual hierarchical pixel labeling.
//!
//! A stack of classifiers over an image pyramid: bottom-up classifiers work
//! at successively halved resolutions, each conditioned on max-pooled
//! outputs of the levels below it, and a top-down classifier labels the
//! original resolution using every level's upsampled output. Stages stack
//! by treating the previous stage's top-down output as the next stage's
//! first context. Classifiers are logistic disjunctive normal networks
//! trained with minibatch SGD and optional dropout.
//!
//! The `parallel` feature (default) runs the per-pixel inner loops on
//! rayon; disabling it yields a sequential build with bit-identical
//! results.

pub mod config;
pub mod edges;
pub mod error;
pub mod exec;
pub mod features;
pub mod grid;
pub mod hierarchy;
pub mod io;
pub mod kmeans;
pub mod ldnn;
pub mod metrics;
pub mod pyramid;
pub mod synth;
pub mod trainlog;

pub use config::{ChmConfig, FeatureRegistry, TrainingParams};
pub use error::{ChmError, Result};
pub use grid::{ImagePlane, LabelMap, ProbabilityMap, Pyramid};
pub use hierarchy::ChmModel;
