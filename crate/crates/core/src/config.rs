//! Model and training configuration. The same schema is embedded in the
//! persisted model manifest, so a saved model is self-describing.

use serde::{Deserialize, Serialize};

use crate::error::{ChmError, Result};

/// Which appearance feature blocks are extracted from input images.
/// Context sampling always uses the 57-offset stencil and nothing else.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureRegistry {
    pub haar: bool,
    pub hog: bool,
    /// Dense orientation histogram at a finer cell size; stands in for
    /// dense SIFT flow.
    pub dense_orientation: bool,
    pub gabor: bool,
    pub canny: bool,
    /// Position and its moments up to second order. Disable for datasets
    /// where object location would be an unfair cue.
    pub position: bool,
    pub stencil: bool,
}

impl Default for FeatureRegistry {
    fn default() -> Self {
        Self {
            haar: true,
            hog: true,
            dense_orientation: true,
            gabor: true,
            canny: true,
            position: true,
            stencil: true,
        }
    }
}

/// SGD hyperparameters for one LDNN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingParams {
    pub learning_rate: f64,
    /// Multiplicative decay applied to the learning rate after each epoch.
    pub lr_decay: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub dropout: bool,
    /// Upper bound on training samples per classifier after class balancing.
    pub sample_cap: usize,
    pub seed: u64,
}

impl Default for TrainingParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            lr_decay: 0.99,
            epochs: 15,
            minibatch: 64,
            dropout: true,
            sample_cap: 200_000,
            seed: 0,
        }
    }
}

/// Full hierarchy configuration: levels, stages, classifier shape,
/// multiclass wiring, training hyperparameters and the feature registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChmConfig {
    /// Height of the hierarchy, L.
    pub levels: usize,
    /// Number of stacked stages, S.
    pub stages: usize,
    /// LDNN groups, N.
    pub ldnn_groups: usize,
    /// LDNN discriminants per group, M.
    pub ldnn_per_group: usize,
    /// Number of classes, C. 2 selects the single binary hierarchy.
    pub class_count: usize,
    /// How many top levels exchange context maps across classes
    /// (multiclass only).
    pub intra_class_top_levels: usize,
    pub training: TrainingParams,
    pub features: FeatureRegistry,
}

impl Default for ChmConfig {
    fn default() -> Self {
        Self {
            levels: 5,
            stages: 2,
            ldnn_groups: 24,
            ldnn_per_group: 24,
            class_count: 2,
            intra_class_top_levels: 3,
            training: TrainingParams::default(),
            features: FeatureRegistry::default(),
        }
    }
}

impl ChmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 1 {
            return Err(ChmError::InvalidConfig("levels must be >= 1".into()));
        }
        if self.stages < 1 {
            return Err(ChmError::InvalidConfig("stages must be >= 1".into()));
        }
        if self.ldnn_groups < 1 || self.ldnn_per_group < 1 {
            return Err(ChmError::InvalidConfig(
                "LDNN groups and per-group units must be >= 1".into(),
            ));
        }
        if self.class_count < 2 {
            return Err(ChmError::InvalidConfig("class count must be >= 2".into()));
        }
        // the cross-class wiring constraint only binds one-vs-all models;
        // binary hierarchies ignore the field
        if self.class_count > 2 && self.intra_class_top_levels > self.levels {
            return Err(ChmError::InvalidConfig(format!(
                "intra-class top levels {} exceeds levels {}",
                self.intra_class_top_levels, self.levels
            )));
        }
        if self.training.minibatch == 0 {
            return Err(ChmError::InvalidConfig("minibatch must be >= 1".into()));
        }
        if !(self.training.learning_rate.is_finite() && self.training.learning_rate > 0.0) {
            return Err(ChmError::InvalidConfig("learning rate must be positive".into()));
        }
        Ok(())
    }
}
