//! Model persistence. A model directory holds `manifest.json` (format
//! version, configuration, classifier index) plus one binary blob per
//! trained classifier: little-endian IEEE-754 f64, laid out as
//! `for i in 0..N { for j in 0..M { b_ij, then w_ij row } }`.
//! Loading is the bit-exact inverse of saving.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ChmConfig;
use crate::error::{ChmError, Result};
use crate::hierarchy::{BottomUpSlot, ChmModel, ClassHierarchy, StageClassifiers};
use crate::ldnn::LdnnModel;

pub const MODEL_FORMAT_VERSION: &str = "chm/1";

#[derive(Debug, Serialize, Deserialize)]
struct ModelManifest {
    format_version: String,
    channels: usize,
    config: ChmConfig,
    classifiers: Vec<ClassifierEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ClassifierEntry {
    class: usize,
    stage: usize,
    /// "level", "top_down", or "reused_top_down" for the shared slot.
    slot: String,
    #[serde(default)]
    level: usize,
    #[serde(default)]
    file: Option<String>,
    #[serde(default)]
    groups: usize,
    #[serde(default)]
    per_group: usize,
    #[serde(default)]
    feature_count: usize,
    #[serde(default)]
    trained_with_dropout: bool,
}

fn blob_name(class_models: usize, class: usize, stage: usize, slot: &str, level: usize) -> String {
    let prefix = if class_models > 1 {
        format!("class{class}_")
    } else {
        String::new()
    };
    match slot {
        "level" => format!("{prefix}stage{stage}_level{level}.w"),
        _ => format!("{prefix}stage{stage}_topdown.w"),
    }
}

fn write_blob(path: &Path, model: &LdnnModel) -> Result<()> {
    let n = model.groups();
    let m = model.per_group();
    let d = model.feature_count();
    let mut bytes = Vec::with_capacity(n * m * (1 + d) * 8);
    for i in 0..n {
        for j in 0..m {
            bytes.extend_from_slice(&model.biases()[i * m + j].to_le_bytes());
            let base = (i * m + j) * d;
            for w in &model.weights()[base..base + d] {
                bytes.extend_from_slice(&w.to_le_bytes());
            }
        }
    }
    fs::write(path, bytes).map_err(|e| ChmError::io(path, e))
}

fn read_blob(path: &Path, entry: &ClassifierEntry) -> Result<LdnnModel> {
    let bytes = fs::read(path).map_err(|e| ChmError::io(path, e))?;
    let (n, m, d) = (entry.groups, entry.per_group, entry.feature_count);
    let expected = (n * m * (1 + d) * 8) as u64;
    if bytes.len() as u64 != expected {
        return Err(ChmError::BlobLength {
            path: path.into(),
            expected,
            found: bytes.len() as u64,
        });
    }
    let mut weights = vec![0.0; n * m * d];
    let mut biases = vec![0.0; n * m];
    let mut at = 0;
    let mut take = || {
        let v = f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        at += 8;
        v
    };
    for i in 0..n {
        for j in 0..m {
            biases[i * m + j] = take();
            let base = (i * m + j) * d;
            for w in weights[base..base + d].iter_mut() {
                *w = take();
            }
        }
    }
    LdnnModel::from_parts(n, m, d, weights, biases, entry.trained_with_dropout)
}

/// Saves the model into `dir`, creating it if needed.
pub fn save_model(model: &ChmModel, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| ChmError::io(dir, e))?;
    let class_models = model.classes().len();
    let mut entries = Vec::new();
    for (class, hierarchy) in model.classes().iter().enumerate() {
        for (stage_idx, stage) in hierarchy.stages.iter().enumerate() {
            let stage_no = stage_idx + 1;
            for (level_idx, slot) in stage.bottom_up.iter().enumerate() {
                let level = level_idx + 1;
                match slot {
                    BottomUpSlot::PreviousTopDown => entries.push(ClassifierEntry {
                        class,
                        stage: stage_no,
                        slot: "reused_top_down".into(),
                        level,
                        file: None,
                        groups: 0,
                        per_group: 0,
                        feature_count: 0,
                        trained_with_dropout: false,
                    }),
                    BottomUpSlot::Trained(ldnn) => {
                        let file = blob_name(class_models, class, stage_no, "level", level);
                        write_blob(&dir.join(&file), ldnn)?;
                        entries.push(ClassifierEntry {
                            class,
                            stage: stage_no,
                            slot: "level".into(),
                            level,
                            file: Some(file),
                            groups: ldnn.groups(),
                            per_group: ldnn.per_group(),
                            feature_count: ldnn.feature_count(),
                            trained_with_dropout: ldnn.trained_with_dropout(),
                        });
                    }
                }
            }
            let file = blob_name(class_models, class, stage_no, "top_down", 0);
            write_blob(&dir.join(&file), &stage.top_down)?;
            entries.push(ClassifierEntry {
                class,
                stage: stage_no,
                slot: "top_down".into(),
                level: 0,
                file: Some(file),
                groups: stage.top_down.groups(),
                per_group: stage.top_down.per_group(),
                feature_count: stage.top_down.feature_count(),
                trained_with_dropout: stage.top_down.trained_with_dropout(),
            });
        }
    }
    let manifest = ModelManifest {
        format_version: MODEL_FORMAT_VERSION.into(),
        channels: model.channels(),
        config: model.config().clone(),
        classifiers: entries,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|source| ChmError::Json {
        path: path.clone(),
        source,
    })?;
    fs::write(&path, text).map_err(|e| ChmError::io(&path, e))
}

/// Loads a model directory saved by [`save_model`].
pub fn load_model(dir: &Path) -> Result<ChmModel> {
    let manifest_path = dir.join("manifest.json");
    let text = fs::read_to_string(&manifest_path).map_err(|e| ChmError::io(&manifest_path, e))?;
    let manifest: ModelManifest =
        serde_json::from_str(&text).map_err(|source| ChmError::Json {
            path: manifest_path.clone(),
            source,
        })?;
    if manifest.format_version != MODEL_FORMAT_VERSION {
        return Err(ChmError::VersionMismatch {
            expected: MODEL_FORMAT_VERSION.into(),
            found: manifest.format_version,
        });
    }
    manifest.config.validate()?;
    let class_models = if manifest.config.class_count == 2 {
        1
    } else {
        manifest.config.class_count
    };
    let mut classes = Vec::with_capacity(class_models);
    for class in 0..class_models {
        let mut stages = Vec::new();
        for stage_no in 1..=manifest.config.stages {
            let mut bottom_up = Vec::with_capacity(manifest.config.levels);
            for level in 1..=manifest.config.levels {
                let entry = manifest
                    .classifiers
                    .iter()
                    .find(|e| {
                        e.class == class
                            && e.stage == stage_no
                            && e.level == level
                            && (e.slot == "level" || e.slot == "reused_top_down")
                    })
                    .ok_or_else(|| ChmError::MissingFile {
                        path: dir.join(format!(
                            "manifest entry class {class} stage {stage_no} level {level}"
                        )),
                    })?;
                if entry.slot == "reused_top_down" {
                    bottom_up.push(BottomUpSlot::PreviousTopDown);
                } else {
                    let file = entry.file.as_deref().ok_or(ChmError::MissingFile {
                        path: dir.join("manifest.json"),
                    })?;
                    bottom_up.push(BottomUpSlot::Trained(read_blob(&dir.join(file), entry)?));
                }
            }
            let entry = manifest
                .classifiers
                .iter()
                .find(|e| e.class == class && e.stage == stage_no && e.slot == "top_down")
                .ok_or_else(|| ChmError::MissingFile {
                    path: dir.join(format!("manifest entry class {class} stage {stage_no} top_down")),
                })?;
            let file = entry.file.as_deref().ok_or(ChmError::MissingFile {
                path: dir.join("manifest.json"),
            })?;
            let top_down = read_blob(&dir.join(file), entry)?;
            stages.push(StageClassifiers { bottom_up, top_down });
        }
        classes.push(ClassHierarchy { stages });
    }
    let model = ChmModel::from_parts(manifest.config, manifest.channels, classes)?;
    model.validate_widths()?;
    Ok(model)
}
