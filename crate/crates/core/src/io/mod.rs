//! Dataset ingestion, model persistence and manifest files.

mod image;
mod model;

pub use image::{
    load_annotator_set, load_image, load_labels, load_probability_png, save_label_png, save_pgm,
    save_probability_png,
};
pub use model::{load_model, save_model, MODEL_FORMAT_VERSION};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ChmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Label,
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image: PathBuf,
    /// Label image for label tasks; for edge tasks, a file or a directory
    /// of per-annotator boundary maps.
    pub labels: PathBuf,
    pub split: Split,
}

/// Ordered dataset description. Datasets are always referenced through a
/// manifest file, never by directory convention; entry paths are resolved
/// relative to the manifest's own directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub class_count: usize,
    pub task: Task,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn entries_for(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }
}

/// Loads and validates a manifest: every referenced file must exist, and
/// entry paths are rebased onto the manifest directory.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| ChmError::io(path, e))?;
    let mut manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|source| ChmError::Json {
            path: path.into(),
            source,
        })?;
    if manifest.class_count < 2 {
        return Err(ChmError::InvalidConfig(
            "manifest class_count must be >= 2".into(),
        ));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    for entry in &mut manifest.entries {
        entry.image = base.join(&entry.image);
        entry.labels = base.join(&entry.labels);
        if !entry.image.exists() {
            return Err(ChmError::MissingFile {
                path: entry.image.clone(),
            });
        }
        if !entry.labels.exists() {
            return Err(ChmError::MissingFile {
                path: entry.labels.clone(),
            });
        }
    }
    Ok(manifest)
}

/// Writes a manifest with entry paths as given (callers pass paths relative
/// to the manifest location).
pub fn save_manifest(path: &Path, manifest: &DatasetManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).map_err(|source| ChmError::Json {
        path: path.into(),
        source,
    })?;
    std::fs::write(path, text).map_err(|e| ChmError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_roundtrip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("img.pgm"),
            [b"P5\n1 1\n255\n".as_slice(), &[128]].concat(),
        )
        .unwrap();
        std::fs::write(
            dir.path().join("lab.pgm"),
            [b"P5\n1 1\n255\n".as_slice(), &[1]].concat(),
        )
        .unwrap();
        let manifest = DatasetManifest {
            class_count: 2,
            task: Task::Label,
            entries: vec![ManifestEntry {
                image: "img.pgm".into(),
                labels: "lab.pgm".into(),
                split: Split::Train,
            }],
        };
        let path = dir.path().join("manifest.json");
        save_manifest(&path, &manifest).unwrap();
        let loaded = load_manifest(&path).unwrap();
        assert_eq!(loaded.entries.len(), 1);
        assert!(loaded.entries[0].image.is_absolute() || loaded.entries[0].image.exists());
    }

    #[test]
    fn missing_file_is_diagnosed_with_path() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = DatasetManifest {
            class_count: 2,
            task: Task::Label,
            entries: vec![ManifestEntry {
                image: "nope.pgm".into(),
                labels: "lab.pgm".into(),
                split: Split::Train,
            }],
        };
        let path = dir.path().join("manifest.json");
        save_manifest(&path, &manifest).unwrap();
        match load_manifest(&path) {
            Err(ChmError::MissingFile { path }) => {
                assert!(path.to_string_lossy().contains("nope.pgm"));
            }
            other => panic!("expected MissingFile, got {other:?}"),
        }
    }
}
