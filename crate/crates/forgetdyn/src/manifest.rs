//! Trace manifest: which prediction masks belong to which image, in epoch order.
//!
//! ```json
//! {
//!   "version": 1,
//!   "num_classes": 6,
//!   "ignore_label": 255,
//!   "images": [
//!     { "image_id": "inline-0005",
//!       "labels": "labels/inline-0005.png",
//!       "predictions": ["pred/e000/inline-0005.png", "pred/e001/inline-0005.png"] }
//!   ]
//! }
//! ```
//!
//! Relative paths are resolved against the manifest's directory. `ignore_label`
//! is optional.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use forgetdyn_core::image::LabelSpace;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageEntry {
    pub image_id: String,
    pub labels: PathBuf,
    pub predictions: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceManifest {
    pub version: u32,
    pub num_classes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ignore_label: Option<u8>,
    pub images: Vec<ImageEntry>,
}

impl TraceManifest {
    pub fn label_space(&self) -> LabelSpace {
        LabelSpace {
            num_classes: self.num_classes,
            ignore_label: self.ignore_label,
        }
    }

    /// Parses, validates and resolves every path against `base`.
    pub fn load(path: &Path) -> Result<TraceManifest> {
        let text = fs::read_to_string(path).map_err(|e| CliError::parse(path, e))?;
        let mut manifest: TraceManifest =
            serde_json::from_str(&text).map_err(|e| CliError::parse(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for entry in &mut manifest.images {
            entry.labels = base.join(&entry.labels);
            for p in &mut entry.predictions {
                *p = base.join(&*p);
            }
        }
        manifest
            .validate()
            .map_err(|msg| CliError::parse(path, msg))?;
        Ok(manifest)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.version != MANIFEST_VERSION {
            return Err(format!("unsupported manifest version {}", self.version));
        }
        if !(2..=256).contains(&self.num_classes) {
            return Err(format!(
                "num_classes must be in 2..=256, got {}",
                self.num_classes
            ));
        }
        let mut ids = BTreeSet::new();
        for entry in &self.images {
            let id = &entry.image_id;
            if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
                return Err(format!("image id {id:?} cannot be used as a file name"));
            }
            if !ids.insert(id.as_str()) {
                return Err(format!("duplicate image id {id}"));
            }
            if entry.predictions.is_empty() {
                return Err(format!("image {id} has no predictions"));
            }
            for p in std::iter::once(&entry.labels).chain(&entry.predictions) {
                if !p.is_file() {
                    return Err(format!("missing file {} (image {id})", p.display()));
                }
            }
        }
        Ok(())
    }
}
