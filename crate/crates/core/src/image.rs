use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{ClassGrid, Grid};

pub type ClassId = u8;

/// Class-id domain shared by truth and prediction grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelSpace {
    pub num_classes: usize,
    /// Truth pixels carrying this value are excluded from accuracy, counting and density.
    pub ignore_label: Option<ClassId>,
}

impl LabelSpace {
    pub fn new(num_classes: usize) -> Self {
        LabelSpace {
            num_classes,
            ignore_label: None,
        }
    }

    pub fn with_ignore(mut self, label: ClassId) -> Self {
        self.ignore_label = Some(label);
        self
    }

    #[inline]
    pub fn is_ignored(&self, label: ClassId) -> bool {
        self.ignore_label == Some(label)
    }

    fn check(&self, id: ClassId, allow_ignore: bool) -> Result<()> {
        if (id as usize) < self.num_classes || (allow_ignore && self.is_ignored(id)) {
            Ok(())
        } else {
            Err(Error::InvalidClassId {
                class_id: id,
                num_classes: self.num_classes,
            })
        }
    }
}

/// Checks that a prediction can be scored against a truth grid.
///
/// Truth may contain the ignore label; predictions may not.
pub fn validate_pair(pred: &ClassGrid, truth: &ClassGrid, space: &LabelSpace) -> Result<()> {
    truth.check_same_dims(pred)?;
    for &p in pred.as_slice() {
        space.check(p, false)?;
    }
    for &t in truth.as_slice() {
        space.check(t, true)?;
    }
    Ok(())
}

/// A single 2D slice: scalar intensity per pixel plus its class annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub image_id: String,
    pub features: Grid<f64>,
    pub labels: ClassGrid,
}

impl LabeledImage {
    pub fn new(
        image_id: impl Into<String>,
        features: Grid<f64>,
        labels: ClassGrid,
    ) -> Result<Self> {
        features.check_same_dims(&labels)?;
        if features.is_empty() {
            return Err(Error::DimensionMismatch {
                expected_height: 1,
                expected_width: 1,
                height: 0,
                width: 0,
            });
        }
        Ok(LabeledImage {
            image_id: image_id.into(),
            features,
            labels,
        })
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.labels.height()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.labels.width()
    }

    pub fn class_pixel_count(&self, class_id: ClassId) -> usize {
        self.labels
            .as_slice()
            .iter()
            .filter(|&&l| l == class_id)
            .count()
    }

    pub fn flip_horizontal(&self, image_id: impl Into<String>) -> LabeledImage {
        LabeledImage {
            image_id: image_id.into(),
            features: self.features.flip_horizontal(),
            labels: self.labels.flip_horizontal(),
        }
    }

    pub fn rotate_quarter_turns(
        &self,
        quarter_turns: u32,
        image_id: impl Into<String>,
    ) -> LabeledImage {
        LabeledImage {
            image_id: image_id.into(),
            features: self.features.rotate_quarter_turns(quarter_turns),
            labels: self.labels.rotate_quarter_turns(quarter_turns),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub num_classes: usize,
    pub class_names: Vec<String>,
    pub train: Vec<LabeledImage>,
    pub validation: Vec<LabeledImage>,
    pub test: Vec<LabeledImage>,
}

impl Dataset {
    /// Checks class-name count, label range and id uniqueness across splits.
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 || self.num_classes > 256 {
            return Err(Error::InvalidConfig(alloc::format!(
                "num_classes must be in 2..=256, got {}",
                self.num_classes
            )));
        }
        if self.class_names.len() != self.num_classes {
            return Err(Error::InvalidConfig(alloc::format!(
                "{} class names for {} classes",
                self.class_names.len(),
                self.num_classes
            )));
        }
        let space = LabelSpace::new(self.num_classes);
        let mut ids = BTreeSet::new();
        for img in self.images() {
            for &l in img.labels.as_slice() {
                space.check(l, false)?;
            }
            if !ids.insert(img.image_id.as_str()) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "duplicate image id {}",
                    img.image_id
                )));
            }
        }
        Ok(())
    }

    pub fn images(&self) -> impl Iterator<Item = &LabeledImage> {
        self.train.iter().chain(&self.validation).chain(&self.test)
    }

    pub fn label_space(&self) -> LabelSpace {
        LabelSpace::new(self.num_classes)
    }
}
