//! Experiment configuration (TOML). Every key is optional.
//!
//! ```toml
//! [data]                 # synthetic layered volume
//! seed = 2021
//! height = 64
//! width = 64
//! jitter = 2.0
//! inlines = 60
//! crosslines = 20
//! test_slices = 16
//! # class_names = [...]; bands = [[class, thickness], ...]
//! # appearance = [[mean, std, style_spread], ...]; underrepresented = [4, 5]
//!
//! [train]
//! epochs = 60
//! learning_rate = 0.1
//! batch_size = 256
//!
//! [augment]
//! target_class = 4
//! num_sources = 6
//! transfers_per_source = 64
//! patch_size = 0          # 0 disables patch resampling
//! moment_matching = true
//! conditions = ["flip", "rotate", "support_vector"]
//! seeds = [1, 2, 3, 4, 5]
//! render_top = 3          # before/after renderings of the densest validation slices
//! ```

use std::fs;
use std::path::Path;

use forgetdyn_core::augment::{AugmentConfig, Selector, TransferParams};
use forgetdyn_core::trainer::{Band, ClassAppearance, SyntheticConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub seed: u64,
    pub height: usize,
    pub width: usize,
    pub jitter: f64,
    pub inlines: usize,
    pub crosslines: usize,
    pub test_slices: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class_names: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bands: Option<Vec<(u8, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub appearance: Option<Vec<(f64, f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub underrepresented: Option<Vec<u8>>,
}

impl Default for DataSection {
    fn default() -> Self {
        let d = SyntheticConfig::default();
        DataSection {
            seed: 2021,
            height: d.height,
            width: d.width,
            jitter: d.jitter,
            inlines: d.inlines,
            crosslines: d.crosslines,
            test_slices: d.test_slices,
            class_names: None,
            bands: None,
            appearance: None,
            underrepresented: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: u32,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSection {
            epochs: d.epochs,
            learning_rate: d.learning_rate,
            batch_size: d.batch_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSection {
    pub target_class: u8,
    pub num_sources: usize,
    pub transfers_per_source: usize,
    pub patch_size: usize,
    pub moment_matching: bool,
    pub conditions: Vec<String>,
    pub seeds: Vec<u64>,
    pub render_top: usize,
}

impl Default for AugmentSection {
    fn default() -> Self {
        let d = AugmentConfig::default();
        AugmentSection {
            target_class: d.target_class,
            num_sources: d.num_sources,
            transfers_per_source: d.transfers_per_source,
            patch_size: d.transfer.patch_size.unwrap_or(0),
            moment_matching: d.transfer.moment_matching,
            conditions: ["flip", "rotate", "support_vector"]
                .map(String::from)
                .to_vec(),
            seeds: d.seeds,
            render_top: 3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSection,
    pub train: TrainSection,
    pub augment: AugmentSection,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = fs::read_to_string(path).map_err(|e| CliError::parse(path, e))?;
        let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| CliError::parse(path, e))?;
        cfg.selectors().map_err(|m| CliError::parse(path, m))?;
        Ok(cfg)
    }

    pub fn synthetic(&self) -> SyntheticConfig {
        let d = &self.data;
        let mut cfg = SyntheticConfig {
            height: d.height,
            width: d.width,
            jitter: d.jitter,
            inlines: d.inlines,
            crosslines: d.crosslines,
            test_slices: d.test_slices,
            ..SyntheticConfig::default()
        };
        if let Some(names) = &d.class_names {
            cfg.class_names = names.clone();
        }
        if let Some(bands) = &d.bands {
            cfg.bands = bands
                .iter()
                .map(|&(class_id, thickness)| Band {
                    class_id,
                    thickness,
                })
                .collect();
        }
        if let Some(app) = &d.appearance {
            cfg.appearance = app
                .iter()
                .map(|&(mean, std, style_spread)| ClassAppearance {
                    mean,
                    std,
                    style_spread,
                })
                .collect();
        }
        if let Some(u) = &d.underrepresented {
            cfg.underrepresented = u.clone();
        }
        cfg
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            learning_rate: self.train.learning_rate,
            batch_size: self.train.batch_size,
            ..TrainConfig::default()
        }
    }

    pub fn augment_config(&self) -> AugmentConfig {
        let a = &self.augment;
        AugmentConfig {
            target_class: a.target_class,
            num_sources: a.num_sources,
            transfers_per_source: a.transfers_per_source,
            transfer: TransferParams {
                patch_size: (a.patch_size > 0).then_some(a.patch_size),
                moment_matching: a.moment_matching,
            },
            selector: Selector::SupportVector,
            seeds: a.seeds.clone(),
        }
    }

    /// Conditions compared against the unaugmented baseline, in report order.
    pub fn selectors(&self) -> std::result::Result<Vec<Selector>, String> {
        self.augment
            .conditions
            .iter()
            .map(|n| Selector::from_name(n).ok_or_else(|| format!("unknown condition {n:?}")))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_means_defaults() {
        let cfg: ExperimentConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.synthetic(), SyntheticConfig::default());
        assert_eq!(cfg.train_config(), TrainConfig::default());
        assert_eq!(cfg.augment_config(), AugmentConfig::default());
        assert_eq!(
            cfg.selectors().unwrap(),
            [Selector::Flip, Selector::Rotate, Selector::SupportVector]
        );
    }

    #[test]
    fn overrides_and_typos() {
        let cfg: ExperimentConfig =
            toml::from_str("[augment]\nconditions = [\"none\"]\nseeds = [9]\npatch_size = 3\n")
                .unwrap();
        assert_eq!(cfg.selectors().unwrap(), [Selector::None]);
        assert_eq!(cfg.augment_config().transfer.patch_size, Some(3));
        assert!(toml::from_str::<ExperimentConfig>("[train]\nepoch = 3\n").is_err());
        let bad: ExperimentConfig =
            toml::from_str("[augment]\nconditions = [\"mixup\"]\n").unwrap();
        assert!(bad.selectors().is_err());
    }
}
