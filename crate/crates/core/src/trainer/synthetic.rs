//! Layered facies slices.
//!
//! Every slice is a stack of horizontal bands whose interfaces undulate along
//! the columns and shift per slice. Pixel intensity is the class mean, plus a
//! per-slice style offset for that class, plus white noise. Thin bands make
//! their classes underrepresented.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::image::{ClassId, Dataset, LabeledImage};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub class_id: ClassId,
    /// Fraction of the image height.
    pub thickness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassAppearance {
    pub mean: f64,
    /// Within-slice pixel noise.
    pub std: f64,
    /// Standard deviation of the per-slice offset added to `mean`.
    pub style_spread: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub height: usize,
    pub width: usize,
    pub class_names: Vec<String>,
    /// Top to bottom.
    pub bands: Vec<Band>,
    /// Indexed by class id.
    pub appearance: Vec<ClassAppearance>,
    /// Amplitude, in pixels, of per-slice interface shifts and undulation.
    pub jitter: f64,
    pub underrepresented: Vec<ClassId>,
    pub inlines: usize,
    pub crosslines: usize,
    pub test_slices: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        let names = [
            "upper_north_sea",
            "middle_north_sea",
            "lower_north_sea",
            "chalk",
            "scruff",
            "zechstein",
        ];
        let appearance = |mean, style_spread| ClassAppearance {
            mean,
            std: 0.12,
            style_spread,
        };
        SyntheticConfig {
            height: 64,
            width: 64,
            class_names: names.iter().map(|s| s.to_string()).collect(),
            bands: [
                (0, 0.30),
                (1, 0.18),
                (2, 0.24),
                (3, 0.12),
                (4, 0.07),
                (5, 0.09),
            ]
            .iter()
            .map(|&(class_id, thickness)| Band {
                class_id,
                thickness,
            })
            .collect(),
            appearance: alloc::vec![
                appearance(0.20, 0.03),
                appearance(0.50, 0.03),
                appearance(0.30, 0.03),
                appearance(0.80, 0.03),
                appearance(0.45, 0.12),
                appearance(0.90, 0.03),
            ],
            jitter: 2.0,
            underrepresented: alloc::vec![4, 5],
            inlines: 60,
            crosslines: 20,
            test_slices: 16,
        }
    }
}

impl SyntheticConfig {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let k = self.num_classes();
        if !(2..=256).contains(&k) {
            return bad(alloc::format!("need 2..=256 classes, got {k}"));
        }
        if self.height == 0 || self.width == 0 {
            return bad("image size must be at least 1x1".into());
        }
        if self.appearance.len() != k {
            return bad(alloc::format!(
                "{} appearances for {k} classes",
                self.appearance.len()
            ));
        }
        if self.appearance.iter().any(|a| {
            !a.mean.is_finite()
                || a.std.is_nan()
                || a.std < 0.0
                || a.style_spread.is_nan()
                || a.style_spread < 0.0
        }) {
            return bad("appearance parameters must be finite and spreads non-negative".into());
        }
        if self
            .bands
            .iter()
            .any(|b| b.thickness.is_nan() || b.thickness <= 0.0 || b.class_id as usize >= k)
        {
            return bad("band thickness must be positive and class ids valid".into());
        }
        let total: f64 = self.bands.iter().map(|b| b.thickness).sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(alloc::format!("band thicknesses sum to {total}, not 1"));
        }
        for c in 0..k {
            if !self.bands.iter().any(|b| b.class_id as usize == c) {
                return bad(alloc::format!("class {c} missing from band layout"));
            }
        }
        if self.underrepresented.is_empty() {
            return bad("at least one class must be underrepresented".into());
        }
        if let Some(&c) = self.underrepresented.iter().find(|&&c| c as usize >= k) {
            return bad(alloc::format!("underrepresented class {c} does not exist"));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return bad("jitter must be finite and non-negative".into());
        }
        if self.inlines + self.crosslines == 0 {
            return bad("volume has no slices".into());
        }
        Ok(())
    }

    fn slice(&self, image_id: String, mut rng: RngStream) -> LabeledImage {
        let (h, w) = (self.height, self.width);
        let nb = self.bands.len();
        let shifts: Vec<f64> = (1..nb)
            .map(|_| self.jitter * rng.uniform(-1.0, 1.0))
            .collect();
        let phase = rng.uniform(0.0, TAU);
        let style: Vec<f64> = self
            .appearance
            .iter()
            .map(|a| a.style_spread * rng.normal())
            .collect();

        // Interface rows per column; band j spans [iface[j-1], iface[j]).
        let mut boundaries = Grid::filled(w, nb.saturating_sub(1).max(1), h);
        for c in 0..w {
            let wave = 0.5 * self.jitter * libm::sin(TAU * c as f64 / w as f64 + phase);
            let mut cum = 0.0;
            let mut prev = 0usize;
            for (j, (band, shift)) in self.bands.iter().zip(&shifts).enumerate() {
                cum += band.thickness;
                let depth =
                    libm::round(cum * h as f64 + shift + wave).clamp(0.0, h as f64) as usize;
                let depth = depth.max(prev);
                *boundaries.get_mut(c, j) = depth;
                prev = depth;
            }
        }
        let labels = Grid::from_fn(h, w, |r, c| {
            let band = (0..nb - 1)
                .find(|&j| r < *boundaries.get(c, j))
                .unwrap_or(nb - 1);
            self.bands[band].class_id
        });
        let features = labels.map(|&l| {
            let a = &self.appearance[l as usize];
            a.mean + style[l as usize] + a.std * rng.normal()
        });
        LabeledImage {
            image_id,
            features,
            labels,
        }
    }
}

const INLINE_STREAM: u64 = 1 << 32;
const CROSSLINE_STREAM: u64 = 2 << 32;
const TEST_STREAM: u64 = 3 << 32;

/// Builds the synthetic volume.
///
/// Inlines and crosslines whose index is a multiple of five form the
/// validation split, the rest the training split. Test slices come from a
/// separate stream. Each slice draws from its own fork of `rng`, so the result
/// depends only on the seed and the config.
pub fn generate_dataset(cfg: &SyntheticConfig, rng: &RngStream) -> Result<Dataset> {
    cfg.validate()?;
    let mut train = Vec::new();
    let mut validation = Vec::new();
    let families = [
        ("inline", cfg.inlines, INLINE_STREAM),
        ("crossline", cfg.crosslines, CROSSLINE_STREAM),
    ];
    for (name, count, stream) in families {
        for idx in 0..count {
            let img = cfg.slice(
                alloc::format!("{name}-{idx:04}"),
                rng.fork(stream + idx as u64),
            );
            if idx % 5 == 0 {
                validation.push(img);
            } else {
                train.push(img);
            }
        }
    }
    let test = (0..cfg.test_slices)
        .map(|idx| {
            cfg.slice(
                alloc::format!("test-{idx:04}"),
                rng.fork(TEST_STREAM + idx as u64),
            )
        })
        .collect();
    Ok(Dataset {
        num_classes: cfg.num_classes(),
        class_names: cfg.class_names.clone(),
        train,
        validation,
        test,
    })
}
