use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::LabeledImage;

pub const FEATURE_DIM: usize = 4;

/// `[intensity, 3x3 mean, 3x3 std, row / height]`.
pub type FeatureVector = [f64; FEATURE_DIM];

/// Features of the pixel at `(row, col)`; the 3x3 window is edge-clamped.
pub fn extract_features(image: &LabeledImage, row: usize, col: usize) -> Result<FeatureVector> {
    let (h, w) = image.features.dims();
    if row >= h || col >= w {
        return Err(Error::OutOfBounds {
            row,
            col,
            height: h,
            width: w,
        });
    }
    Ok(features_at(image, row, col))
}

fn features_at(image: &LabeledImage, row: usize, col: usize) -> FeatureVector {
    let g = &image.features;
    let (h, w) = g.dims();
    let mut window = [0.0f64; 9];
    let mut k = 0;
    for dr in [-1isize, 0, 1] {
        for dc in [-1isize, 0, 1] {
            let r = (row as isize + dr).clamp(0, h as isize - 1) as usize;
            let c = (col as isize + dc).clamp(0, w as isize - 1) as usize;
            window[k] = *g.get(r, c);
            k += 1;
        }
    }
    let mean = window.iter().sum::<f64>() / 9.0;
    let var = window.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 9.0;
    [
        *g.get(row, col),
        mean,
        libm::sqrt(var),
        row as f64 / h as f64,
    ]
}

/// Features of every pixel in row-major order.
pub fn image_features(image: &LabeledImage) -> Vec<FeatureVector> {
    let (h, w) = image.features.dims();
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            out.push(features_at(image, r, c));
        }
    }
    out
}
