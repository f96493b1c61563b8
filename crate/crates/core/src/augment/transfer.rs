use alloc::string::String;
use alloc::vec::Vec;

use crate::analytics::DensityRanking;
use crate::error::{Error, Result};
use crate::image::{ClassId, LabeledImage};
use crate::rng::RngStream;

/// First `k` image ids of a ranking.
pub fn select_sources(ranking: &DensityRanking, k: usize) -> Result<Vec<String>> {
    if ranking.is_empty() {
        return Err(Error::EmptyRanking);
    }
    Ok(ranking
        .entries
        .iter()
        .take(k)
        .map(|e| e.image_id.clone())
        .collect())
}

/// How the class region of the target is rewritten.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransferParams {
    /// Resample the region from source patches of this side length before matching.
    pub patch_size: Option<usize>,
    /// Affinely remap region values to the source region's mean and std.
    pub moment_matching: bool,
}

impl Default for TransferParams {
    fn default() -> Self {
        TransferParams {
            patch_size: None,
            moment_matching: true,
        }
    }
}

impl TransferParams {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size == Some(0) {
            return Err(Error::InvalidConfig("patch size must be >= 1".into()));
        }
        if self.patch_size.is_none() && !self.moment_matching {
            return Err(Error::InvalidConfig(
                "transfer needs patch resampling or moment matching".into(),
            ));
        }
        Ok(())
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

fn region(image: &LabeledImage, class_id: ClassId) -> Result<Vec<usize>> {
    let idx: Vec<usize> = image
        .labels
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == class_id)
        .map(|(i, _)| i)
        .collect();
    if idx.is_empty() {
        Err(Error::ClassAbsent {
            class_id,
            image_id: image.image_id.clone(),
        })
    } else {
        Ok(idx)
    }
}

/// Rewrites the appearance of `class_id` in `target` with the statistics of the
/// same class in `source`.
///
/// Labels and every pixel outside the class region are copied from `target`
/// unchanged. The result is identified as `"{target}<{source}"`.
pub fn feature_transfer(
    source: &LabeledImage,
    target: &LabeledImage,
    class_id: ClassId,
    rng: &mut RngStream,
    params: &TransferParams,
) -> Result<LabeledImage> {
    params.validate()?;
    let src_idx = region(source, class_id)?;
    let dst_idx = region(target, class_id)?;
    let src_vals: Vec<f64> = src_idx
        .iter()
        .map(|&i| source.features.as_slice()[i])
        .collect();
    let (src_mean, src_std) = mean_std(&src_vals);

    let mut out = target.clone();
    out.image_id = alloc::format!("{}<{}", target.image_id, source.image_id);

    if let Some(patch) = params.patch_size {
        if src_std == 0.0 {
            return Err(Error::DegenerateRegion {
                class_id,
                image_id: source.image_id.clone(),
            });
        }
        resample_patches(source, &src_idx, &mut out, class_id, patch, rng);
    }

    if params.moment_matching {
        let feats = out.features.as_mut_slice();
        let vals: Vec<f64> = dst_idx.iter().map(|&i| feats[i]).collect();
        let (mean, std) = mean_std(&vals);
        for &i in &dst_idx {
            feats[i] = if std > 0.0 {
                (feats[i] - mean) / std * src_std + src_mean
            } else {
                src_mean
            };
        }
    }
    Ok(out)
}

/// Fills the class region of `out` block by block: each `patch x patch` block
/// copies the source texture around a random anchor inside the source region,
/// falling back to a random region pixel where the offset leaves that region.
fn resample_patches(
    source: &LabeledImage,
    src_idx: &[usize],
    out: &mut LabeledImage,
    class_id: ClassId,
    patch: usize,
    rng: &mut RngStream,
) {
    let (h, w) = out.labels.dims();
    let (sh, sw) = source.labels.dims();
    let src = source.features.as_slice();
    for br in (0..h).step_by(patch) {
        for bc in (0..w).step_by(patch) {
            let anchor = src_idx[rng.index(src_idx.len())];
            let (ar, ac) = (anchor / sw, anchor % sw);
            for dr in 0..patch.min(h - br) {
                for dc in 0..patch.min(w - bc) {
                    let (r, c) = (br + dr, bc + dc);
                    if *out.labels.get(r, c) != class_id {
                        continue;
                    }
                    let (sr, sc) = (ar + dr, ac + dc);
                    let value = if sr < sh && sc < sw && *source.labels.get(sr, sc) == class_id {
                        *source.features.get(sr, sc)
                    } else {
                        src[src_idx[rng.index(src_idx.len())]]
                    };
                    *out.features.get_mut(r, c) = value;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{DensityRanking, RankEntry};
    use crate::grid::Grid;

    fn ranking(ids: &[&str]) -> DensityRanking {
        DensityRanking {
            class_id: 0,
            entries: ids
                .iter()
                .enumerate()
                .map(|(i, id)| RankEntry {
                    image_id: (*id).into(),
                    density: (10 - i) as f64,
                    pixel_count: 1,
                })
                .collect(),
        }
    }

    #[test]
    fn prefix_and_truncation() {
        assert_eq!(
            select_sources(&ranking(&["A", "B", "C"]), 2).unwrap(),
            ["A", "B"]
        );
        assert_eq!(select_sources(&ranking(&["A"]), 6).unwrap(), ["A"]);
        assert_eq!(select_sources(&ranking(&[]), 6), Err(Error::EmptyRanking));
    }

    fn striped(id: &str, f: impl FnMut(usize, usize) -> f64) -> LabeledImage {
        LabeledImage::new(
            id,
            Grid::from_fn(6, 5, f),
            Grid::from_fn(6, 5, |r, _| (2..4).contains(&r) as u8),
        )
        .unwrap()
    }

    fn class_stats(img: &LabeledImage, class: u8) -> (f64, f64) {
        let vals: Vec<f64> = img
            .features
            .as_slice()
            .iter()
            .zip(img.labels.as_slice())
            .filter(|(_, &l)| l == class)
            .map(|(&v, _)| v)
            .collect();
        mean_std(&vals)
    }

    #[test]
    fn constant_source_region() {
        let source = striped("s", |r, _| if (2..4).contains(&r) { 10.0 } else { -1.0 });
        let target = striped("t", |r, c| (r * 5 + c) as f64 * 0.3);
        let out = feature_transfer(
            &source,
            &target,
            1,
            &mut RngStream::new(1),
            &TransferParams::default(),
        )
        .unwrap();
        let (m, s) = class_stats(&out, 1);
        assert!((m - 10.0).abs() < 1e-12);
        assert!(s < 1e-12);
        assert_eq!(out.labels, target.labels);
        for (i, &l) in target.labels.as_slice().iter().enumerate() {
            if l != 1 {
                assert_eq!(
                    out.features.as_slice()[i].to_bits(),
                    target.features.as_slice()[i].to_bits()
                );
            }
        }
        assert_eq!(out.image_id, "t<s");
    }

    #[test]
    fn self_transfer_preserves_stats() {
        let img = striped("t", |r, c| ((r * 7 + c * 3) % 5) as f64 + 0.25 * c as f64);
        let out = feature_transfer(
            &img,
            &img,
            1,
            &mut RngStream::new(1),
            &TransferParams::default(),
        )
        .unwrap();
        let (m0, s0) = class_stats(&img, 1);
        let (m1, s1) = class_stats(&out, 1);
        assert!((m0 - m1).abs() < 1e-9 && (s0 - s1).abs() < 1e-9);
        for (a, b) in img.features.as_slice().iter().zip(out.features.as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn different_sources_differ_only_in_region() {
        let target = striped("t", |r, c| (r + c) as f64);
        let s1 = striped("s1", |r, c| (r * c) as f64 * 0.1);
        let s2 = striped("s2", |r, c| 5.0 + (r * c) as f64);
        let p = TransferParams::default();
        let a = feature_transfer(&s1, &target, 1, &mut RngStream::new(2), &p).unwrap();
        let b = feature_transfer(&s2, &target, 1, &mut RngStream::new(2), &p).unwrap();
        let mut changed = 0;
        for (i, &l) in target.labels.as_slice().iter().enumerate() {
            let d = a.features.as_slice()[i] - b.features.as_slice()[i];
            if l == 1 {
                changed += (d != 0.0) as usize;
            } else {
                assert_eq!(d, 0.0);
            }
        }
        assert!(changed > 0);
    }

    #[test]
    fn patch_mode() {
        let source = striped("s", |r, c| (r * 10 + c) as f64);
        let target = striped("t", |_, _| 0.0);
        let p = TransferParams {
            patch_size: Some(2),
            moment_matching: false,
        };
        let out = feature_transfer(&source, &target, 1, &mut RngStream::new(4), &p).unwrap();
        let region_vals: Vec<f64> = (20..40).map(|v| v as f64).collect();
        for (i, &l) in target.labels.as_slice().iter().enumerate() {
            let v = out.features.as_slice()[i];
            if l == 1 {
                assert!(region_vals.contains(&v), "{v} not from source region");
            } else {
                assert_eq!(v, 0.0);
            }
        }

        let flat = striped("f", |_, _| 3.0);
        assert!(matches!(
            feature_transfer(&flat, &target, 1, &mut RngStream::new(4), &p),
            Err(Error::DegenerateRegion { .. })
        ));
    }

    #[test]
    fn absent_class() {
        let a = striped("a", |_, _| 0.0);
        let p = TransferParams::default();
        assert!(matches!(
            feature_transfer(&a, &a, 3, &mut RngStream::new(0), &p),
            Err(Error::ClassAbsent { class_id: 3, .. })
        ));
    }
}
