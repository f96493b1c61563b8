//! Forgetting density, image ranking and boundary margins.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::image::{ClassId, LabeledImage};
use crate::tracker::{partition_pixels, HeatMap, PixelGroup};
use crate::trainer::{image_features, ToyModel};

/// Forgetting events of `class_id` per pixel of that class, using ground-truth labels.
///
/// `Ok(None)` when the class does not occur in the image.
pub fn class_density(
    heatmap: &HeatMap,
    image: &LabeledImage,
    class_id: ClassId,
) -> Result<Option<f64>> {
    let (sum, n) = class_events(heatmap, image, class_id)?;
    Ok((n > 0).then(|| sum as f64 / n as f64))
}

/// `(sum of counts, pixel count)` over the pixels labelled `class_id`.
pub fn class_events(
    heatmap: &HeatMap,
    image: &LabeledImage,
    class_id: ClassId,
) -> Result<(u64, usize)> {
    image.labels.check_same_dims(heatmap.counts())?;
    let mut sum = 0u64;
    let mut n = 0usize;
    for (&l, &c) in image
        .labels
        .as_slice()
        .iter()
        .zip(heatmap.counts().as_slice())
    {
        if l == class_id {
            sum += c as u64;
            n += 1;
        }
    }
    Ok((sum, n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    pub image_id: String,
    pub density: f64,
    pub pixel_count: usize,
}

/// Images ordered by forgetting density of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityRanking {
    pub class_id: ClassId,
    /// Density descending, then `image_id` ascending.
    pub entries: Vec<RankEntry>,
}

impl DensityRanking {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

/// Ranks images by density of `class_id`; images without the class are left out.
pub fn rank_images<'a, I>(items: I, class_id: ClassId) -> Result<DensityRanking>
where
    I: IntoIterator<Item = (&'a str, &'a HeatMap, &'a LabeledImage)>,
{
    let mut entries = Vec::new();
    for (id, heatmap, image) in items {
        let (sum, n) = class_events(heatmap, image, class_id)?;
        if n > 0 {
            entries.push(RankEntry {
                image_id: id.into(),
                density: sum as f64 / n as f64,
                pixel_count: n,
            });
        }
    }
    entries.sort_by(|a, b| {
        b.density
            .partial_cmp(&a.density)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.image_id.cmp(&b.image_id))
    });
    Ok(DensityRanking { class_id, entries })
}

/// Unsigned distance of each pixel's features to the boundary between its top two classes.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginField {
    pub margins: Grid<f64>,
    /// `(best, runner-up)` class per pixel.
    pub top2: Grid<(ClassId, ClassId)>,
}

/// `(s1 - s2) / |w1 - w2|` for the two highest-scoring classes of every pixel.
///
/// Fails with `UntrainedModel` when the model has fewer than two classes or
/// when the top two classes share a weight vector, since no boundary exists in
/// feature space then.
pub fn margin(model: &ToyModel, image: &LabeledImage) -> Result<MarginField> {
    model.check_usable()?;
    let k = model.num_classes();
    if k < 2 {
        return Err(Error::UntrainedModel);
    }
    let (h, w) = image.labels.dims();
    let mut margins = Vec::with_capacity(h * w);
    let mut top2 = Vec::with_capacity(h * w);
    let mut scores = alloc::vec![0.0; k];
    for x in image_features(image) {
        model.scores_into(&x, &mut scores);
        let (mut a, mut b) = if scores[1] > scores[0] {
            (1, 0)
        } else {
            (0, 1)
        };
        for c in 2..k {
            if scores[c] > scores[a] {
                b = a;
                a = c;
            } else if scores[c] > scores[b] {
                b = c;
            }
        }
        let norm = libm::sqrt(
            model.weights[a]
                .iter()
                .zip(&model.weights[b])
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>(),
        );
        if norm == 0.0 {
            return Err(Error::UntrainedModel);
        }
        margins.push((scores[a] - scores[b]) / norm);
        top2.push((a as ClassId, b as ClassId));
    }
    Ok(MarginField {
        margins: Grid::from_vec(h, w, margins)?,
        top2: Grid::from_vec(h, w, top2)?,
    })
}

/// Relation between forgetting counts and margins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginCorrelation {
    /// Spearman correlation of (count, margin) over learned pixels.
    pub rank_correlation: f64,
    pub mean_margin_forgettable: f64,
    pub mean_margin_unforgettable: f64,
    pub forgettable_pixels: usize,
    pub unforgettable_pixels: usize,
}

/// Single-image form of [`margin_forgetting_correlation_pooled`].
pub fn margin_forgetting_correlation(
    heatmap: &HeatMap,
    margins: &MarginField,
) -> Result<MarginCorrelation> {
    margin_forgetting_correlation_pooled([(heatmap, margins)])
}

/// Correlates counts with margins over all learned pixels of several images.
///
/// Groups use threshold 1: forgettable pixels were forgotten at least once,
/// unforgettable pixels were learned and never forgotten. Never-learned and
/// ignored pixels are left out of both the groups and the correlation.
pub fn margin_forgetting_correlation_pooled<'a, I>(pairs: I) -> Result<MarginCorrelation>
where
    I: IntoIterator<Item = (&'a HeatMap, &'a MarginField)>,
{
    let mut counts = Vec::new();
    let mut values = Vec::new();
    let (mut sum_f, mut n_f, mut sum_u, mut n_u) = (0.0, 0usize, 0.0, 0usize);
    for (heatmap, field) in pairs {
        heatmap.counts().check_same_dims(&field.margins)?;
        let groups = partition_pixels(heatmap, 1);
        for ((g, &c), &m) in groups
            .as_slice()
            .iter()
            .zip(heatmap.counts().as_slice())
            .zip(field.margins.as_slice())
        {
            match g {
                PixelGroup::Forgettable => {
                    sum_f += m;
                    n_f += 1;
                }
                PixelGroup::Unforgettable => {
                    sum_u += m;
                    n_u += 1;
                }
                PixelGroup::NeverLearned | PixelGroup::Ignored => continue,
            }
            counts.push(c as f64);
            values.push(m);
        }
    }
    if n_f == 0 || n_u == 0 {
        return Err(Error::DegenerateGroups("a pixel group is empty"));
    }
    let rho = spearman(&counts, &values)
        .ok_or(Error::DegenerateGroups("counts or margins are constant"))?;
    Ok(MarginCorrelation {
        rank_correlation: rho,
        mean_margin_forgettable: sum_f / n_f as f64,
        mean_margin_unforgettable: sum_u / n_u as f64,
        forgettable_pixels: n_f,
        unforgettable_pixels: n_u,
    })
}

/// Average ranks (1-based) with ties sharing their mean rank.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(Ordering::Equal));
    let mut ranks = alloc::vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && xs[idx[j]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
    }
}

/// Spearman rank correlation; `None` when either side is constant or shorter than 2.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::FEATURE_DIM;
    use alloc::vec;

    fn heat(counts: Grid<u32>) -> HeatMap {
        let (h, w) = counts.dims();
        HeatMap::from_parts(counts, 100, Grid::filled(h, w, true), None).unwrap()
    }

    fn labelled(labels: Grid<u8>) -> LabeledImage {
        let (h, w) = labels.dims();
        LabeledImage::new("x", Grid::filled(h, w, 0.0), labels).unwrap()
    }

    #[test]
    fn density_constant_field() {
        let hm = heat(Grid::filled(3, 3, 5));
        let img = labelled(Grid::from_fn(3, 3, |r, _| (r == 1) as u8));
        assert_eq!(class_density(&hm, &img, 1).unwrap(), Some(5.0));
        assert_eq!(class_density(&hm, &img, 2).unwrap(), None);
    }

    #[test]
    fn density_hand_sum() {
        let hm = heat(Grid::from_rows(&[[3u32, 0, 1, 9]]));
        let img = labelled(Grid::from_rows(&[[2u8, 2, 2, 0]]));
        assert_eq!(class_density(&hm, &img, 2).unwrap(), Some(4.0 / 3.0));
    }

    #[test]
    fn density_shape_mismatch() {
        let hm = heat(Grid::filled(2, 3, 0));
        let img = labelled(Grid::filled(3, 2, 0));
        assert!(matches!(
            class_density(&hm, &img, 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ranking_order_and_exclusion() {
        let img_a = labelled(Grid::filled(1, 2, 1));
        let img_c = labelled(Grid::filled(1, 2, 0));
        let a = heat(Grid::from_rows(&[[2u32, 2]]));
        let b = heat(Grid::from_rows(&[[1u32, 0]]));
        let c = heat(Grid::from_rows(&[[3u32, 3]]));
        let r = rank_images([("B", &b, &img_a), ("C", &c, &img_c), ("A", &a, &img_a)], 1).unwrap();
        let ids: Vec<&str> = r.entries.iter().map(|e| e.image_id.as_str()).collect();
        assert_eq!(ids, ["A", "B"]);
        assert_eq!(r.entries[1].density, 0.5);

        let tie = rank_images([("B", &a, &img_a), ("A", &a, &img_a)], 1).unwrap();
        let ids: Vec<&str> = tie.entries.iter().map(|e| e.image_id.as_str()).collect();
        assert_eq!(ids, ["A", "B"]);
    }

    fn two_class(w1: [f64; FEATURE_DIM], b1: f64) -> ToyModel {
        ToyModel::from_parameters(vec![w1, [0.0; FEATURE_DIM]], vec![b1, 0.0]).unwrap()
    }

    #[test]
    fn margin_hand_evaluated() {
        // w1 = e_intensity, w2 = 0, equal biases: margin = |intensity|.
        let model = two_class([1.0, 0.0, 0.0, 0.0], 0.0);
        let img = LabeledImage::new("m", Grid::filled(1, 1, 2.0), Grid::filled(1, 1, 0)).unwrap();
        let field = margin(&model, &img).unwrap();
        assert_eq!(*field.margins.get(0, 0), 2.0);
        assert_eq!(*field.top2.get(0, 0), (0, 1));
    }

    #[test]
    fn margin_zero_on_boundary() {
        let model = two_class([1.0, 0.0, 0.0, 0.0], -3.0);
        let img = LabeledImage::new("m", Grid::filled(2, 2, 3.0), Grid::filled(2, 2, 0)).unwrap();
        let field = margin(&model, &img).unwrap();
        assert!(field.margins.as_slice().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn margin_scale_invariant() {
        let m1 = ToyModel::from_parameters(
            vec![
                [1.0, -0.5, 0.2, 0.3],
                [-0.4, 0.9, 0.0, -1.0],
                [0.1, 0.1, 2.0, 0.5],
            ],
            vec![0.1, -0.2, 0.05],
        )
        .unwrap();
        let mut m2 = m1.clone();
        m2.weights.iter_mut().flatten().for_each(|w| *w *= 2.0);
        m2.biases.iter_mut().for_each(|b| *b *= 2.0);
        let img = LabeledImage::new(
            "s",
            Grid::from_fn(5, 5, |r, c| (r as f64 - 2.0) * 0.7 + c as f64 * 0.3),
            Grid::filled(5, 5, 0),
        )
        .unwrap();
        let f1 = margin(&m1, &img).unwrap();
        let f2 = margin(&m2, &img).unwrap();
        assert_eq!(f1.top2, f2.top2);
        for (a, b) in f1.margins.as_slice().iter().zip(f2.margins.as_slice()) {
            assert!(*a >= 0.0);
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(
            crate::trainer::predict(&m1, &img).unwrap(),
            crate::trainer::predict(&m2, &img).unwrap()
        );
    }

    #[test]
    fn margin_needs_a_boundary() {
        let img = LabeledImage::new("m", Grid::filled(1, 1, 2.0), Grid::filled(1, 1, 0)).unwrap();
        assert_eq!(
            margin(&ToyModel::zeros(3), &img),
            Err(Error::UntrainedModel)
        );
    }

    fn field(margins: Grid<f64>) -> MarginField {
        let (h, w) = margins.dims();
        MarginField {
            margins,
            top2: Grid::filled(h, w, (0, 1)),
        }
    }

    #[test]
    fn perfect_anti_rank() {
        let hm = heat(Grid::from_rows(&[[0u32, 1, 2, 3, 4]]));
        let mf = field(Grid::from_rows(&[[5.0, 4.0, 3.0, 2.0, 1.0]]));
        let r = margin_forgetting_correlation(&hm, &mf).unwrap();
        assert!((r.rank_correlation + 1.0).abs() < 1e-12);
        assert_eq!(r.mean_margin_unforgettable, 5.0);
        assert_eq!(r.mean_margin_forgettable, 2.5);
    }

    #[test]
    fn constant_counts_are_degenerate() {
        let hm = heat(Grid::filled(2, 3, 1));
        let mf = field(Grid::from_fn(2, 3, |r, c| (r * 3 + c) as f64));
        assert!(matches!(
            margin_forgetting_correlation(&hm, &mf),
            Err(Error::DegenerateGroups(_))
        ));
        let hm = heat(Grid::from_rows(&[[0u32, 1, 2]]));
        let mf = field(Grid::filled(1, 3, 0.5));
        assert!(matches!(
            margin_forgetting_correlation(&hm, &mf),
            Err(Error::DegenerateGroups(_))
        ));
    }

    #[test]
    fn spearman_ties() {
        let r = spearman(&[1.0, 1.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        // ranks x: 1.5 1.5 3 4 ; y: 1 2 3 4
        assert!((r - 0.9486832980505138).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
    }
}
