//! The closed augmentation loop.
//!
//! Per seed: train a baseline while tracing validation and test heat maps,
//! rank validation slices by target-class forgetting density, take the top
//! sources, build the extended training pool for each requested condition,
//! retrain from zero, and trace again. Every condition adds the same number of
//! images.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::baselines::{baseline_flip, baseline_rotate};
use super::transfer::{feature_transfer, select_sources, TransferParams};
use crate::analytics::{class_events, rank_images, DensityRanking};
use crate::error::{Error, Result};
use crate::image::{ClassId, Dataset, LabeledImage};
use crate::rng::RngStream;
use crate::tracker::{HeatMap, Tracer};
use crate::trainer::{predict, train, ToyModel, TrainConfig};

/// Largest accepted drift of a non-target class's mean test accuracy.
pub const NON_TARGET_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Selector {
    None,
    Flip,
    Rotate,
    SupportVector,
}

impl Selector {
    pub const ALL: [Selector; 4] = [
        Selector::None,
        Selector::Flip,
        Selector::Rotate,
        Selector::SupportVector,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Selector::None => "none",
            Selector::Flip => "flip",
            Selector::Rotate => "rotate",
            Selector::SupportVector => "support_vector",
        }
    }

    pub fn from_name(name: &str) -> Option<Selector> {
        Selector::ALL.into_iter().find(|s| s.name() == name)
    }

    fn stream(self) -> u64 {
        0xA0 + self as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub target_class: ClassId,
    pub num_sources: usize,
    pub transfers_per_source: usize,
    pub transfer: TransferParams,
    pub selector: Selector,
    pub seeds: Vec<u64>,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            target_class: 4,
            num_sources: 6,
            transfers_per_source: 64,
            transfer: TransferParams::default(),
            selector: Selector::SupportVector,
            seeds: alloc::vec![1, 2, 3, 4, 5],
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_sources == 0 || self.transfers_per_source == 0 {
            return Err(Error::InvalidConfig(
                "num_sources and transfers_per_source must be >= 1".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("no seeds".into()));
        }
        self.transfer.validate()
    }
}

/// Metrics of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedMetrics {
    pub seed: u64,
    /// Test-split pixel accuracy per class; `None` when the class has no test pixels.
    pub class_accuracy: Vec<Option<f64>>,
    /// Target-class events per target-class pixel, pooled over validation slices.
    pub target_density: f64,
    /// Forgetting events summed over validation slices.
    pub total_events: u64,
    /// Validation pixels forgotten at least once.
    pub forgettable_pixels: usize,
    pub added_images: usize,
}

/// Everything produced by one training run, kept for rendering and margin analysis.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub metrics: SeedMetrics,
    pub model: ToyModel,
    /// Validation heat maps in dataset order.
    pub validation_heatmaps: Vec<(String, HeatMap)>,
    pub test_heatmaps: Vec<(String, HeatMap)>,
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub baseline: RunArtifacts,
    pub ranking: DensityRanking,
    pub sources: Vec<String>,
    pub conditions: Vec<(Selector, RunArtifacts)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    /// `None` for the unaugmented baseline.
    pub selector: Option<Selector>,
    pub per_seed: Vec<SeedMetrics>,
    pub mean_class_accuracy: Vec<Option<f64>>,
    pub mean_target_density: f64,
    pub mean_total_events: f64,
    pub mean_forgettable_pixels: f64,
}

impl ConditionReport {
    pub fn label(&self) -> &'static str {
        match self.selector {
            None => "baseline",
            Some(Selector::SupportVector) => "ours",
            Some(s) => s.name(),
        }
    }

    fn from_runs(selector: Option<Selector>, per_seed: Vec<SeedMetrics>) -> Self {
        let n = per_seed.len() as f64;
        let k = per_seed.first().map_or(0, |m| m.class_accuracy.len());
        let mean_class_accuracy = (0..k)
            .map(|c| {
                let vals: Option<Vec<f64>> = per_seed.iter().map(|m| m.class_accuracy[c]).collect();
                vals.map(|v| v.iter().sum::<f64>() / n)
            })
            .collect();
        let mean = |f: &dyn Fn(&SeedMetrics) -> f64| per_seed.iter().map(f).sum::<f64>() / n;
        ConditionReport {
            selector,
            mean_target_density: mean(&|m| m.target_density),
            mean_total_events: mean(&|m| m.total_events as f64),
            mean_forgettable_pixels: mean(&|m| m.forgettable_pixels as f64),
            mean_class_accuracy,
            per_seed,
        }
    }

    /// Largest absolute drift of mean accuracy from `baseline` over classes other than `target`.
    pub fn max_non_target_drift(&self, baseline: &ConditionReport, target: ClassId) -> f64 {
        self.mean_class_accuracy
            .iter()
            .zip(&baseline.mean_class_accuracy)
            .enumerate()
            .filter(|(c, _)| *c != target as usize)
            .filter_map(|(_, (a, b))| Some((a.as_ref()? - b.as_ref()?).abs()))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub class_names: Vec<String>,
    pub train: TrainConfig,
    pub augment: AugmentConfig,
    pub baseline: ConditionReport,
    pub conditions: Vec<ConditionReport>,
    pub non_target_tolerance: f64,
    /// Source image ids chosen per seed.
    pub sources: Vec<(u64, Vec<String>)>,
}

impl ExperimentReport {
    pub fn condition(&self, selector: Selector) -> Option<&ConditionReport> {
        self.conditions
            .iter()
            .find(|c| c.selector == Some(selector))
    }
}

fn per_class_accuracy(
    model: &ToyModel,
    images: &[LabeledImage],
    num_classes: usize,
) -> Result<Vec<Option<f64>>> {
    let mut hits = alloc::vec![0u64; num_classes];
    let mut totals = alloc::vec![0u64; num_classes];
    for img in images {
        let pred = predict(model, img)?;
        for (&p, &t) in pred.as_slice().iter().zip(img.labels.as_slice()) {
            totals[t as usize] += 1;
            hits[t as usize] += (p == t) as u64;
        }
    }
    Ok(hits
        .iter()
        .zip(&totals)
        .map(|(&h, &n)| (n > 0).then(|| h as f64 / n as f64))
        .collect())
}

/// Trains on `dataset`, tracing every validation and test image.
fn traced_run(
    dataset: &Dataset,
    cfg: &TrainConfig,
    target: ClassId,
    added_images: usize,
) -> Result<RunArtifacts> {
    let space = dataset.label_space();
    let mut tracers: BTreeMap<&str, Tracer<'_>> = dataset
        .validation
        .iter()
        .chain(&dataset.test)
        .map(|img| (img.image_id.as_str(), Tracer::new(img, space)))
        .collect();
    let mut failure = None;
    let cfg = TrainConfig {
        track_train: false,
        ..cfg.clone()
    };
    let model = train(dataset, &cfg, |snap| {
        if failure.is_some() {
            return;
        }
        if let Some(tracer) = tracers.get_mut(snap.image_id) {
            if let Err(e) = tracer.push(snap.prediction) {
                failure = Some(e);
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let mut finish = |imgs: &[LabeledImage]| -> Result<Vec<(String, HeatMap)>> {
        imgs.iter()
            .map(|img| {
                let tracer = tracers
                    .remove(img.image_id.as_str())
                    .ok_or(Error::EmptyTrace)?;
                Ok((img.image_id.clone(), tracer.finish()?))
            })
            .collect()
    };
    let validation_heatmaps = finish(&dataset.validation)?;
    let test_heatmaps = finish(&dataset.test)?;

    let mut events = 0u64;
    let mut pixels = 0usize;
    for ((_, hm), img) in validation_heatmaps.iter().zip(&dataset.validation) {
        let (e, n) = class_events(hm, img, target)?;
        events += e;
        pixels += n;
    }
    let metrics = SeedMetrics {
        seed: cfg.seed,
        class_accuracy: per_class_accuracy(&model, &dataset.test, dataset.num_classes)?,
        target_density: if pixels == 0 {
            0.0
        } else {
            events as f64 / pixels as f64
        },
        total_events: validation_heatmaps
            .iter()
            .map(|(_, h)| h.total_events())
            .sum(),
        forgettable_pixels: validation_heatmaps
            .iter()
            .map(|(_, h)| h.forgettable_count(1))
            .sum(),
        added_images,
    };
    Ok(RunArtifacts {
        metrics,
        model,
        validation_heatmaps,
        test_heatmaps,
    })
}

/// Training pool for one condition, with exactly `added` extra images unless the selector is `None`.
fn extended_pool(
    dataset: &Dataset,
    sources: &[&LabeledImage],
    aug: &AugmentConfig,
    selector: Selector,
    added: usize,
    rng: &mut RngStream,
) -> Result<Dataset> {
    match selector {
        Selector::None => Ok(dataset.clone()),
        Selector::Flip => Ok(baseline_flip(dataset, rng, added)),
        Selector::Rotate => baseline_rotate(dataset, rng, added),
        Selector::SupportVector => {
            let targets: Vec<&LabeledImage> = dataset
                .train
                .iter()
                .filter(|img| img.class_pixel_count(aug.target_class) > 0)
                .collect();
            if targets.is_empty() {
                return Err(Error::ClassAbsent {
                    class_id: aug.target_class,
                    image_id: "training split".into(),
                });
            }
            let mut out = dataset.clone();
            out.train.reserve(added);
            let mut n = 0usize;
            for source in sources {
                for _ in 0..aug.transfers_per_source {
                    let target = targets[rng.index(targets.len())];
                    let mut img =
                        feature_transfer(source, target, aug.target_class, rng, &aug.transfer)?;
                    img.image_id = alloc::format!("{}#{n}", img.image_id);
                    out.train.push(img);
                    n += 1;
                }
            }
            Ok(out)
        }
    }
}

/// Runs the baseline and every selector in `selectors` for one seed.
pub fn run_seed(
    dataset: &Dataset,
    train_cfg: &TrainConfig,
    aug: &AugmentConfig,
    seed: u64,
    selectors: &[Selector],
) -> Result<SeedRun> {
    aug.validate()?;
    train_cfg.validate()?;
    dataset.validate()?;
    if aug.target_class as usize >= dataset.num_classes {
        return Err(Error::InvalidClassId {
            class_id: aug.target_class,
            num_classes: dataset.num_classes,
        });
    }
    let cfg = TrainConfig {
        seed,
        ..train_cfg.clone()
    };
    let target = aug.target_class;
    let baseline = traced_run(dataset, &cfg, target, 0)?;

    let ranking = rank_images(
        baseline
            .validation_heatmaps
            .iter()
            .zip(&dataset.validation)
            .map(|((id, hm), img)| (id.as_str(), hm, img)),
        target,
    )?;
    let sources = select_sources(&ranking, aug.num_sources).map_err(|_| Error::ClassAbsent {
        class_id: target,
        image_id: "every validation slice".into(),
    })?;
    let source_images: Vec<&LabeledImage> = sources
        .iter()
        .filter_map(|id| dataset.validation.iter().find(|img| &img.image_id == id))
        .collect();
    let added = source_images.len() * aug.transfers_per_source;

    let base_rng = RngStream::new(seed);
    let mut conditions = Vec::with_capacity(selectors.len());
    for &selector in selectors {
        let mut rng = base_rng.fork(selector.stream());
        let pool = extended_pool(dataset, &source_images, aug, selector, added, &mut rng)?;
        let added_here = pool.train.len() - dataset.train.len();
        conditions.push((selector, traced_run(&pool, &cfg, target, added_here)?));
    }
    Ok(SeedRun {
        seed,
        baseline,
        ranking,
        sources,
        conditions,
    })
}

/// Aggregates per-seed runs (in the order given) into a report.
pub fn summarize(
    dataset: &Dataset,
    train_cfg: &TrainConfig,
    aug: &AugmentConfig,
    selectors: &[Selector],
    runs: &[SeedRun],
) -> ExperimentReport {
    let baseline = ConditionReport::from_runs(
        None,
        runs.iter().map(|r| r.baseline.metrics.clone()).collect(),
    );
    let conditions = selectors
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            ConditionReport::from_runs(
                Some(s),
                runs.iter()
                    .map(|r| r.conditions[i].1.metrics.clone())
                    .collect(),
            )
        })
        .collect();
    ExperimentReport {
        class_names: dataset.class_names.clone(),
        train: train_cfg.clone(),
        augment: aug.clone(),
        baseline,
        conditions,
        non_target_tolerance: NON_TARGET_TOLERANCE,
        sources: runs.iter().map(|r| (r.seed, r.sources.clone())).collect(),
    }
}

/// Baseline plus every selector in `selectors`, over all configured seeds.
pub fn run_comparison(
    dataset: &Dataset,
    train_cfg: &TrainConfig,
    aug: &AugmentConfig,
    selectors: &[Selector],
) -> Result<ExperimentReport> {
    aug.validate()?;
    let runs = aug
        .seeds
        .iter()
        .map(|&seed| run_seed(dataset, train_cfg, aug, seed, selectors))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(dataset, train_cfg, aug, selectors, &runs))
}

/// Baseline versus the configured selector.
pub fn run_experiment(
    dataset: &Dataset,
    train_cfg: &TrainConfig,
    aug: &AugmentConfig,
) -> Result<ExperimentReport> {
    run_comparison(dataset, train_cfg, aug, &[aug.selector])
}
