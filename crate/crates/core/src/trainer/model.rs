use alloc::vec;
use alloc::vec::Vec;

use super::features::{image_features, FeatureVector, FEATURE_DIM};
use crate::error::{Error, Result};
use crate::grid::{ClassGrid, Grid};
use crate::image::{ClassId, Dataset, LabeledImage};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: u32,
    pub learning_rate: f64,
    /// Pixels per minibatch.
    pub batch_size: usize,
    /// Drives the per-epoch shuffle of training pixels.
    pub seed: u64,
    /// Emit snapshots after every `snapshot_every`-th epoch.
    pub snapshot_every: u32,
    /// Also emit snapshots for training images.
    pub track_train: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 60,
            learning_rate: 0.1,
            batch_size: 256,
            seed: 0,
            snapshot_every: 1,
            track_train: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        // Zero is accepted: it freezes the model, which is the null-dynamics check.
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be finite and non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch size must be >= 1");
        }
        if self.snapshot_every == 0 {
            return bad("snapshot cadence must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingMeta {
    pub epochs_run: u32,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Mean cross-entropy over the full training pool before any update.
    pub initial_loss: f64,
    /// Mean minibatch loss seen during each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Multinomial logistic regression over [`FeatureVector`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    pub weights: Vec<FeatureVector>,
    pub biases: Vec<f64>,
    pub meta: TrainingMeta,
}

impl ToyModel {
    /// All-zero parameters.
    pub fn zeros(num_classes: usize) -> Self {
        ToyModel {
            weights: vec![[0.0; FEATURE_DIM]; num_classes],
            biases: vec![0.0; num_classes],
            meta: TrainingMeta::default(),
        }
    }

    pub fn from_parameters(weights: Vec<FeatureVector>, biases: Vec<f64>) -> Result<Self> {
        if weights.len() != biases.len() {
            return Err(Error::InvalidConfig(alloc::format!(
                "{} weight rows but {} biases",
                weights.len(),
                biases.len()
            )));
        }
        Ok(ToyModel {
            weights,
            biases,
            meta: TrainingMeta::default(),
        })
    }

    pub fn num_classes(&self) -> usize {
        self.biases.len()
    }

    pub fn feature_dim(&self) -> usize {
        FEATURE_DIM
    }

    pub fn is_finite(&self) -> bool {
        self.biases.iter().all(|b| b.is_finite())
            && self.weights.iter().flatten().all(|w| w.is_finite())
    }

    /// `Err(UntrainedModel)` when there are no classes or a parameter is not finite.
    pub fn check_usable(&self) -> Result<()> {
        if self.num_classes() == 0 || self.weights.len() != self.num_classes() || !self.is_finite()
        {
            Err(Error::UntrainedModel)
        } else {
            Ok(())
        }
    }

    #[inline]
    pub fn score(&self, class: usize, x: &FeatureVector) -> f64 {
        let w = &self.weights[class];
        let mut s = self.biases[class];
        for d in 0..FEATURE_DIM {
            s += w[d] * x[d];
        }
        s
    }

    pub fn scores_into(&self, x: &FeatureVector, out: &mut [f64]) {
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = self.score(k, x);
        }
    }

    /// Argmax of the linear scores; ties go to the lowest class id.
    pub fn classify(&self, x: &FeatureVector) -> ClassId {
        let mut best = 0usize;
        let mut best_score = self.score(0, x);
        for k in 1..self.num_classes() {
            let s = self.score(k, x);
            if s > best_score {
                best = k;
                best_score = s;
            }
        }
        best as ClassId
    }
}

/// Per-pixel argmax prediction.
pub fn predict(model: &ToyModel, image: &LabeledImage) -> Result<ClassGrid> {
    model.check_usable()?;
    Ok(predict_from_features(model, image, &image_features(image)))
}

fn predict_from_features(
    model: &ToyModel,
    image: &LabeledImage,
    feats: &[FeatureVector],
) -> ClassGrid {
    let (h, w) = image.labels.dims();
    Grid::from_vec(h, w, feats.iter().map(|x| model.classify(x)).collect())
        .expect("feature count matches image size")
}

/// Softmax of `scores` in place; returns nothing, `scores` become probabilities.
fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = libm::exp(*s - max);
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

/// Mean cross-entropy of `model` over every pixel of `images`.
pub fn mean_loss(model: &ToyModel, images: &[LabeledImage]) -> f64 {
    let mut probs = vec![0.0; model.num_classes()];
    let mut total = 0.0;
    let mut n = 0usize;
    for img in images {
        for (x, &y) in image_features(img).iter().zip(img.labels.as_slice()) {
            model.scores_into(x, &mut probs);
            softmax_in_place(&mut probs);
            total -= libm::log(probs[y as usize].max(f64::MIN_POSITIVE));
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        total / n as f64
    }
}

/// One prediction emitted by [`train`].
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    /// Ordinal of the snapshot (consecutive from 0); feed this to the tracker.
    pub index: u32,
    /// Zero-based training epoch after which the prediction was taken.
    pub epoch: u32,
    pub image_id: &'a str,
    pub prediction: &'a ClassGrid,
}

struct Tracked<'a> {
    image: &'a LabeledImage,
    feats: Vec<FeatureVector>,
}

/// Trains from zero initialization with minibatch gradient descent on the mean
/// cross-entropy of every training pixel.
///
/// After each snapshot epoch the current predictions for every validation and
/// test image (and training image when `track_train` is set) are passed to
/// `sink`, validation first, in dataset order.
pub fn train(
    dataset: &Dataset,
    cfg: &TrainConfig,
    mut sink: impl FnMut(Snapshot<'_>),
) -> Result<ToyModel> {
    cfg.validate()?;
    dataset.validate()?;
    if dataset.train.is_empty() {
        return Err(Error::InvalidConfig("training split is empty".into()));
    }
    let k = dataset.num_classes;

    let mut samples: Vec<(FeatureVector, ClassId)> = Vec::new();
    for img in &dataset.train {
        samples.extend(
            image_features(img)
                .into_iter()
                .zip(img.labels.as_slice().iter().copied()),
        );
    }

    let tracked: Vec<Tracked<'_>> = cfg
        .track_train
        .then_some(dataset.train.iter())
        .into_iter()
        .flatten()
        .chain(dataset.validation.iter().chain(&dataset.test))
        .map(|image| Tracked {
            image,
            feats: image_features(image),
        })
        .collect();

    let mut model = ToyModel::zeros(k);
    model.meta = TrainingMeta {
        epochs_run: 0,
        learning_rate: cfg.learning_rate,
        batch_size: cfg.batch_size,
        seed: cfg.seed,
        initial_loss: mean_loss(&model, &dataset.train),
        epoch_losses: Vec::with_capacity(cfg.epochs as usize),
    };

    let mut rng = RngStream::new(cfg.seed);
    let mut order: Vec<u32> = (0..samples.len() as u32).collect();
    let mut probs = vec![0.0; k];
    let mut grad_w = vec![[0.0; FEATURE_DIM]; k];
    let mut grad_b = vec![0.0; k];
    let mut batch_xs: Vec<(FeatureVector, ClassId)> = Vec::with_capacity(cfg.batch_size);
    let mut snapshot_index = 0u32;

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad_w.iter_mut().for_each(|g| *g = [0.0; FEATURE_DIM]);
            grad_b.iter_mut().for_each(|g| *g = 0.0);
            // Gathering first lets the random loads overlap instead of stalling the update.
            batch_xs.clear();
            batch_xs.extend(batch.iter().map(|&i| samples[i as usize]));
            for (x, y) in &batch_xs {
                let y = *y as usize;
                model.scores_into(x, &mut probs);
                softmax_in_place(&mut probs);
                epoch_loss -= libm::log(probs[y].max(f64::MIN_POSITIVE));
                for c in 0..k {
                    let delta = probs[c] - if c == y { 1.0 } else { 0.0 };
                    grad_b[c] += delta;
                    for d in 0..FEATURE_DIM {
                        grad_w[c][d] += delta * x[d];
                    }
                }
            }
            let step = cfg.learning_rate / batch.len() as f64;
            for c in 0..k {
                model.biases[c] -= step * grad_b[c];
                for (wd, gd) in model.weights[c].iter_mut().zip(&grad_w[c]) {
                    *wd -= step * gd;
                }
            }
        }
        let epoch_loss = epoch_loss / samples.len() as f64;
        if !epoch_loss.is_finite() || !model.is_finite() {
            return Err(Error::NumericalDivergence { epoch });
        }
        model.meta.epoch_losses.push(epoch_loss);
        model.meta.epochs_run = epoch + 1;

        if (epoch + 1) % cfg.snapshot_every == 0 {
            for t in &tracked {
                let prediction = predict_from_features(&model, t.image, &t.feats);
                sink(Snapshot {
                    index: snapshot_index,
                    epoch,
                    image_id: &t.image.image_id,
                    prediction: &prediction,
                });
            }
            snapshot_index += 1;
        }
    }
    Ok(model)
}
