//! Desk-scale stand-in for a segmentation network.
//!
//! [`synthetic`] generates layered facies slices with a controllable class
//! imbalance, [`features`] turns each pixel into a 4-vector, and [`model`]
//! fits a multinomial logistic regression over those vectors with minibatch
//! gradient descent, emitting a prediction snapshot per tracked image after
//! every epoch.

pub mod features;
pub mod model;
pub mod synthetic;

pub use features::{extract_features, image_features, FeatureVector, FEATURE_DIM};
pub use model::{mean_loss, predict, train, Snapshot, ToyModel, TrainConfig, TrainingMeta};
pub use synthetic::{generate_dataset, Band, ClassAppearance, SyntheticConfig};
