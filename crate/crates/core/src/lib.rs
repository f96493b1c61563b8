//! Forgetting-event dynamics for per-pixel classifiers.
//!
//! The crate is `no_std` (it only needs `alloc`) and holds every piece of the
//! pipeline that does not touch the filesystem:
//!
//! - [`tracker`] turns per-epoch prediction masks into forgetting-event heat maps,
//!   streaming, with memory independent of the number of epochs.
//! - [`analytics`] computes per-class forgetting density, image rankings and
//!   decision-boundary margins for the built-in linear model.
//! - [`trainer`] is a desk-scale stand-in for a segmentation network: a layered
//!   synthetic data generator and a softmax-regression pixel classifier.
//! - [`augment`] runs the closed augmentation loop: rank, select sources,
//!   transfer class statistics, retrain from scratch, compare with flip/rotate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytics;
pub mod augment;
pub mod error;
pub mod grid;
pub mod image;
pub mod rng;
pub mod tracker;
pub mod trainer;

pub use error::{Error, Result};
pub use grid::{ClassGrid, Grid};
pub use image::{validate_pair, ClassId, Dataset, LabeledImage};
pub use rng::RngStream;
