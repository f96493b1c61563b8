//! File formats, rendering and commands around `forgetdyn-core`.
//!
//! Exit codes of the `forgetdyn` binary: 0 ok, 1 output write failure,
//! 2 unreadable or malformed input, 3 dimension or class-id mismatch,
//! 4 empty result, 5 experiment failure.

pub mod commands;
pub mod config;
pub mod error;
pub mod heatmap_io;
pub mod manifest;
pub mod masks;
pub mod render;
pub mod report;

pub use error::{CliError, Result};
