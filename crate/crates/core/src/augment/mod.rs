//! Forgetting-driven augmentation and the flip/rotate baselines.

pub mod baselines;
pub mod experiment;
pub mod transfer;

pub use baselines::{baseline_flip, baseline_rotate};
pub use experiment::{
    run_comparison, run_experiment, run_seed, summarize, AugmentConfig, ConditionReport,
    ExperimentReport, RunArtifacts, SeedMetrics, SeedRun, Selector, NON_TARGET_TOLERANCE,
};
pub use transfer::{feature_transfer, select_sources, TransferParams};
