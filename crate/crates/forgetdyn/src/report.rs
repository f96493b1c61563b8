//! Serialized experiment reports.
//!
//! `report.csv` has one row per condition (baseline first) and the mean test
//! accuracy of every class; `per_seed.csv` has one row per condition and seed;
//! `summary.json` holds everything, including the configuration echo.

use std::path::Path;

use forgetdyn_core::augment::{ConditionReport, ExperimentReport, SeedMetrics};
use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Serialize)]
pub struct SeedJson {
    pub seed: u64,
    pub class_accuracy: Vec<Option<f64>>,
    pub target_density: f64,
    pub total_events: u64,
    pub forgettable_pixels: usize,
    pub added_images: usize,
}

impl From<&SeedMetrics> for SeedJson {
    fn from(m: &SeedMetrics) -> Self {
        SeedJson {
            seed: m.seed,
            class_accuracy: m.class_accuracy.clone(),
            target_density: m.target_density,
            total_events: m.total_events,
            forgettable_pixels: m.forgettable_pixels,
            added_images: m.added_images,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ConditionJson {
    pub condition: String,
    pub mean_class_accuracy: Vec<Option<f64>>,
    pub mean_target_density: f64,
    pub mean_total_events: f64,
    pub mean_forgettable_pixels: f64,
    /// Largest non-target accuracy drift from the baseline; `None` for the baseline row.
    pub max_non_target_drift: Option<f64>,
    pub within_tolerance: Option<bool>,
    pub per_seed: Vec<SeedJson>,
}

#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub epochs: u32,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub target_class: u8,
    pub num_sources: usize,
    pub transfers_per_source: usize,
    pub patch_size: Option<usize>,
    pub moment_matching: bool,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Serialize)]
pub struct SummaryJson {
    pub class_names: Vec<String>,
    pub target_class: String,
    pub config: ConfigEcho,
    pub non_target_tolerance: f64,
    pub sources: Vec<(u64, Vec<String>)>,
    pub conditions: Vec<ConditionJson>,
}

fn condition_json(c: &ConditionReport, report: &ExperimentReport) -> ConditionJson {
    let drift = c
        .selector
        .map(|_| c.max_non_target_drift(&report.baseline, report.augment.target_class));
    ConditionJson {
        condition: c.label().to_string(),
        mean_class_accuracy: c.mean_class_accuracy.clone(),
        mean_target_density: c.mean_target_density,
        mean_total_events: c.mean_total_events,
        mean_forgettable_pixels: c.mean_forgettable_pixels,
        max_non_target_drift: drift,
        within_tolerance: drift.map(|d| d <= report.non_target_tolerance),
        per_seed: c.per_seed.iter().map(SeedJson::from).collect(),
    }
}

pub fn summary(report: &ExperimentReport) -> SummaryJson {
    let a = &report.augment;
    SummaryJson {
        class_names: report.class_names.clone(),
        target_class: report
            .class_names
            .get(a.target_class as usize)
            .cloned()
            .unwrap_or_else(|| a.target_class.to_string()),
        config: ConfigEcho {
            epochs: report.train.epochs,
            learning_rate: report.train.learning_rate,
            batch_size: report.train.batch_size,
            target_class: a.target_class,
            num_sources: a.num_sources,
            transfers_per_source: a.transfers_per_source,
            patch_size: a.transfer.patch_size,
            moment_matching: a.transfer.moment_matching,
            seeds: a.seeds.clone(),
        },
        non_target_tolerance: report.non_target_tolerance,
        sources: report.sources.clone(),
        conditions: std::iter::once(&report.baseline)
            .chain(&report.conditions)
            .map(|c| condition_json(c, report))
            .collect(),
    }
}

fn acc_cell(a: Option<f64>, precision: usize) -> String {
    a.map_or_else(|| "NA".to_string(), |v| format!("{v:.precision$}"))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::output(path, std::io::Error::other(e))
}

/// Mean per-class accuracy table, one row per condition.
pub fn write_table(path: &Path, report: &ExperimentReport) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    let mut header = vec!["condition".to_string()];
    header.extend(report.class_names.iter().cloned());
    header.extend(["target_density", "total_events", "forgettable_pixels"].map(String::from));
    w.write_record(&header).map_err(&err)?;
    for c in std::iter::once(&report.baseline).chain(&report.conditions) {
        let mut row = vec![c.label().to_string()];
        row.extend(c.mean_class_accuracy.iter().map(|&a| acc_cell(a, 3)));
        row.push(format!("{:.4}", c.mean_target_density));
        row.push(format!("{:.1}", c.mean_total_events));
        row.push(format!("{:.1}", c.mean_forgettable_pixels));
        w.write_record(&row).map_err(&err)?;
    }
    w.flush().map_err(|e| CliError::output(path, e))
}

pub fn write_per_seed(path: &Path, report: &ExperimentReport) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    let mut header = vec!["condition".to_string(), "seed".to_string()];
    header.extend(report.class_names.iter().cloned());
    header.extend(
        [
            "target_density",
            "total_events",
            "forgettable_pixels",
            "added_images",
        ]
        .map(String::from),
    );
    w.write_record(&header).map_err(&err)?;
    for c in std::iter::once(&report.baseline).chain(&report.conditions) {
        for m in &c.per_seed {
            let mut row = vec![c.label().to_string(), m.seed.to_string()];
            row.extend(m.class_accuracy.iter().map(|&a| acc_cell(a, 6)));
            row.push(m.target_density.to_string());
            row.push(m.total_events.to_string());
            row.push(m.forgettable_pixels.to_string());
            row.push(m.added_images.to_string());
            w.write_record(&row).map_err(&err)?;
        }
    }
    w.flush().map_err(|e| CliError::output(path, e))
}

pub fn write_summary(path: &Path, report: &ExperimentReport) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&summary(report))
        .map_err(|e| CliError::output(path, std::io::Error::other(e)))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::output(path, e))
}
