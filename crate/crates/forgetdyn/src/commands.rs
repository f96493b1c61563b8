//! The four subcommands, callable without going through the binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use forgetdyn_core::analytics::rank_images;
use forgetdyn_core::augment::{run_seed, summarize, ExperimentReport, SeedRun};
use forgetdyn_core::image::LabeledImage;
use forgetdyn_core::tracker::{HeatMap, Tracer};
use forgetdyn_core::trainer::generate_dataset;
use forgetdyn_core::{Grid, RngStream};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::heatmap_io::{read_heatmap_csv, write_heatmap_csv, write_heatmap_png};
use crate::manifest::TraceManifest;
use crate::masks::read_class_grid;
use crate::render::{write_rendered, Palette};
use crate::report::{write_per_seed, write_summary, write_table};

pub const HEATMAP_CSV_SUFFIX: &str = ".heatmap.csv";
pub const HEATMAP_PNG_SUFFIX: &str = ".heatmap.png";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))
}

/// Labels wrapped as an image; the tracker never looks at intensities.
fn label_image(image_id: &str, path: &Path) -> Result<LabeledImage> {
    let labels = read_class_grid(path)?;
    let (h, w) = labels.dims();
    LabeledImage::new(image_id, Grid::filled(h, w, 0.0), labels)
        .map_err(|e| CliError::from_core(path, e))
}

/// Per-image summary row of `track`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackSummary {
    pub image_id: String,
    pub total_events: u64,
    pub epochs_observed: u32,
}

pub fn trace_entry(manifest: &TraceManifest, index: usize) -> Result<HeatMap> {
    let entry = &manifest.images[index];
    let image = label_image(&entry.image_id, &entry.labels)?;
    let mut tracer = Tracer::new(&image, manifest.label_space());
    for path in &entry.predictions {
        let pred = read_class_grid(path)?;
        tracer
            .push(&pred)
            .map_err(|e| CliError::from_core(path, e))?;
    }
    tracer
        .finish()
        .map_err(|e| CliError::from_core(&entry.labels, e))
}

/// `forgetdyn track`: one heat map (CSV + 16-bit PNG) per manifest image and `summary.csv`.
pub fn track(
    manifest_path: &Path,
    out: &Path,
    ignore_label: Option<u8>,
) -> Result<Vec<TrackSummary>> {
    let mut manifest = TraceManifest::load(manifest_path)?;
    if ignore_label.is_some() {
        manifest.ignore_label = ignore_label;
    }
    let heatmaps = (0..manifest.images.len())
        .into_par_iter()
        .map(|i| trace_entry(&manifest, i))
        .collect::<Result<Vec<_>>>()?;

    create_dir(out)?;
    let mut rows = Vec::with_capacity(heatmaps.len());
    for (entry, hm) in manifest.images.iter().zip(&heatmaps) {
        write_heatmap_csv(
            &out.join(format!("{}{HEATMAP_CSV_SUFFIX}", entry.image_id)),
            hm,
        )?;
        write_heatmap_png(
            &out.join(format!("{}{HEATMAP_PNG_SUFFIX}", entry.image_id)),
            hm.counts(),
        )?;
        rows.push(TrackSummary {
            image_id: entry.image_id.clone(),
            total_events: hm.total_events(),
            epochs_observed: hm.epochs_observed(),
        });
    }
    let path = out.join("summary.csv");
    let err = |e: csv::Error| CliError::output(&path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(&path).map_err(err)?;
    w.write_record(["image_id", "total_events", "epochs_observed"])
        .map_err(err)?;
    for r in &rows {
        w.write_record([
            r.image_id.clone(),
            r.total_events.to_string(),
            r.epochs_observed.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::output(&path, e))?;
    Ok(rows)
}

fn find_labels(dir: &Path, id: &str) -> Result<PathBuf> {
    ["png", "raw"]
        .iter()
        .map(|ext| dir.join(format!("{id}.{ext}")))
        .find(|p| p.is_file())
        .ok_or_else(|| {
            CliError::parse(
                &dir.join(id),
                "no label mask (.png or .raw) for this heat map",
            )
        })
}

/// A ranked row of `rank`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankRow {
    pub rank: usize,
    pub image_id: String,
    pub density: f64,
    pub class_pixel_count: usize,
}

/// `forgetdyn rank`: top-`k` images by forgetting density of `class_id`.
///
/// Writes CSV to `out`, or to stdout when `out` is `-`.
pub fn rank(
    heatmap_dir: &Path,
    labels_dir: &Path,
    class_id: u8,
    k: usize,
    out: &Path,
) -> Result<Vec<RankRow>> {
    let listing = fs::read_dir(heatmap_dir).map_err(|e| CliError::parse(heatmap_dir, e))?;
    let mut files: Vec<(String, PathBuf)> = listing
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            let id = name.strip_suffix(HEATMAP_CSV_SUFFIX)?.to_string();
            Some((id, e.path()))
        })
        .collect();
    files.sort();

    let mut loaded = Vec::with_capacity(files.len());
    for (id, path) in &files {
        let hm = read_heatmap_csv(path)?;
        let label_path = find_labels(labels_dir, id)?;
        let image = label_image(id, &label_path)?;
        image
            .labels
            .check_same_dims(hm.counts())
            .map_err(|e| CliError::from_core(&label_path, e))?;
        loaded.push((id.clone(), hm, image));
    }
    let ranking = rank_images(
        loaded.iter().map(|(id, hm, img)| (id.as_str(), hm, img)),
        class_id,
    )
    .map_err(|e| CliError::from_core(heatmap_dir, e))?;
    if ranking.is_empty() {
        return Err(CliError::Empty(format!(
            "class {class_id} is absent from every image in {}",
            labels_dir.display()
        )));
    }
    let rows: Vec<RankRow> = ranking
        .entries
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, e)| RankRow {
            rank: i + 1,
            image_id: e.image_id.clone(),
            density: e.density,
            class_pixel_count: e.pixel_count,
        })
        .collect();

    let sink: Box<dyn std::io::Write> = if out == Path::new("-") {
        Box::new(std::io::stdout().lock())
    } else {
        Box::new(fs::File::create(out).map_err(|e| CliError::output(out, e))?)
    };
    let err = |e: csv::Error| CliError::output(out, std::io::Error::other(e));
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["rank", "image_id", "density", "class_pixel_count"])
        .map_err(err)?;
    for r in &rows {
        w.write_record([
            r.rank.to_string(),
            r.image_id.clone(),
            r.density.to_string(),
            r.class_pixel_count.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::output(out, e))?;
    Ok(rows)
}

/// `forgetdyn render`: colour PNG plus `<out>.scale.txt`.
pub fn render(heatmap: &Path, out: &Path, palette: &str) -> Result<()> {
    let palette = Palette::from_name(palette).ok_or_else(|| {
        CliError::Parse(format!(
            "unknown palette {palette:?} (expected \"diverging\")"
        ))
    })?;
    let counts = crate::heatmap_io::read_counts(heatmap)?;
    write_rendered(out, &counts, palette)
}

fn render_runs(dir: &Path, report: &ExperimentReport, run: &SeedRun, top: usize) -> Result<()> {
    create_dir(dir)?;
    let lookup = |maps: &[(String, HeatMap)], id: &str| {
        maps.iter().find(|(i, _)| i == id).map(|(_, h)| h.clone())
    };
    for entry in run.ranking.entries.iter().take(top) {
        let id = &entry.image_id;
        if let Some(hm) = lookup(&run.baseline.validation_heatmaps, id) {
            write_rendered(
                &dir.join(format!("{id}.baseline.png")),
                hm.counts(),
                Palette::Diverging,
            )?;
        }
        for (cond, (_, art)) in report.conditions.iter().zip(&run.conditions) {
            if let Some(hm) = lookup(&art.validation_heatmaps, id) {
                let name = format!("{id}.{}.png", cond.label());
                write_rendered(&dir.join(name), hm.counts(), Palette::Diverging)?;
            }
        }
    }
    Ok(())
}

/// `forgetdyn experiment`: the full augmentation comparison on the synthetic volume.
pub fn experiment(config_path: &Path, out: &Path) -> Result<ExperimentReport> {
    let cfg = ExperimentConfig::load(config_path)?;
    let selectors = cfg
        .selectors()
        .map_err(|m| CliError::parse(config_path, m))?;
    let train_cfg = cfg.train_config();
    let aug = cfg.augment_config();
    let started = Instant::now();

    let invalid = |e: forgetdyn_core::Error| CliError::parse(config_path, e);
    aug.validate().map_err(invalid)?;
    train_cfg.validate().map_err(invalid)?;
    let dataset =
        generate_dataset(&cfg.synthetic(), &RngStream::new(cfg.data.seed)).map_err(invalid)?;
    if aug.target_class as usize >= dataset.num_classes {
        return Err(CliError::Data(format!(
            "target class {} does not exist ({} classes)",
            aug.target_class, dataset.num_classes
        )));
    }
    let fail = |e: forgetdyn_core::Error| CliError::Experiment(e.to_string());
    eprintln!(
        "dataset: {} train / {} validation / {} test slices; {} seeds x {} conditions",
        dataset.train.len(),
        dataset.validation.len(),
        dataset.test.len(),
        aug.seeds.len(),
        selectors.len()
    );
    let runs = aug
        .seeds
        .par_iter()
        .map(|&seed| run_seed(&dataset, &train_cfg, &aug, seed, &selectors))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(fail)?;
    let report = summarize(&dataset, &train_cfg, &aug, &selectors, &runs);

    create_dir(out)?;
    write_table(&out.join("report.csv"), &report)?;
    write_per_seed(&out.join("per_seed.csv"), &report)?;
    write_summary(&out.join("summary.json"), &report)?;
    if let Some(first) = runs.first() {
        render_runs(
            &out.join("heatmaps"),
            &report,
            first,
            cfg.augment.render_top,
        )?;
    }
    eprintln!("finished in {:.1}s", started.elapsed().as_secs_f64());
    Ok(report)
}
