//! Heat-map persistence.
//!
//! The CSV form is exact and round-trips every field:
//!
//! ```text
//! # forgetdyn heatmap v1
//! epochs_observed,60
//! counts
//! 0,2,1
//! 0,0,3
//! ever_correct
//! 1,1,1
//! 0,1,1
//! ignored            (optional block)
//! 0,0,0
//! 0,0,1
//! ```
//!
//! The PNG form is 16-bit grayscale holding the counts only.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use forgetdyn_core::tracker::HeatMap;
use forgetdyn_core::Grid;
use image::{ImageBuffer, Luma};

use crate::error::{CliError, Result};

const HEADER: &str = "# forgetdyn heatmap v1";

fn push_grid<T: Copy>(out: &mut String, grid: &Grid<T>, f: impl Fn(T) -> u64) {
    for row in grid.rows() {
        let mut first = true;
        for &v in row {
            if !first {
                out.push(',');
            }
            first = false;
            write!(out, "{}", f(v)).unwrap();
        }
        out.push('\n');
    }
}

pub fn heatmap_to_csv(hm: &HeatMap) -> String {
    let mut out = String::new();
    writeln!(out, "{HEADER}").unwrap();
    writeln!(out, "epochs_observed,{}", hm.epochs_observed()).unwrap();
    out.push_str("counts\n");
    push_grid(&mut out, hm.counts(), u64::from);
    out.push_str("ever_correct\n");
    push_grid(&mut out, hm.ever_correct(), u64::from);
    if let Some(mask) = hm.ignored() {
        out.push_str("ignored\n");
        push_grid(&mut out, mask, u64::from);
    }
    out
}

fn parse_block(lines: &[&str]) -> std::result::Result<Grid<u32>, String> {
    let rows: Vec<Vec<u32>> = lines
        .iter()
        .map(|l| {
            l.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<u32>()
                        .map_err(|e| format!("bad value {v:?}: {e}"))
                })
                .collect()
        })
        .collect::<std::result::Result<_, _>>()?;
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err("ragged rows".into());
    }
    Grid::from_vec(rows.len(), width, rows.concat()).map_err(|e| e.to_string())
}

fn to_mask(grid: Grid<u32>) -> std::result::Result<Grid<bool>, String> {
    if grid.as_slice().iter().any(|&v| v > 1) {
        return Err("mask values must be 0 or 1".into());
    }
    Ok(grid.map(|&v| v == 1))
}

pub fn heatmap_from_csv(text: &str) -> std::result::Result<HeatMap, String> {
    let lines: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let epochs = lines
        .first()
        .and_then(|l| l.strip_prefix("epochs_observed,"))
        .ok_or("missing epochs_observed line")?
        .parse::<u32>()
        .map_err(|e| format!("bad epochs_observed: {e}"))?;
    let section = |name: &str| lines.iter().position(|l| *l == name);
    let counts_at = section("counts").ok_or("missing counts block")?;
    let ever_at = section("ever_correct").ok_or("missing ever_correct block")?;
    let ignored_at = section("ignored");
    let ever_end = ignored_at.unwrap_or(lines.len());
    if !(counts_at < ever_at && ever_at < ever_end) {
        return Err("blocks out of order".into());
    }
    let counts = parse_block(&lines[counts_at + 1..ever_at])?;
    let ever = to_mask(parse_block(&lines[ever_at + 1..ever_end])?)?;
    let ignored = ignored_at
        .map(|i| parse_block(&lines[i + 1..]).and_then(to_mask))
        .transpose()?;
    HeatMap::from_parts(counts, epochs, ever, ignored).map_err(|e| e.to_string())
}

pub fn write_heatmap_csv(path: &Path, hm: &HeatMap) -> Result<()> {
    fs::write(path, heatmap_to_csv(hm)).map_err(|e| CliError::output(path, e))
}

pub fn read_heatmap_csv(path: &Path) -> Result<HeatMap> {
    let text = fs::read_to_string(path).map_err(|e| CliError::parse(path, e))?;
    heatmap_from_csv(&text).map_err(|e| CliError::parse(path, e))
}

/// 16-bit grayscale PNG of the counts; counts above 65535 are rejected.
pub fn write_heatmap_png(path: &Path, counts: &Grid<u32>) -> Result<()> {
    let data = counts
        .as_slice()
        .iter()
        .map(|&c| u16::try_from(c))
        .collect::<std::result::Result<Vec<u16>, _>>()
        .map_err(|_| CliError::Data(format!("{}: count exceeds 16-bit range", path.display())))?;
    let img: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(counts.width() as u32, counts.height() as u32, data)
            .expect("sized buffer");
    img.save(path)
        .map_err(|e| CliError::output(path, std::io::Error::other(e)))
}

/// Counts from either heat-map form, chosen by extension.
pub fn read_counts(path: &Path) -> Result<Grid<u32>> {
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if !is_png {
        return Ok(read_heatmap_csv(path)?.counts().clone());
    }
    let img = image::open(path).map_err(|e| CliError::parse(path, e))?;
    let gray = img.to_luma16();
    let (w, h) = gray.dimensions();
    if matches!(
        img,
        image::DynamicImage::ImageLuma16(_) | image::DynamicImage::ImageLuma8(_)
    ) {
        Grid::from_vec(
            h as usize,
            w as usize,
            gray.into_raw().into_iter().map(u32::from).collect(),
        )
        .map_err(|e| CliError::parse(path, e))
    } else {
        Err(CliError::parse(path, "heat-map PNG must be grayscale"))
    }
}
