//! Blue-to-red rendering of heat maps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use forgetdyn_core::Grid;
use image::RgbImage;

use crate::error::{CliError, Result};

pub type Rgb = [u8; 3];

/// Anchors of the diverging palette, coldest first.
const DIVERGING_ANCHORS: [Rgb; 5] = [
    [5, 48, 97],
    [67, 147, 195],
    [247, 247, 247],
    [214, 96, 77],
    [103, 0, 31],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Palette {
    Diverging,
}

impl Palette {
    pub fn from_name(name: &str) -> Option<Palette> {
        match name {
            "diverging" => Some(Palette::Diverging),
            _ => None,
        }
    }

    /// 256-entry lookup table interpolated linearly between the anchors.
    pub fn table(self) -> [Rgb; 256] {
        let anchors = match self {
            Palette::Diverging => &DIVERGING_ANCHORS,
        };
        let segments = (anchors.len() - 1) as f64;
        let mut lut = [[0u8; 3]; 256];
        for (i, slot) in lut.iter_mut().enumerate() {
            let t = i as f64 / 255.0 * segments;
            let seg = (t.floor() as usize).min(anchors.len() - 2);
            let frac = t - seg as f64;
            for ch in 0..3 {
                let a = anchors[seg][ch] as f64;
                let b = anchors[seg + 1][ch] as f64;
                slot[ch] = (a + (b - a) * frac).round() as u8;
            }
        }
        lut
    }
}

/// Palette index of `count` when `max` maps to the hottest entry.
pub fn palette_index(count: u32, max: u32) -> usize {
    if max == 0 {
        0
    } else {
        ((count as f64 / max as f64) * 255.0).round() as usize
    }
}

pub fn render_counts(counts: &Grid<u32>, palette: Palette) -> RgbImage {
    let lut = palette.table();
    let max = counts.as_slice().iter().copied().max().unwrap_or(0);
    let mut img = RgbImage::new(counts.width() as u32, counts.height() as u32);
    for (r, row) in counts.rows().enumerate() {
        for (c, &n) in row.iter().enumerate() {
            img.put_pixel(c as u32, r as u32, image::Rgb(lut[palette_index(n, max)]));
        }
    }
    img
}

/// Sidecar listing the colour of every count from 0 to the image maximum.
pub fn scale_text(counts: &Grid<u32>, palette: Palette) -> String {
    let lut = palette.table();
    let max = counts.as_slice().iter().copied().max().unwrap_or(0);
    let mut out = String::new();
    writeln!(
        out,
        "# palette diverging; count 0 -> coldest, max {max} -> hottest"
    )
    .unwrap();
    writeln!(out, "max_count,{max}").unwrap();
    writeln!(out, "count,r,g,b").unwrap();
    for n in 0..=max.min(65_535) {
        let [r, g, b] = lut[palette_index(n, max)];
        writeln!(out, "{n},{r},{g},{b}").unwrap();
    }
    out
}

pub fn sidecar_path(png: &Path) -> PathBuf {
    let mut name = png.file_name().unwrap_or_default().to_os_string();
    name.push(".scale.txt");
    png.with_file_name(name)
}

/// Writes the PNG and its `.scale.txt` sidecar.
pub fn write_rendered(path: &Path, counts: &Grid<u32>, palette: Palette) -> Result<()> {
    render_counts(counts, palette)
        .save(path)
        .map_err(|e| CliError::output(path, std::io::Error::other(e)))?;
    let side = sidecar_path(path);
    fs::write(&side, scale_text(counts, palette)).map_err(|e| CliError::output(&side, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_endpoints_are_anchors() {
        let lut = Palette::Diverging.table();
        assert_eq!(lut[0], DIVERGING_ANCHORS[0]);
        assert_eq!(lut[255], DIVERGING_ANCHORS[4]);
    }

    #[test]
    fn zero_map_is_uniformly_cold() {
        let img = render_counts(&Grid::filled(3, 4, 0), Palette::Diverging);
        assert!(img.pixels().all(|p| p.0 == DIVERGING_ANCHORS[0]));
    }

    #[test]
    fn extremes_for_two_pixels() {
        let img = render_counts(&Grid::from_rows(&[[0u32, 9]]), Palette::Diverging);
        assert_eq!(img.get_pixel(0, 0).0, DIVERGING_ANCHORS[0]);
        assert_eq!(img.get_pixel(1, 0).0, DIVERGING_ANCHORS[4]);
    }

    #[test]
    fn sidecar_lists_every_count() {
        let text = scale_text(&Grid::from_rows(&[[0u32, 2]]), Palette::Diverging);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "max_count,2");
        assert_eq!(lines.len(), 3 + 3);
        assert!(lines[3].starts_with("0,5,48,97"));
    }
}
