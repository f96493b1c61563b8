//! Class-id masks: 8-bit grayscale PNG (pixel value = class id) or headered raw.
//!
//! Raw layout: the ASCII magic `FDM1`, height and width as little-endian
//! `u32`, then `height * width` class-id bytes in row-major order.

use std::fs;
use std::path::Path;

use forgetdyn_core::{ClassGrid, Grid};
use image::{DynamicImage, GrayImage};

use crate::error::{CliError, Result};

pub const RAW_MAGIC: &[u8; 4] = b"FDM1";

fn is_png(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

pub fn read_class_grid(path: &Path) -> Result<ClassGrid> {
    if !path.is_file() {
        return Err(CliError::parse(path, "file not found"));
    }
    if is_png(path) {
        let img = image::open(path).map_err(|e| CliError::parse(path, e))?;
        let DynamicImage::ImageLuma8(gray) = img else {
            return Err(CliError::parse(path, "mask PNG must be 8-bit grayscale"));
        };
        let (w, h) = gray.dimensions();
        Grid::from_vec(h as usize, w as usize, gray.into_raw())
            .map_err(|e| CliError::parse(path, e))
    } else {
        let bytes = fs::read(path).map_err(|e| CliError::parse(path, e))?;
        decode_raw(&bytes).map_err(|msg| CliError::parse(path, msg))
    }
}

pub fn decode_raw(bytes: &[u8]) -> std::result::Result<ClassGrid, String> {
    if bytes.len() < 12 || &bytes[..4] != RAW_MAGIC {
        return Err("not a raw mask (missing FDM1 header)".into());
    }
    let h = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let w = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[12..];
    if h.checked_mul(w) != Some(body.len()) {
        return Err(format!(
            "header says {h}x{w} but body has {} bytes",
            body.len()
        ));
    }
    Grid::from_vec(h, w, body.to_vec()).map_err(|e| e.to_string())
}

pub fn encode_raw(grid: &ClassGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + grid.len());
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&(grid.height() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.width() as u32).to_le_bytes());
    out.extend_from_slice(grid.as_slice());
    out
}

/// Writes PNG or raw depending on the extension.
pub fn write_class_grid(path: &Path, grid: &ClassGrid) -> Result<()> {
    if is_png(path) {
        let img = GrayImage::from_raw(
            grid.width() as u32,
            grid.height() as u32,
            grid.as_slice().to_vec(),
        )
        .expect("buffer matches dimensions");
        img.save(path)
            .map_err(|e| CliError::output(path, std::io::Error::other(e)))
    } else {
        fs::write(path, encode_raw(grid)).map_err(|e| CliError::output(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_rejects_truncation() {
        let g = Grid::from_rows(&[[1u8, 2, 3], [4, 5, 6]]);
        let mut bytes = encode_raw(&g);
        assert_eq!(decode_raw(&bytes).unwrap(), g);
        bytes.pop();
        assert!(decode_raw(&bytes).is_err());
        assert!(decode_raw(b"XXXX\0\0\0\0\0\0\0\0").is_err());
    }

    #[test]
    fn png_and_raw_files() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::from_fn(5, 7, |r, c| ((r * 7 + c) % 6) as u8);
        for name in ["m.png", "m.raw"] {
            let p = dir.path().join(name);
            write_class_grid(&p, &g).unwrap();
            assert_eq!(read_class_grid(&p).unwrap(), g);
        }
        let err = read_class_grid(&dir.path().join("missing.png")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("missing.png"));
    }
}
