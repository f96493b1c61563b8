use crate::error::{Error, Result};
use crate::image::Dataset;
use crate::rng::RngStream;

/// Appends `copies` horizontally mirrored training images, each picked uniformly.
pub fn baseline_flip(dataset: &Dataset, rng: &mut RngStream, copies: usize) -> Dataset {
    let mut out = dataset.clone();
    if dataset.train.is_empty() {
        return out;
    }
    out.train.reserve(copies);
    for n in 0..copies {
        let src = &dataset.train[rng.index(dataset.train.len())];
        out.train
            .push(src.flip_horizontal(alloc::format!("{}~flip{n}", src.image_id)));
    }
    out
}

/// Appends `copies` training images rotated by 90, 180 or 270 degrees (uniform).
///
/// Quarter turns of non-square images fail with `NonSquareRotation`.
pub fn baseline_rotate(dataset: &Dataset, rng: &mut RngStream, copies: usize) -> Result<Dataset> {
    let mut out = dataset.clone();
    if dataset.train.is_empty() {
        return Ok(out);
    }
    out.train.reserve(copies);
    for n in 0..copies {
        let src = &dataset.train[rng.index(dataset.train.len())];
        let turns = 1 + rng.below(3) as u32;
        if turns % 2 == 1 && src.height() != src.width() {
            return Err(Error::NonSquareRotation {
                height: src.height(),
                width: src.width(),
                degrees: turns * 90,
            });
        }
        out.train.push(src.rotate_quarter_turns(
            turns,
            alloc::format!("{}~rot{}_{n}", src.image_id, turns * 90),
        ));
    }
    Ok(out)
}
