//! Streaming forgetting-event counter.
//!
//! A pixel is *forgotten* at step `t -> t+1` when it was classified correctly
//! at snapshot `t` and incorrectly at `t+1`. A trace over `E` snapshots has
//! `E - 1` such steps. Only the previous accuracy bitmap and the running
//! counters are kept, so memory is `O(height * width)` regardless of `E`.

use alloc::string::String;

use crate::error::{Error, Result};
use crate::grid::{ClassGrid, Grid};
use crate::image::{validate_pair, LabelSpace, LabeledImage};

/// Per-pixel correctness at one snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccuracyBitmap {
    pub epoch: u32,
    pub bits: Grid<bool>,
    /// Pixels whose truth is the ignore label; their bit is always `false`.
    pub ignored: Option<Grid<bool>>,
}

impl AccuracyBitmap {
    pub fn new(epoch: u32, bits: Grid<bool>) -> Self {
        AccuracyBitmap {
            epoch,
            bits,
            ignored: None,
        }
    }
}

/// Per-pixel forgetting counts over a trace window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeatMap {
    counts: Grid<u32>,
    epochs_observed: u32,
    ever_correct: Grid<bool>,
    ignored: Option<Grid<bool>>,
}

/// Largest count any pixel can reach over `epochs` snapshots (alternating 1,0,1,0,...).
pub fn max_events(epochs: u32) -> u32 {
    epochs / 2
}

impl HeatMap {
    /// Reassembles a heat map, checking shape agreement and the count invariants.
    pub fn from_parts(
        counts: Grid<u32>,
        epochs_observed: u32,
        ever_correct: Grid<bool>,
        ignored: Option<Grid<bool>>,
    ) -> Result<Self> {
        counts.check_same_dims(&ever_correct)?;
        if let Some(mask) = &ignored {
            counts.check_same_dims(mask)?;
        }
        let bound = max_events(epochs_observed);
        let ok = counts
            .as_slice()
            .iter()
            .zip(ever_correct.as_slice())
            .all(|(&n, &seen)| n <= bound && (seen || n == 0));
        if !ok {
            return Err(Error::InvalidConfig(alloc::format!(
                "heat map counts violate the bound {bound} for {epochs_observed} snapshots"
            )));
        }
        Ok(HeatMap {
            counts,
            epochs_observed,
            ever_correct,
            ignored,
        })
    }

    pub fn counts(&self) -> &Grid<u32> {
        &self.counts
    }

    pub fn epochs_observed(&self) -> u32 {
        self.epochs_observed
    }

    pub fn ever_correct(&self) -> &Grid<bool> {
        &self.ever_correct
    }

    pub fn ignored(&self) -> Option<&Grid<bool>> {
        self.ignored.as_ref()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.counts.dims()
    }

    #[inline]
    pub fn is_ignored(&self, idx: usize) -> bool {
        self.ignored.as_ref().is_some_and(|m| m.as_slice()[idx])
    }

    pub fn total_events(&self) -> u64 {
        self.counts.as_slice().iter().map(|&c| c as u64).sum()
    }

    pub fn max_count(&self) -> u32 {
        self.counts.as_slice().iter().copied().max().unwrap_or(0)
    }

    /// Number of pixels forgotten at least `threshold` times.
    pub fn forgettable_count(&self, threshold: u32) -> usize {
        self.counts
            .as_slice()
            .iter()
            .filter(|&&c| c >= threshold)
            .count()
    }
}

/// Running trace for one image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceState {
    pub image_id: String,
    prev_acc: AccuracyBitmap,
    heatmap: HeatMap,
    events: u64,
}

impl TraceState {
    /// Starts a trace from the snapshot at epoch 0.
    pub fn begin(image_id: impl Into<String>, first: AccuracyBitmap) -> Result<Self> {
        if first.epoch != 0 {
            return Err(Error::EpochGap {
                expected: 0,
                got: first.epoch,
            });
        }
        let (h, w) = first.bits.dims();
        let heatmap = HeatMap {
            counts: Grid::filled(h, w, 0),
            epochs_observed: 1,
            ever_correct: first.bits.clone(),
            ignored: first.ignored.clone(),
        };
        Ok(TraceState {
            image_id: image_id.into(),
            prev_acc: first,
            heatmap,
            events: 0,
        })
    }

    pub fn prev_acc(&self) -> &AccuracyBitmap {
        &self.prev_acc
    }

    pub fn heatmap(&self) -> &HeatMap {
        &self.heatmap
    }

    pub fn into_heatmap(self) -> HeatMap {
        self.heatmap
    }

    /// Total increments performed so far.
    pub fn events(&self) -> u64 {
        self.events
    }

    /// In-place form of [`forgetting_step`].
    pub fn observe(&mut self, curr: AccuracyBitmap) -> Result<()> {
        let expected = self.prev_acc.epoch + 1;
        if curr.epoch != expected {
            return Err(Error::EpochGap {
                expected,
                got: curr.epoch,
            });
        }
        self.prev_acc.bits.check_same_dims(&curr.bits)?;
        let prev = self.prev_acc.bits.as_slice();
        let counts = self.heatmap.counts.as_mut_slice();
        let seen = self.heatmap.ever_correct.as_mut_slice();
        let mut events = 0u64;
        for (i, &now) in curr.bits.as_slice().iter().enumerate() {
            if prev[i] && !now {
                counts[i] += 1;
                events += 1;
            }
            seen[i] |= now;
        }
        self.events += events;
        self.heatmap.epochs_observed += 1;
        self.prev_acc = curr;
        Ok(())
    }
}

/// Per-pixel correctness of `pred` against `image.labels`.
pub fn pixel_accuracy(
    pred: &ClassGrid,
    image: &LabeledImage,
    epoch: u32,
    space: &LabelSpace,
) -> Result<AccuracyBitmap> {
    validate_pair(pred, &image.labels, space)?;
    let truth = image.labels.as_slice();
    let p = pred.as_slice();
    let bits = Grid::from_vec(
        pred.height(),
        pred.width(),
        p.iter()
            .zip(truth)
            .map(|(&a, &b)| a == b && !space.is_ignored(b))
            .collect(),
    )?;
    let ignored = space
        .ignore_label
        .filter(|&ig| truth.contains(&ig))
        .map(|ig| image.labels.map(|&l| l == ig));
    Ok(AccuracyBitmap {
        epoch,
        bits,
        ignored,
    })
}

/// One forgetting step: consumes the next snapshot's accuracy.
pub fn forgetting_step(mut state: TraceState, curr: AccuracyBitmap) -> Result<TraceState> {
    state.observe(curr)?;
    Ok(state)
}

/// Incrementally feeds prediction grids of one image.
#[derive(Debug, Clone)]
pub struct Tracer<'a> {
    image: &'a LabeledImage,
    space: LabelSpace,
    state: Option<TraceState>,
}

impl<'a> Tracer<'a> {
    pub fn new(image: &'a LabeledImage, space: LabelSpace) -> Self {
        Tracer {
            image,
            space,
            state: None,
        }
    }

    pub fn push(&mut self, pred: &ClassGrid) -> Result<()> {
        match self.state.as_mut() {
            None => {
                let acc = pixel_accuracy(pred, self.image, 0, &self.space)?;
                self.state = Some(TraceState::begin(self.image.image_id.clone(), acc)?);
            }
            Some(state) => {
                let epoch = state.prev_acc.epoch + 1;
                let acc = pixel_accuracy(pred, self.image, epoch, &self.space)?;
                state.observe(acc)?;
            }
        }
        Ok(())
    }

    pub fn state(&self) -> Option<&TraceState> {
        self.state.as_ref()
    }

    pub fn finish(self) -> Result<HeatMap> {
        self.state
            .map(TraceState::into_heatmap)
            .ok_or(Error::EmptyTrace)
    }
}

/// Heat map of an ordered snapshot sequence; snapshot `k` is epoch `k`.
pub fn run_trace<'p, I>(snapshots: I, image: &LabeledImage, space: &LabelSpace) -> Result<HeatMap>
where
    I: IntoIterator<Item = &'p ClassGrid>,
{
    let mut tracer = Tracer::new(image, *space);
    for pred in snapshots {
        tracer.push(pred)?;
    }
    tracer.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PixelGroup {
    Unforgettable,
    Forgettable,
    NeverLearned,
    /// Truth is the ignore label; only produced when an ignore label is configured.
    Ignored,
}

/// Splits pixels into forgettable (`count >= threshold`), unforgettable, and never learned.
pub fn partition_pixels(heatmap: &HeatMap, threshold: u32) -> Grid<PixelGroup> {
    let threshold = threshold.max(1);
    let (h, w) = heatmap.dims();
    let counts = heatmap.counts.as_slice();
    let seen = heatmap.ever_correct.as_slice();
    Grid::from_fn(h, w, |r, c| {
        let i = r * w + c;
        if heatmap.is_ignored(i) {
            PixelGroup::Ignored
        } else if !seen[i] {
            PixelGroup::NeverLearned
        } else if counts[i] >= threshold {
            PixelGroup::Forgettable
        } else {
            PixelGroup::Unforgettable
        }
    })
}
