use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Row-major `height x width` grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

/// Per-pixel class ids (ground truth or prediction).
pub type ClassGrid = Grid<u8>;

impl<T: Clone> Grid<T> {
    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Grid {
            height,
            width,
            data: vec![value; height * width],
        }
    }
}

impl<T> Grid<T> {
    /// Fails with `DimensionMismatch` when `data.len() != height * width` or a side is zero.
    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 || data.len() != height * width {
            return Err(Error::DimensionMismatch {
                expected_height: height,
                expected_width: width,
                height: if width == 0 {
                    0
                } else {
                    data.len() / width.max(1)
                },
                width,
            });
        }
        Ok(Grid {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Grid {
            height,
            width,
            data,
        }
    }

    /// Builds from nested rows; panics on ragged input. Intended for fixtures.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self
    where
        T: Clone,
    {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(height * width);
        for row in rows {
            assert_eq!(row.as_ref().len(), width, "ragged rows");
            data.extend_from_slice(row.as_ref());
        }
        Grid {
            height,
            width,
            data,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.width + col]
    }

    #[inline]
    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut T {
        &mut self.data[row * self.width + col]
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn rows(&self) -> core::slice::Chunks<'_, T> {
        self.data.chunks(self.width)
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// `Ok` iff both grids have the same shape; the error reports `other` against `self`.
    pub fn check_same_dims<U>(&self, other: &Grid<U>) -> Result<()> {
        if self.dims() == other.dims() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected_height: self.height,
                expected_width: self.width,
                height: other.height,
                width: other.width,
            })
        }
    }

    /// Mirror left-right.
    pub fn flip_horizontal(&self) -> Self
    where
        T: Clone,
    {
        Grid::from_fn(self.height, self.width, |r, c| {
            self.get(r, self.width - 1 - c).clone()
        })
    }

    /// Rotate counter-clockwise by `quarter_turns * 90` degrees.
    ///
    /// A pixel at `(r, c)` of an `H x W` grid lands at `(W-1-c, r)` after one turn.
    pub fn rotate_quarter_turns(&self, quarter_turns: u32) -> Self
    where
        T: Clone,
    {
        let (h, w) = self.dims();
        match quarter_turns % 4 {
            0 => self.clone(),
            1 => Grid::from_fn(w, h, |r, c| self.get(c, w - 1 - r).clone()),
            2 => Grid::from_fn(h, w, |r, c| self.get(h - 1 - r, w - 1 - c).clone()),
            _ => Grid::from_fn(w, h, |r, c| self.get(h - 1 - c, r).clone()),
        }
    }
}
