//! Row-major 2D sample grids.
//!
//! Pixel `(i, j)` addresses column `i` and row `j`. Row 0 is the first row in
//! memory and maps to the southernmost latitude band (see [`crate::sphere`]).

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        Grid {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "grid dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} samples", width * height),
                found: format!("{} samples", data.len()),
            });
        }
        Ok(Grid {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for j in 0..height {
            for i in 0..width {
                data.push(f(i, j));
            }
        }
        Grid {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Width is exactly twice the height.
    pub fn is_equirectangular(&self) -> bool {
        self.width == 2 * self.height
    }

    #[inline]
    pub fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.width && j < self.height);
        j * self.width + i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Option<&T> {
        (i < self.width && j < self.height).then(|| &self.data[j * self.width + i])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, j: usize) -> &[T] {
        &self.data[j * self.width..(j + 1) * self.width]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn same_dims<U>(&self, other: &Grid<U>) -> Result<()> {
        if self.dims() == other.dims() {
            Ok(())
        } else {
            Err(Error::dims(self.dims(), other.dims()))
        }
    }

    /// Column index `i` wrapped horizontally.
    #[inline]
    pub fn wrap_col(&self, i: isize) -> usize {
        i.rem_euclid(self.width as isize) as usize
    }

    /// Row index `j` clamped to the grid.
    #[inline]
    pub fn clamp_row(&self, j: isize) -> usize {
        j.clamp(0, self.height as isize - 1) as usize
    }
}

impl<T> Index<(usize, usize)> for Grid<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[j * self.width + i]
    }
}

impl<T> IndexMut<(usize, usize)> for Grid<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[j * self.width + i]
    }
}

impl Grid<bool> {
    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn and(&self, other: &Grid<bool>) -> Result<Grid<bool>> {
        self.same_dims(other)?;
        Ok(Grid {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a && b)
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_column_then_row() {
        let g = Grid::from_fn(3, 2, |i, j| 10 * j + i);
        assert_eq!(g[(2, 1)], 12);
        assert_eq!(g.row(1), &[10, 11, 12]);
        assert_eq!(g.get(3, 0), None);
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(Grid::from_vec(2, 2, vec![0.0; 3]).is_err());
        assert!(Grid::<f64>::from_vec(0, 2, vec![]).is_err());
    }

    #[test]
    fn wrap_and_clamp() {
        let g = Grid::filled(4, 2, 0u8);
        assert_eq!(g.wrap_col(-1), 3);
        assert_eq!(g.wrap_col(4), 0);
        assert_eq!(g.clamp_row(-3), 0);
        assert_eq!(g.clamp_row(5), 1);
    }
}
