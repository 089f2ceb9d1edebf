//! Equirectangular geometry.
//!
//! Conventions: x points right, y up, z forward. Pixel `(i, j)` of a `W x H`
//! grid has its center at longitude `φ = 2π(i + 0.5)/W − π` and latitude
//! `θ = π(j + 0.5)/H − π/2`, so column 0 starts at `φ = −π` and row 0 is the
//! band closest to the south pole. In continuous pixel coordinates `(u, v)`
//! the center of pixel `(i, j)` sits at `(i, j)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::vec3::Vec3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphericalCoord {
    /// Longitude φ in radians, `[−π, π)` for pixel centers.
    pub lon: f64,
    /// Latitude θ in radians, `[−π/2, π/2]`.
    pub lat: f64,
}

impl SphericalCoord {
    pub fn new(lon: f64, lat: f64) -> Self {
        SphericalCoord { lon, lat }
    }

    /// Coordinates of a (not necessarily unit) direction vector.
    pub fn from_direction(v: Vec3) -> Self {
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        SphericalCoord {
            lon: v[0].atan2(v[2]),
            lat: (v[1] / r).clamp(-1.0, 1.0).asin(),
        }
    }

    pub fn direction(&self) -> Vec3 {
        direction(*self)
    }
}

pub fn pixel_to_spherical(i: usize, j: usize, width: usize, height: usize) -> Result<SphericalCoord> {
    if i >= width || j >= height {
        return Err(Error::IndexOutOfRange {
            i,
            j,
            width,
            height,
        });
    }
    Ok(SphericalCoord {
        lon: pixel_lon(i, width),
        lat: pixel_lat(j, height),
    })
}

#[inline]
pub fn pixel_lon(i: usize, width: usize) -> f64 {
    TAU * (i as f64 + 0.5) / width as f64 - PI
}

#[inline]
pub fn pixel_lat(j: usize, height: usize) -> f64 {
    PI * (j as f64 + 0.5) / height as f64 - FRAC_PI_2
}

/// Continuous pixel coordinates `(u, v)` of a spherical coordinate. `u` is not
/// wrapped and `v` is not clamped.
#[inline]
pub fn spherical_to_pixel(c: SphericalCoord, width: usize, height: usize) -> (f64, f64) {
    let u = (c.lon + PI) * width as f64 / TAU - 0.5;
    let v = (c.lat + FRAC_PI_2) * height as f64 / PI - 0.5;
    (u, v)
}

/// Unit viewing direction `(cos θ sin φ, sin θ, cos θ cos φ)`.
#[inline]
pub fn direction(c: SphericalCoord) -> Vec3 {
    let (sl, cl) = c.lon.sin_cos();
    let (st, ct) = c.lat.sin_cos();
    [ct * sl, st, ct * cl]
}

/// Unit directions of every pixel center, row-major.
pub fn direction_grid(width: usize, height: usize) -> Grid<Vec3> {
    let lons: Vec<(f64, f64)> = (0..width).map(|i| pixel_lon(i, width).sin_cos()).collect();
    let lats: Vec<(f64, f64)> = (0..height).map(|j| pixel_lat(j, height).sin_cos()).collect();
    Grid::from_fn(width, height, |i, j| {
        let (sl, cl) = lons[i];
        let (st, ct) = lats[j];
        [ct * sl, st, ct * cl]
    })
}

/// Solid-angle weights of an equirectangular grid, proportional to the cosine
/// of each row's center latitude and normalized to sum to one over the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightGrid {
    width: usize,
    height: usize,
    rows: Vec<f64>,
}

impl WeightGrid {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn weight(&self, _i: usize, j: usize) -> f64 {
        self.rows[j]
    }

    /// Per-pixel weight of each row.
    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    pub fn uniform(width: usize, height: usize) -> Self {
        let w = 1.0 / (width * height) as f64;
        WeightGrid {
            width,
            height,
            rows: vec![w; height],
        }
    }

    pub fn to_grid(&self) -> Grid<f64> {
        Grid::from_fn(self.width, self.height, |_, j| self.rows[j])
    }
}

pub fn spherical_weights(width: usize, height: usize) -> WeightGrid {
    assert!(width > 0 && height > 0, "grid dimensions must be positive");
    let raw: Vec<f64> = (0..height).map(|j| pixel_lat(j, height).cos()).collect();
    let total: f64 = raw.iter().sum::<f64>() * width as f64;
    WeightGrid {
        width,
        height,
        rows: raw.into_iter().map(|c| c / total).collect(),
    }
}

/// Wraps a longitude into `(0, 2π]` as `atan2(−sin φ, −cos φ) + π`.
pub fn wrap_longitude(phi: f64) -> Result<f64> {
    if !phi.is_finite() {
        return Err(Error::NonFinite("longitude"));
    }
    let tau = (-phi.sin()).atan2(-phi.cos()) + PI;
    // atan2 returns −π for a −0.0 numerator; that is the 2π end of the range
    Ok(if tau <= 0.0 { tau + TAU } else { tau })
}

/// The four bilinear taps `(i, j, weight)` for continuous coordinates
/// `(u, v)`, with `u` wrapped modulo the width and `v` clamped to the rows.
#[inline]
pub fn bilinear_taps(width: usize, height: usize, u: f64, v: f64) -> [(usize, usize, f64); 4] {
    let w = width as f64;
    let u = u.rem_euclid(w);
    let u0 = u.floor();
    let fu = u - u0;
    let i0 = (u0 as usize).min(width - 1);
    let i1 = (i0 + 1) % width;

    let v = v.clamp(0.0, (height - 1) as f64);
    let v0 = v.floor();
    let fv = v - v0;
    let j0 = v0 as usize;
    let j1 = (j0 + 1).min(height - 1);

    [
        (i0, j0, (1.0 - fu) * (1.0 - fv)),
        (i1, j0, fu * (1.0 - fv)),
        (i0, j1, (1.0 - fu) * fv),
        (i1, j1, fu * fv),
    ]
}

pub fn sample_bilinear_wrapped(grid: &Grid<f64>, u: f64, v: f64) -> f64 {
    let taps = bilinear_taps(grid.width(), grid.height(), u, v);
    let mut acc = 0.0;
    for (i, j, w) in taps {
        if w != 0.0 {
            acc += w * grid[(i, j)];
        }
    }
    acc
}

/// Pads `p` columns on each side, copying columns across the horizontal seam.
pub fn circular_pad<T: Clone>(grid: &Grid<T>, p: usize) -> Result<Grid<T>> {
    let w = grid.width();
    if p == 0 || p > w {
        return Err(Error::InvalidArgument(format!(
            "pad width {p} must be in 1..={w}"
        )));
    }
    Ok(Grid::from_fn(w + 2 * p, grid.height(), |i, j| {
        let src = (i + w - p) % w;
        grid[(src, j)].clone()
    }))
}

/// Removes `p` columns from each side; the inverse of [`circular_pad`].
pub fn crop_columns<T: Clone>(grid: &Grid<T>, p: usize) -> Result<Grid<T>> {
    if 2 * p >= grid.width() {
        return Err(Error::InvalidArgument(format!(
            "cannot crop {p} columns from each side of width {}",
            grid.width()
        )));
    }
    Ok(Grid::from_fn(grid.width() - 2 * p, grid.height(), |i, j| {
        grid[(i + p, j)].clone()
    }))
}
