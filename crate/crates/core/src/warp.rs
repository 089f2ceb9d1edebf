//! Longitude-periodic resampling of a depth panorama by a per-pixel angular
//! displacement field.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io::DepthPanorama;
use crate::sphere;

const MAGIC: &[u8; 4] = b"DSPF";

/// Continuous coordinates this close to a pixel center snap onto it, so
/// fields that land on centers up to rounding reproduce source values exactly.
const SNAP: f64 = 1e-9;

/// Per-pixel `(Δφ, Δθ)` offsets in radians.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField {
    dphi: Grid<f64>,
    dtheta: Grid<f64>,
}

impl DisplacementField {
    pub fn new(dphi: Grid<f64>, dtheta: Grid<f64>) -> Result<Self> {
        dphi.same_dims(&dtheta)?;
        if dphi.as_slice().iter().chain(dtheta.as_slice()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("displacement field"));
        }
        Ok(DisplacementField { dphi, dtheta })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::uniform(width, height, 0.0, 0.0)
    }

    pub fn uniform(width: usize, height: usize, dphi: f64, dtheta: f64) -> Self {
        DisplacementField {
            dphi: Grid::filled(width, height, dphi),
            dtheta: Grid::filled(width, height, dtheta),
        }
    }

    /// Converts offsets in pixels (`du` columns, `dv` rows) to radians.
    pub fn from_pixel_units(du: &Grid<f64>, dv: &Grid<f64>) -> Result<Self> {
        let (w, h) = du.dims();
        Self::new(du.map(|u| u * TAU / w as f64), dv.map(|v| v * PI / h as f64))
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dphi.dims()
    }

    pub fn dphi(&self) -> &Grid<f64> {
        &self.dphi
    }

    pub fn dtheta(&self) -> &Grid<f64> {
        &self.dtheta
    }

    /// `DSPF` magic, little-endian `u32` width and height, then interleaved
    /// `f32` pairs `(Δφ, Δθ)` in grid row order.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let (w, h) = self.dims();
        out.write_all(MAGIC)?;
        out.write_all(&(w as u32).to_le_bytes())?;
        out.write_all(&(h as u32).to_le_bytes())?;
        for (a, b) in self.dphi.as_slice().iter().zip(self.dtheta.as_slice()) {
            out.write_all(&(*a as f32).to_le_bytes())?;
            out.write_all(&(*b as f32).to_le_bytes())?;
        }
        out.flush()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(BufWriter::new(f)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut bytes = Vec::new();
        BufReader::new(f).read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
        let bad = |reason: String| Error::MalformedHeader { path: path.to_path_buf(), reason };
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(bad("missing DSPF magic".into()));
        }
        let w = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let h = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        if w == 0 || h == 0 {
            return Err(bad(format!("empty field dimensions {w}x{h}")));
        }
        let want = w
            .checked_mul(h)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| bad(format!("field dimensions {w}x{h} overflow")))?;
        if bytes.len() - 12 != want {
            return Err(Error::Decode {
                path: path.to_path_buf(),
                reason: format!("expected {want} payload bytes for {w}x{h}, found {}", bytes.len() - 12),
            });
        }
        let f32_at = |k: usize| f32::from_le_bytes(bytes[12 + 4 * k..16 + 4 * k].try_into().unwrap()) as f64;
        let dphi = Grid::from_vec(w, h, (0..w * h).map(|k| f32_at(2 * k)).collect())?;
        let dtheta = Grid::from_vec(w, h, (0..w * h).map(|k| f32_at(2 * k + 1)).collect())?;
        Self::new(dphi, dtheta)
    }
}

#[inline]
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= SNAP {
        r
    } else {
        x
    }
}

/// Resamples `d` at `(φ + Δφ, θ + Δθ)` for every pixel.
///
/// Longitude wraps into `(0, 2π]`, latitude clamps to the poles, and values
/// are bilinearly interpolated. An output pixel is valid only if every source
/// tap with non-zero weight is valid; invalid outputs hold NaN.
pub fn apply_displacement(d: &DepthPanorama, field: &DisplacementField) -> Result<DepthPanorama> {
    let (w, h) = d.dims();
    if field.dims() != (w, h) {
        return Err(Error::dims((w, h), field.dims()));
    }
    let src = d.depth();
    let src_mask = d.mask();
    let mut depth = vec![0.0; w * h];
    let mut mask = vec![false; w * h];
    depth
        .par_chunks_mut(w)
        .zip(mask.par_chunks_mut(w))
        .enumerate()
        .try_for_each(|(j, (drow, mrow))| -> Result<()> {
            let lat = sphere::pixel_lat(j, h);
            for i in 0..w {
                let phi = sphere::pixel_lon(i, w) + field.dphi[(i, j)];
                let theta = (lat + field.dtheta[(i, j)]).clamp(-FRAC_PI_2, FRAC_PI_2);
                let tau = sphere::wrap_longitude(phi)?;
                let u = snap((tau + PI) * w as f64 / TAU - 0.5);
                let v = snap((theta + FRAC_PI_2) * h as f64 / PI - 0.5);
                let mut acc = 0.0;
                let mut valid = true;
                for (si, sj, wt) in sphere::bilinear_taps(w, h, u, v) {
                    if wt != 0.0 {
                        valid &= src_mask[(si, sj)];
                        acc += wt * src[(si, sj)];
                    }
                }
                drow[i] = if valid { acc } else { f64::NAN };
                mrow[i] = valid;
            }
            Ok(())
        })?;
    DepthPanorama::new(Grid::from_vec(w, h, depth)?, Grid::from_vec(w, h, mask)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> DepthPanorama {
        DepthPanorama::from_depth(Grid::from_fn(w, h, |i, j| 1.0 + i as f64 * 0.1 + j as f64 * 0.01), 100.0).unwrap()
    }

    #[test]
    fn zero_field_is_identity() {
        let d = ramp(64, 32);
        let out = apply_displacement(&d, &DisplacementField::zeros(64, 32)).unwrap();
        assert_eq!(out, d);
    }

    #[test]
    fn one_pixel_shift() {
        let d = ramp(64, 32);
        let out = apply_displacement(&d, &DisplacementField::uniform(64, 32, TAU / 64.0, 0.0)).unwrap();
        for j in 0..32 {
            for i in 0..64 {
                assert_eq!(out.depth()[(i, j)], d.depth()[((i + 1) % 64, j)]);
            }
        }
    }

    #[test]
    fn full_turn_is_identity() {
        let d = ramp(64, 32);
        let out = apply_displacement(&d, &DisplacementField::uniform(64, 32, TAU, 0.0)).unwrap();
        for (a, b) in out.depth().as_slice().iter().zip(d.depth().as_slice()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn masked_taps_propagate() {
        let mut mask = Grid::filled(16, 8, true);
        mask[(5, 3)] = false;
        let d = DepthPanorama::new(Grid::filled(16, 8, 2.0), mask).unwrap();
        // half a pixel right: each output blends columns i and i+1
        let out = apply_displacement(&d, &DisplacementField::uniform(16, 8, 0.5 * TAU / 16.0, 0.0)).unwrap();
        assert!(!out.mask()[(4, 3)] && !out.mask()[(5, 3)]);
        assert_eq!(out.valid_count(), 16 * 8 - 2);
        assert!(out.depth()[(4, 3)].is_nan());
        assert_eq!(out.depth()[(6, 3)], 2.0);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(apply_displacement(&ramp(16, 8), &DisplacementField::zeros(8, 4)).is_err());
    }

    #[test]
    fn field_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.dspf");
        let f = DisplacementField::new(
            Grid::from_fn(8, 4, |i, j| (i as f64 - j as f64) * 0.25),
            Grid::from_fn(8, 4, |i, _| i as f64 * -0.5),
        )
        .unwrap();
        f.save(&path).unwrap();
        assert_eq!(DisplacementField::load(&path).unwrap(), f);
        std::fs::write(&path, b"DSPF\x02\x00\x00\x00\x01\x00\x00\x00").unwrap();
        assert!(matches!(DisplacementField::load(&path), Err(Error::Decode { .. })));
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(DisplacementField::load(&path), Err(Error::MalformedHeader { .. })));
    }

    #[test]
    fn pixel_units() {
        let du = Grid::filled(8, 4, 1.0);
        let dv = Grid::filled(8, 4, -2.0);
        let f = DisplacementField::from_pixel_units(&du, &dv).unwrap();
        assert_eq!(f.dphi()[(0, 0)], TAU / 8.0);
        assert_eq!(f.dtheta()[(0, 0)], -2.0 * PI / 4.0);
    }
}
