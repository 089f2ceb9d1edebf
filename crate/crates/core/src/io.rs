//! Depth panorama loading and saving, validity masks and sample manifests.
//!
//! Rows are stored in grid order (row 0 = south). PFM files are written
//! bottom-to-top, which is already grid order; PNG and raw float32 files are
//! top-to-bottom image order and are flipped on load and save.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Upper end of the evaluated depth range, in meters.
pub const DEFAULT_MAX_DEPTH: f64 = 10.0;

/// Predictions are clamped to at least this depth before evaluation.
pub const PREDICTION_FLOOR: f64 = 1e-3;

/// Maximum fraction of invalid pixels a sample may have to be kept.
pub const DEFAULT_MAX_INVALID: f64 = 0.10;

/// Radial depth in meters over an equirectangular grid plus a validity mask.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthPanorama {
    depth: Grid<f64>,
    mask: Grid<bool>,
}

impl DepthPanorama {
    /// Wraps a depth grid and mask. Every valid pixel must hold a finite
    /// positive depth.
    pub fn new(depth: Grid<f64>, mask: Grid<bool>) -> Result<Self> {
        depth.same_dims(&mask)?;
        if !depth.is_equirectangular() {
            return Err(Error::InvalidArgument(format!(
                "depth panorama must be 2:1, got {}x{}",
                depth.width(),
                depth.height()
            )));
        }
        if depth
            .as_slice()
            .iter()
            .zip(mask.as_slice())
            .any(|(&d, &m)| m && !(d.is_finite() && d > 0.0))
        {
            return Err(Error::InvalidArgument(
                "mask marks a non-positive or non-finite depth as valid".into(),
            ));
        }
        Ok(DepthPanorama { depth, mask })
    }

    /// Valid where the depth is finite and in `(0, max_depth]`.
    pub fn from_depth(depth: Grid<f64>, max_depth: f64) -> Result<Self> {
        let mask = depth.map(|&d| d.is_finite() && d > 0.0 && d <= max_depth);
        Self::new(depth, mask)
    }

    /// Prepares raw network output: finite values are clamped into
    /// `[PREDICTION_FLOOR, max_depth]`, non-finite ones are masked out.
    pub fn from_prediction(raw: Grid<f64>, max_depth: f64) -> Result<Self> {
        let mask = raw.map(|d| d.is_finite());
        let depth = raw.map(|&d| {
            if d.is_finite() {
                d.clamp(PREDICTION_FLOOR, max_depth)
            } else {
                d
            }
        });
        Self::new(depth, mask)
    }

    /// Same depth with the mask intersected with `mask`.
    pub fn restricted(&self, mask: &Grid<bool>) -> Result<Self> {
        Ok(DepthPanorama {
            depth: self.depth.clone(),
            mask: self.mask.and(mask)?,
        })
    }

    pub fn depth(&self) -> &Grid<f64> {
        &self.depth
    }

    pub fn mask(&self) -> &Grid<bool> {
        &self.mask
    }

    pub fn width(&self) -> usize {
        self.depth.width()
    }

    pub fn height(&self) -> usize {
        self.depth.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.depth.dims()
    }

    pub fn valid_count(&self) -> usize {
        self.mask.count_true()
    }

    /// Uniformly rescaled depth, same mask.
    pub fn scaled(&self, s: f64) -> Self {
        DepthPanorama {
            depth: self.depth.map(|d| d * s),
            mask: self.mask.clone(),
        }
    }
}

pub fn invalid_fraction(d: &DepthPanorama) -> f64 {
    let total = d.mask.len();
    (total - d.valid_count()) as f64 / total as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DepthFormat {
    Pfm,
    /// 16-bit grayscale PNG, `meters = value * scale`; value 0 is invalid.
    Png16 { scale: f64 },
    /// Headerless little-endian float32, top-to-bottom rows.
    RawF32 { width: usize, height: usize },
}

impl DepthFormat {
    /// Guesses the format from the file extension. PNG and raw inputs need
    /// their scale or dimensions supplied.
    pub fn from_path(path: &Path, scale: Option<f64>, dims: Option<Resolution>) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        match ext.as_str() {
            "pfm" => Ok(DepthFormat::Pfm),
            "png" => scale
                .map(|scale| DepthFormat::Png16 { scale })
                .ok_or_else(|| Error::InvalidArgument(format!("{}: PNG depth needs a scale", path.display()))),
            "raw" | "bin" | "f32" => dims
                .map(|r| DepthFormat::RawF32 {
                    width: r.width,
                    height: r.height,
                })
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("{}: raw depth needs dimensions", path.display()))
                }),
            _ => Err(Error::InvalidArgument(format!(
                "{}: cannot infer depth format from extension",
                path.display()
            ))),
        }
    }
}

/// Reads raw depth values without masking.
pub fn load_depth_grid(path: &Path, format: DepthFormat) -> Result<Grid<f64>> {
    let grid = match format {
        DepthFormat::Pfm => {
            let f = File::open(path).map_err(|e| Error::io(path, e))?;
            read_pfm(BufReader::new(f), path)?
        }
        DepthFormat::Png16 { scale } => read_png16(path, scale)?,
        DepthFormat::RawF32 { width, height } => read_raw_f32(path, width, height)?,
    };
    if !grid.is_equirectangular() {
        return Err(Error::WrongAspect {
            path: path.to_path_buf(),
            width: grid.width(),
            height: grid.height(),
        });
    }
    Ok(grid)
}

/// Loads a depth map; non-finite, non-positive and `> max_depth` values are
/// marked invalid.
pub fn load_depth(path: &Path, format: DepthFormat, max_depth: f64) -> Result<DepthPanorama> {
    DepthPanorama::from_depth(load_depth_grid(path, format)?, max_depth)
}

pub fn read_pfm<R: BufRead>(mut r: R, path: &Path) -> Result<Grid<f64>> {
    let bad = |reason: &str| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let mut tokens = Vec::with_capacity(4);
    let mut cur = Vec::new();
    let mut byte = [0u8; 1];
    while tokens.len() < 4 {
        let n = r.read(&mut byte).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Err(bad("truncated header"));
        }
        if byte[0].is_ascii_whitespace() {
            if !cur.is_empty() {
                tokens.push(String::from_utf8(std::mem::take(&mut cur)).map_err(|_| bad("non-ASCII header"))?);
            }
        } else {
            cur.push(byte[0]);
            if cur.len() > 32 {
                return Err(bad("header token too long"));
            }
        }
    }
    match tokens[0].as_str() {
        "Pf" => {}
        "PF" => return Err(bad("color PFM; expected single-channel `Pf`")),
        _ => return Err(bad("missing `Pf` magic")),
    }
    let width: usize = tokens[1].parse().map_err(|_| bad("bad width"))?;
    let height: usize = tokens[2].parse().map_err(|_| bad("bad height"))?;
    let scale: f64 = tokens[3].parse().map_err(|_| bad("bad scale"))?;
    if width == 0 || height == 0 || scale == 0.0 || !scale.is_finite() {
        return Err(bad("zero dimension or scale"));
    }
    let little = scale < 0.0;
    let mut buf = vec![0u8; width * height * 4];
    r.read_exact(&mut buf).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: format!("pixel data: {e}"),
    })?;
    let data = buf
        .chunks_exact(4)
        .map(|c| {
            let b = [c[0], c[1], c[2], c[3]];
            f64::from(if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) })
        })
        .collect();
    Grid::from_vec(width, height, data)
}

/// Little-endian single-channel PFM. Values are narrowed to f32.
pub fn write_pfm<W: Write>(mut w: W, grid: &Grid<f64>) -> std::io::Result<()> {
    write!(w, "Pf\n{} {}\n-1.0\n", grid.width(), grid.height())?;
    let mut buf = Vec::with_capacity(grid.len() * 4);
    for &v in grid.as_slice() {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&buf)
}

pub fn save_pfm(path: &Path, grid: &Grid<f64>) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_pfm(&mut w, grid).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_png16(path: &Path, scale: f64) -> Result<Grid<f64>> {
    let img = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Decode {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    })?;
    let img = match img {
        image::DynamicImage::ImageLuma16(i) => i,
        other => {
            return Err(Error::Decode {
                path: path.to_path_buf(),
                reason: format!("expected 16-bit grayscale PNG, found {:?}", other.color()),
            })
        }
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(Grid::from_fn(w, h, |i, j| {
        let v = img.get_pixel(i as u32, (h - 1 - j) as u32)[0];
        if v == 0 {
            f64::NAN
        } else {
            f64::from(v) * scale
        }
    }))
}

/// Writes `round(depth / scale)` as a 16-bit PNG; invalid or out-of-range
/// values become 0.
pub fn save_png16(path: &Path, grid: &Grid<f64>, scale: f64) -> Result<()> {
    let (w, h) = grid.dims();
    let img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_fn(w as u32, h as u32, |x, y| {
        let d = grid[(x as usize, h - 1 - y as usize)];
        let q = (d / scale).round();
        image::Luma([if q.is_finite() && q >= 1.0 && q <= f64::from(u16::MAX) {
            q as u16
        } else {
            0
        }])
    });
    img.save(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn read_raw_f32(path: &Path, width: usize, height: usize) -> Result<Grid<f64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != width * height * 4 {
        return Err(Error::Decode {
            path: path.to_path_buf(),
            reason: format!("expected {} bytes for {width}x{height}, found {}", width * height * 4, bytes.len()),
        });
    }
    let vals: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(Grid::from_fn(width, height, |i, j| f64::from(vals[(height - 1 - j) * width + i])))
}

pub fn save_raw_f32(path: &Path, grid: &Grid<f64>) -> Result<()> {
    let (w, h) = grid.dims();
    let mut buf = Vec::with_capacity(w * h * 4);
    for j in (0..h).rev() {
        for &v in grid.row(j) {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Resolution {
    pub width: usize,
    pub height: usize,
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::InvalidArgument(format!("resolution `{s}` is not WxH")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("resolution `{s}` is not WxH")))
        };
        Ok(Resolution {
            width: parse(w)?,
            height: parse(h)?,
        })
    }
}

impl Serialize for Resolution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Resolution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatTag {
    Pfm,
    Png16,
    Raw,
}

/// One line of a JSON Lines manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub depth: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<FormatTag>,
    /// Meters per PNG unit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Resolution>,
}

impl SampleRecord {
    pub fn depth_format(&self) -> Result<DepthFormat> {
        match self.format {
            Some(FormatTag::Pfm) => Ok(DepthFormat::Pfm),
            Some(FormatTag::Png16) => self
                .scale
                .map(|scale| DepthFormat::Png16 { scale })
                .ok_or_else(|| Error::InvalidArgument(format!("sample `{}`: png16 needs `scale`", self.id))),
            Some(FormatTag::Raw) => self
                .resolution
                .map(|r| DepthFormat::RawF32 {
                    width: r.width,
                    height: r.height,
                })
                .ok_or_else(|| Error::InvalidArgument(format!("sample `{}`: raw needs `resolution`", self.id))),
            None => DepthFormat::from_path(&self.depth, self.scale, self.resolution),
        }
    }

    pub fn load(&self, max_depth: f64) -> Result<DepthPanorama> {
        load_depth(&self.depth, self.depth_format()?, max_depth)
    }

    pub fn load_grid(&self) -> Result<Grid<f64>> {
        load_depth_grid(&self.depth, self.depth_format()?)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleManifest {
    pub samples: Vec<SampleRecord>,
}

impl SampleManifest {
    pub fn new(samples: Vec<SampleRecord>) -> Self {
        SampleManifest { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Common resolution tag of all records, `None` if no record carries one.
    pub fn resolution(&self) -> Result<Option<Resolution>> {
        let mut tag: Option<Resolution> = None;
        for s in &self.samples {
            match (tag, s.resolution) {
                (Some(a), Some(b)) if a != b => {
                    return Err(Error::InvalidArgument(format!(
                        "manifest mixes resolutions {a} and {b}"
                    )))
                }
                (None, Some(b)) => tag = Some(b),
                _ => {}
            }
        }
        Ok(tag)
    }

    /// Parses JSON Lines. Relative paths are resolved against the manifest's
    /// directory; blank lines and `#` comments are skipped.
    pub fn read(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        let base = std::path::absolute(&base).unwrap_or(base);
        let mut samples = Vec::new();
        for (n, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut rec: SampleRecord = serde_json::from_str(trimmed).map_err(|e| Error::Manifest {
                path: path.to_path_buf(),
                line: n + 1,
                reason: e.to_string(),
            })?;
            if rec.id.is_empty() || rec.depth.as_os_str().is_empty() {
                return Err(Error::Manifest {
                    path: path.to_path_buf(),
                    line: n + 1,
                    reason: "empty `id` or `depth`".into(),
                });
            }
            rec.depth = base.join(&rec.depth);
            rec.color = rec.color.map(|c| base.join(c));
            samples.push(rec);
        }
        Ok(SampleManifest { samples })
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for s in &self.samples {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n").map_err(|e| Error::io("<manifest>", e))?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        self.write(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DroppedSample {
    pub id: String,
    pub reason: String,
    /// Invalid fraction when the file was readable.
    pub invalid_fraction: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FilterOutcome {
    pub kept: SampleManifest,
    pub dropped: Vec<DroppedSample>,
}

/// Keeps samples whose fraction of natively invalid pixels (non-finite or
/// non-positive, without range clipping) is at most `max_invalid`. Order is
/// preserved; unreadable samples are dropped and reported.
pub fn filter_split(manifest: &SampleManifest, max_invalid: f64) -> Result<FilterOutcome> {
    if !(0.0..=1.0).contains(&max_invalid) {
        return Err(Error::InvalidArgument(format!(
            "max invalid fraction {max_invalid} outside [0, 1]"
        )));
    }
    let verdicts: Vec<std::result::Result<f64, String>> = manifest
        .samples
        .par_iter()
        .map(|s| {
            s.load(f64::INFINITY)
                .map(|d| invalid_fraction(&d))
                .map_err(|e| e.to_string())
        })
        .collect();

    let mut out = FilterOutcome::default();
    for (s, v) in manifest.samples.iter().zip(verdicts) {
        match v {
            Ok(frac) if frac <= max_invalid => out.kept.samples.push(s.clone()),
            Ok(frac) => out.dropped.push(DroppedSample {
                id: s.id.clone(),
                reason: format!("invalid fraction {frac:.4} exceeds {max_invalid}"),
                invalid_fraction: Some(frac),
            }),
            Err(reason) => {
                log::warn!("dropping sample `{}`: {reason}", s.id);
                out.dropped.push(DroppedSample {
                    id: s.id.clone(),
                    reason,
                    invalid_fraction: None,
                })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pano(w: usize, h: usize, f: impl FnMut(usize, usize) -> f64) -> DepthPanorama {
        DepthPanorama::from_depth(Grid::from_fn(w, h, f), DEFAULT_MAX_DEPTH).unwrap()
    }

    #[test]
    fn masks_out_of_range() {
        let d = pano(4, 2, |i, _| match i {
            0 => 11.0,
            1 => 0.0,
            2 => f64::NAN,
            _ => 10.0,
        });
        assert_eq!(d.mask().row(0), &[false, false, false, true]);
    }

    #[test]
    fn invalid_fraction_counts() {
        assert_eq!(invalid_fraction(&pano(4, 2, |_, _| 1.0)), 0.0);
        assert_eq!(invalid_fraction(&pano(4, 2, |i, j| if i == 0 && j == 0 { -1.0 } else { 1.0 })), 0.125);
        assert_eq!(invalid_fraction(&pano(8, 4, |i, j| if (i + j) % 2 == 0 { 0.0 } else { 1.0 })), 0.5);
    }

    #[test]
    fn prediction_clamping() {
        let raw = Grid::from_vec(4, 2, vec![0.0, -1.0, 20.0, f64::NAN, 5.0, 1e-9, 10.0, f64::INFINITY]).unwrap();
        let p = DepthPanorama::from_prediction(raw, 10.0).unwrap();
        assert_eq!(p.depth().row(0)[..3], [PREDICTION_FLOOR, PREDICTION_FLOOR, 10.0]);
        assert_eq!(p.mask().row(0), &[true, true, true, false]);
        assert_eq!(p.mask().row(1), &[true, true, true, false]);
    }

    #[test]
    fn pfm_roundtrip_and_errors() {
        let g = Grid::from_fn(8, 4, |i, j| (i as f64 + 0.1) * (j as f64 - 1.7));
        let mut buf = Vec::new();
        write_pfm(&mut buf, &g).unwrap();
        let back = read_pfm(&buf[..], Path::new("x.pfm")).unwrap();
        for (a, b) in g.as_slice().iter().zip(back.as_slice()) {
            assert_eq!(*a as f32, *b as f32);
        }

        let mut be = b"Pf\n2 1\n1.0\n".to_vec();
        be.extend_from_slice(&2.5f32.to_be_bytes());
        be.extend_from_slice(&(-1.0f32).to_be_bytes());
        let g = read_pfm(&be[..], Path::new("be.pfm")).unwrap();
        assert_eq!(g.as_slice(), &[2.5, -1.0]);

        assert!(matches!(read_pfm(&b"P6\n2 1\n1.0\n"[..], Path::new("a")), Err(Error::MalformedHeader { .. })));
        assert!(matches!(read_pfm(&b"PF\n2 1\n1.0\n"[..], Path::new("a")), Err(Error::MalformedHeader { .. })));
        assert!(matches!(read_pfm(&b"Pf\n2 x\n1.0\n"[..], Path::new("a")), Err(Error::MalformedHeader { .. })));
        assert!(matches!(read_pfm(&b"Pf\n2 1\n-1.0\n\0\0"[..], Path::new("a")), Err(Error::Decode { .. })));
    }

    #[test]
    fn file_formats() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::from_fn(16, 8, |i, j| 0.5 + i as f64 * 0.25 + j as f64 * 0.125);

        let p = dir.path().join("a.pfm");
        save_pfm(&p, &g).unwrap();
        assert_eq!(load_depth(&p, DepthFormat::Pfm, 10.0).unwrap().depth(), &g);

        let p = dir.path().join("a.raw");
        save_raw_f32(&p, &g).unwrap();
        let back = load_depth_grid(&p, DepthFormat::RawF32 { width: 16, height: 8 }).unwrap();
        assert_eq!(back, g);
        assert!(matches!(
            load_depth_grid(&p, DepthFormat::RawF32 { width: 8, height: 4 }),
            Err(Error::Decode { .. })
        ));

        let p = dir.path().join("a.png");
        save_png16(&p, &g, 1.0 / 512.0).unwrap();
        let back = load_depth_grid(&p, DepthFormat::Png16 { scale: 1.0 / 512.0 }).unwrap();
        assert_eq!(back, g);

        let p = dir.path().join("wide.pfm");
        save_pfm(&p, &Grid::filled(6, 2, 1.0)).unwrap();
        assert!(matches!(load_depth(&p, DepthFormat::Pfm, 10.0), Err(Error::WrongAspect { .. })));

        assert!(matches!(
            load_depth(&dir.path().join("missing.pfm"), DepthFormat::Pfm, 10.0),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn png_scale_arithmetic() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.png");
        let img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_pixel(8, 4, image::Luma([1024]));
        img.save(&p).unwrap();
        let d = load_depth(&p, DepthFormat::Png16 { scale: 1.0 / 512.0 }, 10.0).unwrap();
        assert!(d.depth().as_slice().iter().all(|&v| v == 2.0));
        assert_eq!(d.valid_count(), 32);
    }

    #[test]
    fn resolution_parse() {
        let r: Resolution = "512x256".parse().unwrap();
        assert_eq!(r, Resolution { width: 512, height: 256 });
        assert_eq!(r.to_string(), "512x256");
        assert!("512".parse::<Resolution>().is_err());
    }

    #[test]
    fn manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let mpath = dir.path().join("m.jsonl");
        std::fs::write(
            &mpath,
            "{\"id\":\"a\",\"depth\":\"a.pfm\",\"split\":\"test\",\"resolution\":\"16x8\"}\n\n# comment\n{\"id\":\"b\",\"depth\":\"b.png\",\"scale\":0.001}\n",
        )
        .unwrap();
        let m = SampleManifest::read(&mpath).unwrap();
        assert_eq!(m.len(), 2);
        assert!(m.samples[0].depth.is_absolute());
        assert_eq!(m.resolution().unwrap(), Some(Resolution { width: 16, height: 8 }));
        assert_eq!(m.samples[1].depth_format().unwrap(), DepthFormat::Png16 { scale: 0.001 });

        let out = dir.path().join("o.jsonl");
        m.save(&out).unwrap();
        assert_eq!(SampleManifest::read(&out).unwrap(), m);

        std::fs::write(&mpath, "{\"id\":\"a\"}\n").unwrap();
        assert!(matches!(SampleManifest::read(&mpath), Err(Error::Manifest { line: 1, .. })));
    }

    #[test]
    fn empty_manifest_filters_to_empty() {
        let out = filter_split(&SampleManifest::default(), 0.1).unwrap();
        assert!(out.kept.is_empty() && out.dropped.is_empty());
    }

    proptest! {
        #[test]
        fn pfm_bits_preserved(vals in proptest::collection::vec(any::<f32>().prop_filter("nan payloads", |v| !v.is_nan()), 8)) {
            let g = Grid::from_vec(4, 2, vals.iter().map(|&v| f64::from(v)).collect()).unwrap();
            let mut buf = Vec::new();
            write_pfm(&mut buf, &g).unwrap();
            let back = read_pfm(&buf[..], Path::new("p")).unwrap();
            for (a, b) in vals.iter().zip(back.as_slice()) {
                prop_assert_eq!(a.to_bits(), (*b as f32).to_bits());
            }
        }

        #[test]
        fn in_range_values_are_valid(d in 1e-9f64..=10.0) {
            let p = DepthPanorama::from_depth(Grid::filled(4, 2, d), 10.0).unwrap();
            prop_assert_eq!(p.valid_count(), 8);
        }
    }
}
