//! Depth-discontinuity extraction and boundary-preservation metrics.
//!
//! All filters wrap horizontally across the panorama seam and clamp
//! vertically. Invalid pixels are filled with the nearest valid value of their
//! row before filtering, and detected edges are restricted to valid pixels.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io::{DepthPanorama, DEFAULT_MAX_DEPTH};

/// Sobel thresholds (meters per pixel) for precision/recall.
pub const GRADIENT_THRESHOLDS: [f64; 3] = [0.25, 0.5, 1.0];

pub const DEFAULT_DBE_TRUNCATION: f64 = 10.0;
pub const DEFAULT_EDGE_TOLERANCE: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CannyParams {
    /// Gaussian standard deviation in pixels.
    pub sigma: f64,
    /// Hysteresis thresholds on the gradient of depth normalized by the
    /// maximum depth.
    pub low: f64,
    pub high: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        CannyParams {
            sigma: 1.0,
            low: 0.05,
            high: 0.10,
        }
    }
}

impl CannyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !(0.0 < self.low && self.low < self.high && self.high < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "canny parameters need sigma > 0 and 0 < low < high < 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EdgeSource {
    Canny(CannyParams),
    GradientThreshold(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMap {
    edges: Grid<bool>,
    source: EdgeSource,
}

impl EdgeMap {
    pub fn new(edges: Grid<bool>, source: EdgeSource) -> Self {
        EdgeMap { edges, source }
    }

    pub fn edges(&self) -> &Grid<bool> {
        &self.edges
    }

    pub fn source(&self) -> EdgeSource {
        self.source
    }

    pub fn count(&self) -> usize {
        self.edges.count_true()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// 8-bit PNG, edges white, top row north.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let (w, h) = self.edges.dims();
        let img = image::GrayImage::from_fn(w as u32, h as u32, |x, y| {
            image::Luma([if self.edges[(x as usize, h - 1 - y as usize)] { 255 } else { 0 }])
        });
        img.save(path).map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}

/// Depth with invalid pixels replaced by the nearest valid value in the same
/// row (wrapping), and rows without any valid pixel copied from the nearest
/// row that has one. `None` if nothing is valid.
pub fn fill_invalid(d: &DepthPanorama) -> Option<Grid<f64>> {
    let (w, h) = d.dims();
    let mut out = d.depth().clone();
    let mut row_ok = vec![false; h];
    for j in 0..h {
        let valid: Vec<usize> = (0..w).filter(|&i| d.mask()[(i, j)]).collect();
        if valid.is_empty() {
            continue;
        }
        row_ok[j] = true;
        if valid.len() == w {
            continue;
        }
        // distance to the nearest valid column, searching both directions
        let mut best = vec![(usize::MAX, 0usize); w];
        for &i in &valid {
            best[i] = (0, i);
        }
        for _ in 0..2 {
            for step in 0..2 * w {
                let i = step % w;
                let prev = (i + w - 1) % w;
                if best[prev].0 != usize::MAX && best[prev].0 + 1 < best[i].0 {
                    best[i] = (best[prev].0 + 1, best[prev].1);
                }
            }
            for step in (0..2 * w).rev() {
                let i = step % w;
                let next = (i + 1) % w;
                if best[next].0 != usize::MAX && best[next].0 + 1 < best[i].0 {
                    best[i] = (best[next].0 + 1, best[next].1);
                }
            }
        }
        for i in 0..w {
            if !d.mask()[(i, j)] {
                out[(i, j)] = d.depth()[(best[i].1, j)];
            }
        }
    }
    if !row_ok.iter().any(|&b| b) {
        return None;
    }
    for j in 0..h {
        if row_ok[j] {
            continue;
        }
        let src = (0..h)
            .filter(|&k| row_ok[k])
            .min_by_key(|&k| (k as isize - j as isize).unsigned_abs())
            .unwrap();
        for i in 0..w {
            out[(i, j)] = out[(i, src)];
        }
    }
    Some(out)
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    let raw: Vec<f64> = (-r..=r)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Separable Gaussian blur, wrapped horizontally and clamped vertically.
pub fn gaussian_blur(src: &Grid<f64>, sigma: f64) -> Grid<f64> {
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let (w, h) = src.dims();
    // source index of tap `t` for output `i` is `cols[i + t]` / `rows[j + t]`
    let cols: Vec<usize> = (0..w + k.len()).map(|x| (x as isize - r).rem_euclid(w as isize) as usize).collect();
    let rows: Vec<usize> = (0..h + k.len()).map(|y| src.clamp_row(y as isize - r)).collect();
    let mut tmp = Grid::filled(w, h, 0.0);
    for j in 0..h {
        let row = src.row(j);
        for i in 0..w {
            let mut acc = 0.0;
            for (t, &kw) in k.iter().enumerate() {
                acc += kw * row[cols[i + t]];
            }
            tmp[(i, j)] = acc;
        }
    }
    let mut out = Grid::filled(w, h, 0.0);
    for j in 0..h {
        for i in 0..w {
            let mut acc = 0.0;
            for (t, &kw) in k.iter().enumerate() {
                acc += kw * tmp[(i, rows[j + t])];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Sobel derivatives in units per pixel: `(gx, gy)`. The horizontal kernel
/// divides by 8; vertically, clamped border rows divide by the actual row span
/// so a linear ramp yields its slope everywhere.
pub fn sobel(src: &Grid<f64>) -> (Grid<f64>, Grid<f64>) {
    let (w, h) = src.dims();
    let mut gx = Grid::filled(w, h, 0.0);
    let mut gy = Grid::filled(w, h, 0.0);
    for j in 0..h {
        let ju = src.clamp_row(j as isize - 1);
        let jd = src.clamp_row(j as isize + 1);
        let span = (jd - ju) as f64;
        for i in 0..w {
            let il = (i + w - 1) % w;
            let ir = (i + 1) % w;
            let x = (src[(ir, ju)] + 2.0 * src[(ir, j)] + src[(ir, jd)])
                - (src[(il, ju)] + 2.0 * src[(il, j)] + src[(il, jd)]);
            gx[(i, j)] = x / 8.0;
            if span > 0.0 {
                let y = (src[(il, jd)] + 2.0 * src[(i, jd)] + src[(ir, jd)])
                    - (src[(il, ju)] + 2.0 * src[(i, ju)] + src[(ir, ju)]);
                gy[(i, j)] = y / (4.0 * span);
            }
        }
    }
    (gx, gy)
}

fn magnitude(gx: &Grid<f64>, gy: &Grid<f64>) -> Grid<f64> {
    let data = gx
        .as_slice()
        .iter()
        .zip(gy.as_slice())
        .map(|(x, y)| x.hypot(*y))
        .collect();
    Grid::from_vec(gx.width(), gx.height(), data).expect("same dims")
}

/// Neighbor offset `(di, dj)` along the quantized gradient direction.
fn nms_offset(gx: f64, gy: f64) -> (isize, isize) {
    let mut a = gy.atan2(gx).to_degrees();
    if a < 0.0 {
        a += 180.0;
    }
    if !(22.5..157.5).contains(&a) {
        (1, 0)
    } else if a < 67.5 {
        (1, 1)
    } else if a < 112.5 {
        (0, 1)
    } else {
        (-1, 1)
    }
}

pub fn canny_edges(d: &DepthPanorama, params: &CannyParams, max_depth: f64) -> Result<EdgeMap> {
    params.validate()?;
    if !(max_depth > 0.0) {
        return Err(Error::InvalidArgument(format!("max depth {max_depth} must be positive")));
    }
    let (w, h) = d.dims();
    let source = EdgeSource::Canny(*params);
    let Some(filled) = fill_invalid(d) else {
        return Ok(EdgeMap::new(Grid::filled(w, h, false), source));
    };
    let normalized = filled.map(|v| v / max_depth);
    let smooth = gaussian_blur(&normalized, params.sigma);
    let (gx, gy) = sobel(&smooth);
    let mag = magnitude(&gx, &gy);

    let at = |i: isize, j: isize| -> f64 {
        if j < 0 || j >= h as isize {
            0.0
        } else {
            mag[(i.rem_euclid(w as isize) as usize, j as usize)]
        }
    };
    let mut thin = Grid::filled(w, h, false);
    for j in 0..h {
        for i in 0..w {
            let m = mag[(i, j)];
            // hysteresis never accepts these, so suppression is moot
            if m <= 0.0 || m < params.low {
                continue;
            }
            let (di, dj) = nms_offset(gx[(i, j)], gy[(i, j)]);
            let (ii, jj) = (i as isize, j as isize);
            let prev = at(ii - di, jj - dj);
            let next = at(ii + di, jj + dj);
            thin[(i, j)] = m > prev && m >= next;
        }
    }

    let mut out = Grid::filled(w, h, false);
    let mut queue = VecDeque::new();
    for j in 0..h {
        for i in 0..w {
            if thin[(i, j)] && mag[(i, j)] >= params.high {
                out[(i, j)] = true;
                queue.push_back((i, j));
            }
        }
    }
    while let Some((i, j)) = queue.pop_front() {
        for dj in -1isize..=1 {
            let y = j as isize + dj;
            if y < 0 || y >= h as isize {
                continue;
            }
            for di in -1isize..=1 {
                let x = (i as isize + di).rem_euclid(w as isize) as usize;
                let y = y as usize;
                if !out[(x, y)] && thin[(x, y)] && mag[(x, y)] >= params.low {
                    out[(x, y)] = true;
                    queue.push_back((x, y));
                }
            }
        }
    }
    let edges = out.and(d.mask())?;
    Ok(EdgeMap::new(edges, source))
}

/// Edge wherever the Sobel gradient magnitude of depth exceeds `t` meters
/// per pixel.
pub fn gradient_threshold_edges(d: &DepthPanorama, t: f64) -> Result<EdgeMap> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("gradient threshold {t} must be positive")));
    }
    Ok(gradient_edges_multi(d, &[t])?.pop().expect("one threshold"))
}

/// One Sobel pass shared across several thresholds.
pub fn gradient_edges_multi(d: &DepthPanorama, thresholds: &[f64]) -> Result<Vec<EdgeMap>> {
    let (w, h) = d.dims();
    let Some(filled) = fill_invalid(d) else {
        return Ok(thresholds
            .iter()
            .map(|&t| EdgeMap::new(Grid::filled(w, h, false), EdgeSource::GradientThreshold(t)))
            .collect());
    };
    let (gx, gy) = sobel(&filled);
    let mag = magnitude(&gx, &gy);
    Ok(thresholds
        .iter()
        .map(|&t| {
            let edges = Grid::from_fn(w, h, |i, j| d.mask()[(i, j)] && mag[(i, j)] > t);
            EdgeMap::new(edges, EdgeSource::GradientThreshold(t))
        })
        .collect())
}

/// Exact Euclidean distance (pixels) to the nearest `true` pixel, wrapping
/// horizontally. Infinite everywhere when there are no edges.
pub fn distance_transform(edges: &Grid<bool>) -> Grid<f64> {
    distance_transform_sq(edges).map(|&d| if d == i64::MAX { f64::INFINITY } else { (d as f64).sqrt() })
}

/// Squared distances; `i64::MAX` marks "no edge".
pub fn distance_transform_sq(edges: &Grid<bool>) -> Grid<i64> {
    let (w, h) = edges.dims();
    const NONE: i64 = i64::MAX;

    // vertical pass: distance to the nearest edge in the same column
    let mut col = Grid::filled(w, h, NONE);
    for i in 0..w {
        let mut last: Option<usize> = None;
        for j in 0..h {
            if edges[(i, j)] {
                last = Some(j);
            }
            if let Some(l) = last {
                col[(i, j)] = (j - l) as i64;
            }
        }
        let mut last: Option<usize> = None;
        for j in (0..h).rev() {
            if edges[(i, j)] {
                last = Some(j);
            }
            if let Some(l) = last {
                let d = (l - j) as i64;
                if d < col[(i, j)] {
                    col[(i, j)] = d;
                }
            }
        }
    }

    // horizontal pass: lower envelope of parabolas over the row tiled three
    // times, which covers every wrapped offset
    let mut out = Grid::filled(w, h, NONE);
    let mut sites: Vec<i64> = Vec::with_capacity(3 * w);
    let mut vals: Vec<i64> = Vec::with_capacity(3 * w);
    let mut v: Vec<usize> = Vec::with_capacity(3 * w);
    let mut z: Vec<f64> = Vec::with_capacity(3 * w + 1);
    for j in 0..h {
        sites.clear();
        vals.clear();
        for tile in 0..3i64 {
            for i in 0..w {
                let c = col[(i, j)];
                if c != NONE {
                    sites.push(i as i64 + (tile - 1) * w as i64);
                    vals.push(c * c);
                }
            }
        }
        if sites.is_empty() {
            continue;
        }
        v.clear();
        z.clear();
        v.push(0);
        z.push(f64::NEG_INFINITY);
        z.push(f64::INFINITY);
        let key = |k: usize| (vals[k] + sites[k] * sites[k]) as f64;
        for q in 1..sites.len() {
            loop {
                let p = *v.last().unwrap();
                let s = (key(q) - key(p)) / (2 * (sites[q] - sites[p])) as f64;
                if s <= z[v.len() - 1] {
                    v.pop();
                    z.pop();
                    if v.is_empty() {
                        break;
                    }
                } else {
                    *z.last_mut().unwrap() = s;
                    break;
                }
            }
            if v.is_empty() {
                v.push(q);
                z.clear();
                z.push(f64::NEG_INFINITY);
                z.push(f64::INFINITY);
            } else {
                v.push(q);
                z.push(f64::INFINITY);
            }
        }
        let mut k = 0;
        for x in 0..w {
            let xf = x as f64;
            while z[k + 1] < xf {
                k += 1;
            }
            let s = v[k];
            let dx = x as i64 - sites[s];
            out[(x, j)] = dx * dx + vals[s];
        }
    }
    out
}

/// Truncated boundary errors `(acc, comp)` from precomputed distance maps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DbeAccumulator {
    acc_sum: f64,
    acc_count: u64,
    comp_sum: f64,
    comp_count: u64,
}

impl DbeAccumulator {
    pub fn add(
        &mut self,
        pred: &Grid<bool>,
        gt: &Grid<bool>,
        dt_pred: &Grid<f64>,
        dt_gt: &Grid<f64>,
        trunc: f64,
    ) {
        for k in 0..pred.len() {
            if pred.as_slice()[k] {
                self.acc_sum += dt_gt.as_slice()[k].min(trunc);
                self.acc_count += 1;
            }
            if gt.as_slice()[k] {
                self.comp_sum += dt_pred.as_slice()[k].min(trunc);
                self.comp_count += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &DbeAccumulator) {
        self.acc_sum += other.acc_sum;
        self.acc_count += other.acc_count;
        self.comp_sum += other.comp_sum;
        self.comp_count += other.comp_count;
    }

    /// `(acc, comp)`; a side without edge pixels reports `trunc`.
    pub fn value(&self, trunc: f64) -> (f64, f64) {
        let mean = |s: f64, n: u64| if n == 0 { trunc } else { s / n as f64 };
        (mean(self.acc_sum, self.acc_count), mean(self.comp_sum, self.comp_count))
    }
}

/// Depth boundary errors: `acc` averages the truncated distance from each
/// predicted edge pixel to the ground-truth edges, `comp` the reverse.
pub fn dbe(pred: &EdgeMap, gt: &EdgeMap, trunc: f64) -> Result<(f64, f64)> {
    pred.edges.same_dims(&gt.edges)?;
    if !(trunc > 0.0) {
        return Err(Error::InvalidArgument(format!("truncation {trunc} must be positive")));
    }
    let dt_pred = distance_transform(&pred.edges);
    let dt_gt = distance_transform(&gt.edges);
    let mut acc = DbeAccumulator::default();
    acc.add(&pred.edges, &gt.edges, &dt_pred, &dt_gt, trunc);
    Ok(acc.value(trunc))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Both edge maps were empty.
    pub degenerate: bool,
}

pub fn f1_score(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Matched edge counts for pooled precision/recall.
/// Above this matching tolerance (pixels), distance maps beat scanning.
const MAX_SCAN_TOLERANCE: f64 = 4.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeMatchCounts {
    pub pred_total: u64,
    pub pred_matched: u64,
    pub gt_total: u64,
    pub gt_matched: u64,
}

impl EdgeMatchCounts {
    pub fn add(&mut self, pred: &Grid<bool>, gt: &Grid<bool>, dt_pred: &Grid<f64>, dt_gt: &Grid<f64>, tol: f64) {
        for k in 0..pred.len() {
            if pred.as_slice()[k] {
                self.pred_total += 1;
                if dt_gt.as_slice()[k] <= tol {
                    self.pred_matched += 1;
                }
            }
            if gt.as_slice()[k] {
                self.gt_total += 1;
                if dt_pred.as_slice()[k] <= tol {
                    self.gt_matched += 1;
                }
            }
        }
    }

    /// Same counts as [`EdgeMatchCounts::add`] with the distance maps
    /// computed internally. Small tolerances scan the disc of offsets around
    /// each edge pixel instead.
    pub fn add_edges(&mut self, pred: &Grid<bool>, gt: &Grid<bool>, tol: f64) {
        if tol > MAX_SCAN_TOLERANCE {
            let (dp, dg) = (distance_transform(pred), distance_transform(gt));
            self.add(pred, gt, &dp, &dg, tol);
            return;
        }
        let (w, h) = pred.dims();
        let r = tol.floor() as isize;
        let offsets: Vec<(isize, isize)> = (-r..=r)
            .flat_map(|dj| (-r..=r).map(move |di| (di, dj)))
            .filter(|&(di, dj)| ((di * di + dj * dj) as f64).sqrt() <= tol)
            .collect();
        let near = |map: &Grid<bool>, i: usize, j: usize| {
            offsets.iter().any(|&(di, dj)| {
                let y = j as isize + dj;
                y >= 0 && y < h as isize && map[(map.wrap_col(i as isize + di), y as usize)]
            })
        };
        for j in 0..h {
            for i in 0..w {
                if pred[(i, j)] {
                    self.pred_total += 1;
                    self.pred_matched += near(gt, i, j) as u64;
                }
                if gt[(i, j)] {
                    self.gt_total += 1;
                    self.gt_matched += near(pred, i, j) as u64;
                }
            }
        }
    }

    pub fn merge(&mut self, o: &EdgeMatchCounts) {
        self.pred_total += o.pred_total;
        self.pred_matched += o.pred_matched;
        self.gt_total += o.gt_total;
        self.gt_matched += o.gt_matched;
    }

    pub fn value(&self) -> PrecisionRecall {
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(self.pred_matched, self.pred_total);
        let recall = ratio(self.gt_matched, self.gt_total);
        PrecisionRecall {
            precision,
            recall,
            f1: f1_score(precision, recall),
            degenerate: self.pred_total == 0 && self.gt_total == 0,
        }
    }
}

/// Precision: predicted edge pixels within `tol` pixels of a ground-truth
/// edge. Recall: the reverse.
pub fn edge_precision_recall(pred: &EdgeMap, gt: &EdgeMap, tol: f64) -> Result<PrecisionRecall> {
    pred.edges.same_dims(&gt.edges)?;
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("match tolerance {tol} must be non-negative")));
    }
    let dt_pred = distance_transform(&pred.edges);
    let dt_gt = distance_transform(&gt.edges);
    let mut c = EdgeMatchCounts::default();
    c.add(&pred.edges, &gt.edges, &dt_pred, &dt_gt, tol);
    Ok(c.value())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryParams {
    pub canny: CannyParams,
    pub max_depth: f64,
    pub dbe_truncation: f64,
    pub edge_tolerance: f64,
}

impl Default for BoundaryParams {
    fn default() -> Self {
        BoundaryParams {
            canny: CannyParams::default(),
            max_depth: DEFAULT_MAX_DEPTH,
            dbe_truncation: DEFAULT_DBE_TRUNCATION,
            edge_tolerance: DEFAULT_EDGE_TOLERANCE,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub dbe_acc: f64,
    pub dbe_comp: f64,
    /// Indexed like [`GRADIENT_THRESHOLDS`].
    pub precision: [f64; 3],
    pub recall: [f64; 3],
    pub f1: [f64; 3],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryAccumulator {
    pub dbe: DbeAccumulator,
    pub matches: [EdgeMatchCounts; 3],
}

impl BoundaryAccumulator {
    /// Canny edges for the boundary errors, gradient-threshold edges for
    /// precision/recall, both maps restricted to their own masks.
    pub fn add_pair(&mut self, pred: &DepthPanorama, gt: &DepthPanorama, params: &BoundaryParams) -> Result<()> {
        if pred.dims() != gt.dims() {
            return Err(Error::dims(gt.dims(), pred.dims()));
        }
        let cp = canny_edges(pred, &params.canny, params.max_depth)?;
        let cg = canny_edges(gt, &params.canny, params.max_depth)?;
        let dp = distance_transform(cp.edges());
        let dg = distance_transform(cg.edges());
        self.dbe.add(cp.edges(), cg.edges(), &dp, &dg, params.dbe_truncation);

        let ep = gradient_edges_multi(pred, &GRADIENT_THRESHOLDS)?;
        let eg = gradient_edges_multi(gt, &GRADIENT_THRESHOLDS)?;
        for k in 0..GRADIENT_THRESHOLDS.len() {
            self.matches[k].add_edges(ep[k].edges(), eg[k].edges(), params.edge_tolerance);
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &BoundaryAccumulator) {
        self.dbe.merge(&other.dbe);
        for (a, b) in self.matches.iter_mut().zip(&other.matches) {
            a.merge(b);
        }
    }

    pub fn report(&self, params: &BoundaryParams) -> BoundaryReport {
        let (dbe_acc, dbe_comp) = self.dbe.value(params.dbe_truncation);
        let pr = self.matches.map(|m| m.value());
        BoundaryReport {
            dbe_acc,
            dbe_comp,
            precision: pr.map(|x| x.precision),
            recall: pr.map(|x| x.recall),
            f1: pr.map(|x| x.f1),
        }
    }
}
