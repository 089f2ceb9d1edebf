//! Direct depth errors and threshold accuracies.
//!
//! With `e = p − g` over the joint valid mask:
//! `RMSE = sqrt(mean e²)`, `RMSLE = sqrt(mean (ln p − ln g)²)`,
//! `AbsRel = mean |e|/g`, `SqRel = mean e²/g`, and `δ_t` is the fraction of
//! pixels with `max(p/g, g/p) < t`. Weighted variants replace every mean with
//! `Σ wᵢxᵢ / Σ wᵢ` over the valid pixels.

use serde::{Deserialize, Serialize};

use crate::accum::CompensatedSum;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::icosphere::{self, IcoSphere, VertexSampling};
use crate::io::DepthPanorama;
use crate::sphere::WeightGrid;

/// `δ` thresholds reported everywhere: 1.05, 1.1, 1.25, 1.25², 1.25³.
pub const DELTA_THRESHOLDS: [f64; 5] = [1.05, 1.1, 1.25, 1.25 * 1.25, 1.25 * 1.25 * 1.25];

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DirectErrors {
    pub rmse: f64,
    pub rmsle: f64,
    pub abs_rel: f64,
    pub sq_rel: f64,
}

/// Ratio test used by every `δ` accuracy; strict `<`.
#[inline]
pub fn within_ratio(p: f64, g: f64, t: f64) -> bool {
    (p / g).max(g / p) < t
}

/// Pooled sums for the direct metrics. Merging is order-insensitive up to
/// compensated-summation rounding.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DirectAccumulator {
    pixels: u64,
    weight: CompensatedSum,
    sq: CompensatedSum,
    log_sq: CompensatedSum,
    abs_rel: CompensatedSum,
    sq_rel: CompensatedSum,
    delta: [CompensatedSum; 5],
}

impl DirectAccumulator {
    #[inline]
    pub fn add(&mut self, p: f64, g: f64, w: f64) {
        let e = p - g;
        let le = p.ln() - g.ln();
        self.pixels += 1;
        self.weight.add(w);
        self.sq.add(w * e * e);
        self.log_sq.add(w * le * le);
        self.abs_rel.add(w * e.abs() / g);
        self.sq_rel.add(w * e * e / g);
        let ratio = (p / g).max(g / p);
        for (acc, &t) in self.delta.iter_mut().zip(&DELTA_THRESHOLDS) {
            if ratio < t {
                acc.add(w);
            }
        }
    }

    /// Adds every jointly valid pixel of a pair.
    pub fn add_pair(&mut self, pred: &DepthPanorama, gt: &DepthPanorama, weights: Option<&WeightGrid>) -> Result<()> {
        check_pair(pred, gt, weights)?;
        let (w, h) = gt.dims();
        let (pd, gd) = (pred.depth(), gt.depth());
        let (pm, gm) = (pred.mask(), gt.mask());
        for j in 0..h {
            let wt = weights.map_or(1.0, |wg| wg.weight(0, j));
            for i in 0..w {
                if gm[(i, j)] && pm[(i, j)] {
                    self.add(pd[(i, j)], gd[(i, j)], wt);
                }
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &DirectAccumulator) {
        self.pixels += other.pixels;
        self.weight.merge(&other.weight);
        self.sq.merge(&other.sq);
        self.log_sq.merge(&other.log_sq);
        self.abs_rel.merge(&other.abs_rel);
        self.sq_rel.merge(&other.sq_rel);
        for (a, b) in self.delta.iter_mut().zip(&other.delta) {
            a.merge(b);
        }
    }

    pub fn pixels(&self) -> u64 {
        self.pixels
    }

    pub fn errors(&self) -> Option<DirectErrors> {
        let w = self.weight.value();
        (self.pixels > 0 && w > 0.0).then(|| DirectErrors {
            rmse: (self.sq.value() / w).sqrt(),
            rmsle: (self.log_sq.value() / w).sqrt(),
            abs_rel: self.abs_rel.value() / w,
            sq_rel: self.sq_rel.value() / w,
        })
    }

    /// `δ` fractions for [`DELTA_THRESHOLDS`].
    pub fn deltas(&self) -> Option<[f64; 5]> {
        let w = self.weight.value();
        (self.pixels > 0 && w > 0.0).then(|| self.delta.map(|d| (d.value() / w).min(1.0)))
    }
}

fn check_pair(pred: &DepthPanorama, gt: &DepthPanorama, weights: Option<&WeightGrid>) -> Result<()> {
    if pred.dims() != gt.dims() {
        return Err(Error::dims(gt.dims(), pred.dims()));
    }
    if let Some(wg) = weights {
        if (wg.width(), wg.height()) != gt.dims() {
            return Err(Error::dims(gt.dims(), (wg.width(), wg.height())));
        }
    }
    Ok(())
}

/// RMSE, RMSLE, AbsRel and SqRel over pixels valid in both maps; weighted
/// when a weight grid is given.
pub fn direct_errors(pred: &DepthPanorama, gt: &DepthPanorama, weights: Option<&WeightGrid>) -> Result<DirectErrors> {
    let mut acc = DirectAccumulator::default();
    acc.add_pair(pred, gt, weights)?;
    acc.errors().ok_or(Error::EmptyMask("joint prediction/ground-truth mask"))
}

/// Fraction of jointly valid pixels with `max(p/g, g/p) < t`.
pub fn delta_accuracy(pred: &DepthPanorama, gt: &DepthPanorama, t: f64, weights: Option<&WeightGrid>) -> Result<f64> {
    if !(t > 1.0) {
        return Err(Error::InvalidArgument(format!("delta threshold {t} must exceed 1")));
    }
    check_pair(pred, gt, weights)?;
    let (w, h) = gt.dims();
    let mut total = CompensatedSum::default();
    let mut hits = CompensatedSum::default();
    for j in 0..h {
        let wt = weights.map_or(1.0, |wg| wg.weight(0, j));
        for i in 0..w {
            if gt.mask()[(i, j)] && pred.mask()[(i, j)] {
                total.add(wt);
                if within_ratio(pred.depth()[(i, j)], gt.depth()[(i, j)], t) {
                    hits.add(wt);
                }
            }
        }
    }
    if total.value() <= 0.0 {
        return Err(Error::EmptyMask("joint prediction/ground-truth mask"));
    }
    Ok((hits.value() / total.value()).min(1.0))
}

/// Vertex hit counts for the icosahedral `δ` accuracies.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IcoAccumulator {
    vertices: u64,
    hits: [u64; 5],
}

impl IcoAccumulator {
    pub fn add(&mut self, p: f64, g: f64) {
        self.vertices += 1;
        let ratio = (p / g).max(g / p);
        for (h, &t) in self.hits.iter_mut().zip(&DELTA_THRESHOLDS) {
            if ratio < t {
                *h += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &IcoAccumulator) {
        self.vertices += other.vertices;
        for (a, b) in self.hits.iter_mut().zip(&other.hits) {
            *a += b;
        }
    }

    pub fn vertices(&self) -> u64 {
        self.vertices
    }

    pub fn deltas(&self) -> Option<[f64; 5]> {
        (self.vertices > 0).then(|| self.hits.map(|h| h as f64 / self.vertices as f64))
    }
}

/// Projected vertex pixels of an icosphere for one grid size, reused across
/// samples of the same resolution.
#[derive(Clone, Debug)]
pub struct IcoSampler {
    order: u32,
    dims: (usize, usize),
    pixels: Vec<(usize, usize)>,
}

impl IcoSampler {
    pub fn new(sphere: &IcoSphere, width: usize, height: usize) -> Self {
        IcoSampler {
            order: sphere.order(),
            dims: (width, height),
            pixels: sphere.pixel_indices(width, height),
        }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn accumulate(&self, pred: &DepthPanorama, gt: &DepthPanorama, acc: &mut IcoAccumulator) -> Result<()> {
        if pred.dims() != self.dims || gt.dims() != self.dims {
            return Err(Error::dims(self.dims, gt.dims()));
        }
        for &(i, j) in &self.pixels {
            if gt.mask()[(i, j)] && pred.mask()[(i, j)] {
                acc.add(pred.depth()[(i, j)], gt.depth()[(i, j)]);
            }
        }
        Ok(())
    }
}

fn ico_samples(
    pred: &DepthPanorama,
    gt: &DepthPanorama,
    sphere: &IcoSphere,
) -> Result<Vec<(f64, f64)>> {
    if pred.dims() != gt.dims() {
        return Err(Error::dims(gt.dims(), pred.dims()));
    }
    let ps = icosphere::sample_at_vertices(pred.depth(), Some(pred.mask()), sphere, VertexSampling::Nearest);
    let gs = icosphere::sample_at_vertices(gt.depth(), Some(gt.mask()), sphere, VertexSampling::Nearest);
    let pairs: Vec<(f64, f64)> = ps
        .into_iter()
        .zip(gs)
        .filter_map(|(p, g)| Some((p?, g?)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::EmptyMask("every icosphere vertex is invalid"));
    }
    Ok(pairs)
}

/// Unweighted `δ_t` over the projected icosphere vertices valid in both maps.
pub fn ico_delta_accuracy(pred: &DepthPanorama, gt: &DepthPanorama, sphere: &IcoSphere, t: f64) -> Result<f64> {
    if !(t > 1.0) {
        return Err(Error::InvalidArgument(format!("delta threshold {t} must exceed 1")));
    }
    let pairs = ico_samples(pred, gt, sphere)?;
    let hits = pairs.iter().filter(|&&(p, g)| within_ratio(p, g, t)).count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Invalid-aware view used by tests and callers that build masks by hand.
pub fn joint_mask(pred: &DepthPanorama, gt: &DepthPanorama) -> Result<Grid<bool>> {
    gt.mask().and(pred.mask())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build_icosphere;
    use crate::sphere::spherical_weights;
    use proptest::prelude::*;

    fn pano(w: usize, h: usize, vals: &[f64]) -> DepthPanorama {
        DepthPanorama::from_depth(Grid::from_vec(w, h, vals.to_vec()).unwrap(), f64::INFINITY).unwrap()
    }

    fn random_pano(seed: u64, scale: f64) -> DepthPanorama {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DepthPanorama::from_depth(Grid::from_fn(16, 8, |_, _| rng.gen_range(0.5..8.0) * scale), f64::INFINITY).unwrap()
    }

    #[test]
    fn identity() {
        let g = random_pano(1, 1.0);
        let e = direct_errors(&g, &g, None).unwrap();
        assert_eq!(e, DirectErrors::default());
        for t in DELTA_THRESHOLDS {
            assert_eq!(delta_accuracy(&g, &g, t, None).unwrap(), 1.0);
        }
    }

    #[test]
    fn two_pixel_example() {
        // gt = [1, 3], pred = [2, 1]; the grid needs 2:1 so pad with masked pixels
        let gt = DepthPanorama::new(
            Grid::from_vec(4, 2, vec![1.0, 3.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]).unwrap(),
            Grid::from_vec(4, 2, vec![true, true, false, false, false, false, false, false]).unwrap(),
        )
        .unwrap();
        let pred = pano(4, 2, &[2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let e = direct_errors(&pred, &gt, None).unwrap();
        assert!((e.rmse - 2.5f64.sqrt()).abs() < 1e-15);
        assert!((e.abs_rel - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert!((e.sq_rel - (1.0 + 4.0 / 3.0) / 2.0).abs() < 1e-15);
        let rmsle = (((2f64.ln()).powi(2) + (3f64.ln()).powi(2)) / 2.0).sqrt();
        assert!((e.rmsle - rmsle).abs() < 1e-15);
    }

    #[test]
    fn uniform_ratio() {
        let g = random_pano(2, 1.0);
        let p = g.scaled(1.2);
        assert_eq!(delta_accuracy(&p, &g, 1.1, None).unwrap(), 0.0);
        assert_eq!(delta_accuracy(&p, &g, 1.25, None).unwrap(), 1.0);
    }

    #[test]
    fn errors_and_bad_threshold() {
        let g = random_pano(3, 1.0);
        assert!(delta_accuracy(&g, &g, 1.0, None).is_err());
        let empty = DepthPanorama::new(g.depth().clone(), Grid::filled(16, 8, false)).unwrap();
        assert!(matches!(direct_errors(&g, &empty, None), Err(Error::EmptyMask(_))));
        let small = DepthPanorama::from_depth(Grid::filled(8, 4, 1.0), 10.0).unwrap();
        assert!(matches!(direct_errors(&small, &g, None), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn weighted_equals_plain_on_two_rows() {
        let (g, p) = {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
            let g = DepthPanorama::from_depth(Grid::from_fn(4, 2, |_, _| rng.gen_range(1.0..5.0)), 10.0).unwrap();
            let p = DepthPanorama::from_depth(Grid::from_fn(4, 2, |_, _| rng.gen_range(1.0..5.0)), 10.0).unwrap();
            (g, p)
        };
        let wg = spherical_weights(4, 2);
        let a = direct_errors(&p, &g, None).unwrap();
        let b = direct_errors(&p, &g, Some(&wg)).unwrap();
        assert!((a.rmse - b.rmse).abs() < 1e-12);
        assert!((a.abs_rel - b.abs_rel).abs() < 1e-12);
    }

    #[test]
    fn ico_constant_ratio() {
        let s = build_icosphere(2).unwrap();
        let g = DepthPanorama::from_depth(Grid::filled(32, 16, 2.0), 10.0).unwrap();
        let p = DepthPanorama::from_depth(Grid::filled(32, 16, 2.6), 10.0).unwrap();
        assert_eq!(ico_delta_accuracy(&p, &g, &s, 1.25).unwrap(), 0.0);
        assert_eq!(ico_delta_accuracy(&p, &g, &s, 1.25 * 1.25).unwrap(), 1.0);
        assert_eq!(ico_delta_accuracy(&g, &g, &s, 1.05).unwrap(), 1.0);
    }

    #[test]
    fn ico_half_fixture() {
        let s = build_icosphere(0).unwrap();
        let (w, h) = (64, 32);
        let pix = s.pixel_indices(w, h);
        let g = DepthPanorama::from_depth(Grid::filled(w, h, 2.0), 10.0).unwrap();
        let mut pd = Grid::filled(w, h, 2.0);
        for &(i, j) in pix.iter().take(6) {
            pd[(i, j)] = 3.0;
        }
        let p = DepthPanorama::from_depth(pd, 10.0).unwrap();
        assert_eq!(ico_delta_accuracy(&p, &g, &s, 1.25).unwrap(), 0.5);

        let sampler = IcoSampler::new(&s, w, h);
        let mut acc = IcoAccumulator::default();
        sampler.accumulate(&p, &g, &mut acc).unwrap();
        assert_eq!(acc.deltas().unwrap()[2], 0.5);
    }

    #[test]
    fn ico_all_invalid() {
        let s = build_icosphere(0).unwrap();
        let g = DepthPanorama::new(Grid::filled(8, 4, 1.0), Grid::filled(8, 4, false)).unwrap();
        assert!(ico_delta_accuracy(&g, &g, &s, 1.25).is_err());
    }

    proptest! {
        #[test]
        fn delta_monotone(seed in 0u64..500) {
            let g = random_pano(seed, 1.0);
            let p = random_pano(seed + 10_000, 1.0);
            let mut acc = DirectAccumulator::default();
            acc.add_pair(&p, &g, None).unwrap();
            let d = acc.deltas().unwrap();
            for k in 1..5 {
                prop_assert!(d[k] >= d[k - 1]);
            }
        }

        #[test]
        fn joint_scaling(seed in 0u64..500, c in 0.1f64..10.0) {
            let g = random_pano(seed, 1.0);
            let p = random_pano(seed + 7, 1.0);
            let a = direct_errors(&p, &g, None).unwrap();
            let b = direct_errors(&p.scaled(c), &g.scaled(c), None).unwrap();
            prop_assert!((a.abs_rel - b.abs_rel).abs() < 1e-12);
            prop_assert!((a.rmsle - b.rmsle).abs() < 1e-12);
            prop_assert!((b.rmse - c * a.rmse).abs() < 1e-12 * c.max(1.0));
        }

        #[test]
        fn uniform_weights_equal_plain(seed in 0u64..200) {
            let g = random_pano(seed, 1.0);
            let p = random_pano(seed + 3, 1.0);
            let wg = WeightGrid::uniform(16, 8);
            let a = direct_errors(&p, &g, None).unwrap();
            let b = direct_errors(&p, &g, Some(&wg)).unwrap();
            prop_assert!((a.rmse - b.rmse).abs() < 1e-12);
            prop_assert!((a.sq_rel - b.sq_rel).abs() < 1e-12);
            let t = 1.25;
            prop_assert!((delta_accuracy(&p, &g, t, None).unwrap() - delta_accuracy(&p, &g, t, Some(&wg)).unwrap()).abs() < 1e-12);
        }
    }
}
