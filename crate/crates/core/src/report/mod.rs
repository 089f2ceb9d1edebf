//! Dataset-level evaluation: per-sample accumulation, pooled or per-sample
//! aggregation, performance indicators and best-three ranking tables.

mod indicators;
mod rank;

pub use indicators::{indicator, indicators, Indicators};
pub use rank::{rank_models, ColumnSpec, Direction, RankTable};

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryAccumulator, BoundaryParams, BoundaryReport};
use crate::direct::{DirectAccumulator, DirectErrors, IcoAccumulator, IcoSampler};
use crate::error::{Error, Result};
use crate::geom::{self, C2cAccumulator, GeometricReport, HausdorffOptions, KdTree, SmoothnessAccumulator, SmoothnessReport};
use crate::icosphere::build_icosphere;
use crate::io::{DepthPanorama, Resolution, SampleManifest, DEFAULT_MAX_DEPTH};
use crate::sphere::{spherical_weights, WeightGrid};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Sums pooled over every valid pixel of every sample.
    #[default]
    Pooled,
    /// Unweighted mean of per-sample metric values.
    PerSampleMean,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IcoReport {
    pub order: u32,
    pub delta: [f64; 5],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectDepthReport {
    #[serde(flatten)]
    pub errors: DirectErrors,
    /// Indexed like [`crate::direct::DELTA_THRESHOLDS`].
    pub delta: [f64; 5],
    /// Spherically weighted errors.
    pub weighted: Option<DirectErrors>,
    pub weighted_delta: Option<[f64; 5]>,
    pub ico: Option<IcoReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub model: String,
    pub resolution: Resolution,
    pub samples: usize,
    pub aggregation: Aggregation,
    pub direct: DirectDepthReport,
    pub boundary: BoundaryReport,
    pub smoothness: SmoothnessReport,
    pub geometric: Option<GeometricReport>,
}

impl MetricsReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    /// Every scalar metric keyed by its column name.
    pub fn columns(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        let mut push = |k: String, v: f64| out.push((k, v));
        let errs = |prefix: &str, e: &DirectErrors, push: &mut dyn FnMut(String, f64)| {
            push(format!("{prefix}rmse"), e.rmse);
            push(format!("{prefix}rmsle"), e.rmsle);
            push(format!("{prefix}abs_rel"), e.abs_rel);
            push(format!("{prefix}sq_rel"), e.sq_rel);
        };
        let deltas = |prefix: &str, d: &[f64; 5], push: &mut dyn FnMut(String, f64)| {
            for (name, v) in DELTA_NAMES.iter().zip(d) {
                push(format!("{prefix}delta{name}"), *v);
            }
        };
        let d = &self.direct;
        errs("", &d.errors, &mut push);
        deltas("", &d.delta, &mut push);
        if let Some(w) = &d.weighted {
            errs("w", w, &mut push);
        }
        if let Some(w) = &d.weighted_delta {
            deltas("w", w, &mut push);
        }
        if let Some(ico) = &d.ico {
            deltas("ico_", &ico.delta, &mut push);
        }
        let b = &self.boundary;
        push("dbe_acc".into(), b.dbe_acc);
        push("dbe_comp".into(), b.dbe_comp);
        for (k, t) in GRADIENT_NAMES.iter().enumerate() {
            push(format!("prec{t}"), b.precision[k]);
            push(format!("rec{t}"), b.recall[k]);
            push(format!("f1_{t}"), b.f1[k]);
        }
        let s = &self.smoothness;
        push("rmse_deg".into(), s.rmse_deg);
        for (name, v) in ALPHA_NAMES.iter().zip(&s.alpha) {
            push(format!("alpha{name}"), *v);
        }
        if let Some(g) = &self.geometric {
            push("c2c_mean".into(), g.c2c_mean);
            push("c2c_std".into(), g.c2c_std);
            push("m2m".into(), g.m2m);
            push("m2m_pct".into(), g.m2m_bbox_pct);
            push("m2m_mean".into(), g.m2m_mean);
        }
        out
    }
}

const DELTA_NAMES: [&str; 5] = ["1.05", "1.1", "1.25", "1.25^2", "1.25^3"];
const GRADIENT_NAMES: [&str; 3] = ["0.25", "0.5", "1"];
const ALPHA_NAMES: [&str; 3] = ["11.25", "22.5", "30"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeomOptions {
    pub disc_thresh: f64,
    pub hausdorff: HausdorffOptions,
}

impl Default for GeomOptions {
    fn default() -> Self {
        GeomOptions {
            disc_thresh: geom::DEFAULT_DISC_THRESHOLD,
            hausdorff: HausdorffOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOptions {
    pub model: String,
    pub max_depth: f64,
    pub spherical_weights: bool,
    pub ico_order: Option<u32>,
    /// `max_depth` here is overwritten by [`EvalOptions::max_depth`].
    pub boundary: BoundaryParams,
    pub geom: Option<GeomOptions>,
    pub aggregation: Aggregation,
    /// Worker threads; 0 uses rayon's default.
    pub jobs: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            model: String::new(),
            max_depth: DEFAULT_MAX_DEPTH,
            spherical_weights: false,
            ico_order: None,
            boundary: BoundaryParams::default(),
            geom: None,
            aggregation: Aggregation::Pooled,
            jobs: 0,
        }
    }
}

/// Mergeable per-sample state for every metric family.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleAccumulator {
    pub samples: usize,
    pub direct: DirectAccumulator,
    pub weighted: Option<DirectAccumulator>,
    pub ico: Option<IcoAccumulator>,
    pub boundary: BoundaryAccumulator,
    pub smoothness: SmoothnessAccumulator,
    pub c2c: Option<C2cAccumulator>,
    /// Per-sample Hausdorff results; averaged in either aggregation mode.
    pub m2m: Vec<geom::HausdorffResult>,
}

impl SampleAccumulator {
    pub fn merge(&mut self, o: &SampleAccumulator) {
        self.samples += o.samples;
        self.direct.merge(&o.direct);
        merge_opt(&mut self.weighted, &o.weighted, DirectAccumulator::merge);
        merge_opt(&mut self.ico, &o.ico, IcoAccumulator::merge);
        self.boundary.merge(&o.boundary);
        self.smoothness.merge(&o.smoothness);
        merge_opt(&mut self.c2c, &o.c2c, C2cAccumulator::merge);
        self.m2m.extend_from_slice(&o.m2m);
    }
}

fn merge_opt<T: Clone>(a: &mut Option<T>, b: &Option<T>, f: impl Fn(&mut T, &T)) {
    match (a.as_mut(), b) {
        (Some(x), Some(y)) => f(x, y),
        (None, Some(y)) => *a = Some(y.clone()),
        _ => {}
    }
}

/// Precomputed per-resolution state shared by every sample.
pub struct Evaluator {
    opts: EvalOptions,
    dims: (usize, usize),
    weights: Option<WeightGrid>,
    ico: Option<IcoSampler>,
}

impl Evaluator {
    pub fn new(opts: &EvalOptions, width: usize, height: usize) -> Result<Self> {
        let mut opts = opts.clone();
        opts.boundary.max_depth = opts.max_depth;
        opts.boundary.canny.validate()?;
        let ico = match opts.ico_order {
            Some(k) => Some(IcoSampler::new(&build_icosphere(k)?, width, height)),
            None => None,
        };
        Ok(Evaluator {
            weights: opts.spherical_weights.then(|| spherical_weights(width, height)),
            ico,
            dims: (width, height),
            opts,
        })
    }

    pub fn options(&self) -> &EvalOptions {
        &self.opts
    }

    /// Accumulates one pair. `pred` and `gt` are expected to be prepared
    /// already (clamped prediction, range-masked ground truth).
    pub fn accumulate(&self, pred: &DepthPanorama, gt: &DepthPanorama) -> Result<SampleAccumulator> {
        if gt.dims() != self.dims {
            return Err(Error::dims(self.dims, gt.dims()));
        }
        if pred.dims() != self.dims {
            return Err(Error::dims(self.dims, pred.dims()));
        }
        let mut acc = SampleAccumulator {
            samples: 1,
            ..Default::default()
        };
        acc.direct.add_pair(pred, gt, None)?;
        if let Some(wg) = &self.weights {
            let mut w = DirectAccumulator::default();
            w.add_pair(pred, gt, Some(wg))?;
            acc.weighted = Some(w);
        }
        if let Some(s) = &self.ico {
            let mut a = IcoAccumulator::default();
            s.accumulate(pred, gt, &mut a)?;
            acc.ico = Some(a);
        }
        acc.boundary.add_pair(pred, gt, &self.opts.boundary)?;
        let np = geom::normals_from_depth(pred);
        let ng = geom::normals_from_depth(gt);
        acc.smoothness.add_maps(&np, &ng, None, None)?;

        if let Some(g) = &self.opts.geom {
            let joint = gt.mask().and(pred.mask())?;
            let (p, t) = (pred.restricted(&joint)?, gt.restricted(&joint)?);
            let (pc, tc) = (geom::lift(&p)?, geom::lift(&t)?);
            let tree = KdTree::build(&tc.points);
            let mut c = C2cAccumulator::default();
            c.add_clouds(&pc, &tc, &tree);
            acc.c2c = Some(c);
            let pm = geom::grid_mesh(&p, g.disc_thresh)?;
            let tm = geom::grid_mesh(&t, g.disc_thresh)?;
            acc.m2m.push(geom::m2m_hausdorff(&pm, &tm, &g.hausdorff)?);
        }
        Ok(acc)
    }

    /// Metric values of an accumulator; errors when a metric family saw no
    /// valid pixels.
    pub fn finish(&self, acc: &SampleAccumulator) -> Result<Metrics> {
        let empty = || Error::EmptyMask("joint prediction/ground-truth mask");
        let direct = DirectDepthReport {
            errors: acc.direct.errors().ok_or_else(empty)?,
            delta: acc.direct.deltas().ok_or_else(empty)?,
            weighted: acc.weighted.as_ref().and_then(|w| w.errors()),
            weighted_delta: acc.weighted.as_ref().and_then(|w| w.deltas()),
            ico: match (&acc.ico, &self.ico) {
                (Some(a), Some(s)) => Some(IcoReport {
                    order: s.order(),
                    delta: a.deltas().ok_or(Error::EmptyMask("every icosphere vertex is invalid"))?,
                }),
                _ => None,
            },
        };
        let smoothness = acc.smoothness.report().ok_or(Error::EmptyMask("joint normal mask"))?;
        let geometric = match &acc.c2c {
            Some(c) => {
                let (c2c_mean, c2c_std) = c.value().ok_or(Error::EmptyMask("point cloud"))?;
                let n = acc.m2m.len().max(1) as f64;
                Some(GeometricReport {
                    c2c_mean,
                    c2c_std,
                    m2m: acc.m2m.iter().map(|r| r.max).sum::<f64>() / n,
                    m2m_bbox_pct: acc.m2m.iter().map(|r| r.pct).sum::<f64>() / n,
                    m2m_mean: acc.m2m.iter().map(|r| r.mean).sum::<f64>() / n,
                })
            }
            None => None,
        };
        Ok(Metrics {
            direct,
            boundary: acc.boundary.report(&self.opts.boundary),
            smoothness,
            geometric,
        })
    }
}

/// The metric part of a [`MetricsReport`].
#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub direct: DirectDepthReport,
    pub boundary: BoundaryReport,
    pub smoothness: SmoothnessReport,
    pub geometric: Option<GeometricReport>,
}

fn mean_by(items: &[Metrics], f: impl Fn(&Metrics) -> f64) -> f64 {
    items.iter().map(f).sum::<f64>() / items.len() as f64
}

fn mean_arr<const N: usize>(items: &[Metrics], f: impl Fn(&Metrics) -> [f64; N]) -> [f64; N] {
    let mut out = [0.0; N];
    for m in items {
        for (o, v) in out.iter_mut().zip(f(m)) {
            *o += v;
        }
    }
    out.map(|v| v / items.len() as f64)
}

fn mean_errors(items: &[DirectErrors]) -> DirectErrors {
    let n = items.len() as f64;
    DirectErrors {
        rmse: items.iter().map(|e| e.rmse).sum::<f64>() / n,
        rmsle: items.iter().map(|e| e.rmsle).sum::<f64>() / n,
        abs_rel: items.iter().map(|e| e.abs_rel).sum::<f64>() / n,
        sq_rel: items.iter().map(|e| e.sq_rel).sum::<f64>() / n,
    }
}

/// Field-wise mean of per-sample metrics.
fn mean_metrics(items: &[Metrics]) -> Metrics {
    let all_some = |f: &dyn Fn(&Metrics) -> bool| items.iter().all(f);
    let direct = DirectDepthReport {
        errors: mean_errors(&items.iter().map(|m| m.direct.errors).collect::<Vec<_>>()),
        delta: mean_arr(items, |m| m.direct.delta),
        weighted: all_some(&|m| m.direct.weighted.is_some())
            .then(|| mean_errors(&items.iter().map(|m| m.direct.weighted.unwrap()).collect::<Vec<_>>())),
        weighted_delta: all_some(&|m| m.direct.weighted_delta.is_some())
            .then(|| mean_arr(items, |m| m.direct.weighted_delta.unwrap())),
        ico: all_some(&|m| m.direct.ico.is_some()).then(|| IcoReport {
            order: items[0].direct.ico.unwrap().order,
            delta: mean_arr(items, |m| m.direct.ico.unwrap().delta),
        }),
    };
    let boundary = BoundaryReport {
        dbe_acc: mean_by(items, |m| m.boundary.dbe_acc),
        dbe_comp: mean_by(items, |m| m.boundary.dbe_comp),
        precision: mean_arr(items, |m| m.boundary.precision),
        recall: mean_arr(items, |m| m.boundary.recall),
        f1: mean_arr(items, |m| m.boundary.f1),
    };
    let smoothness = SmoothnessReport {
        rmse_deg: mean_by(items, |m| m.smoothness.rmse_deg),
        alpha: mean_arr(items, |m| m.smoothness.alpha),
    };
    let geometric = all_some(&|m| m.geometric.is_some()).then(|| {
        let g = |f: fn(&GeometricReport) -> f64| mean_by(items, |m| f(m.geometric.as_ref().unwrap()));
        GeometricReport {
            c2c_mean: g(|x| x.c2c_mean),
            c2c_std: g(|x| x.c2c_std),
            m2m: g(|x| x.m2m),
            m2m_bbox_pct: g(|x| x.m2m_bbox_pct),
            m2m_mean: g(|x| x.m2m_mean),
        }
    });
    Metrics {
        direct,
        boundary,
        smoothness,
        geometric,
    }
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {jobs} worker threads: {e}")))
}

/// Runs `load_and_accumulate` for every index on the worker pool and builds
/// the report. Per-sample accumulators are merged in index order, so the
/// result does not depend on scheduling.
fn run(
    n: usize,
    resolution: Resolution,
    opts: &EvalOptions,
    ev: &Evaluator,
    load_and_accumulate: impl Fn(usize) -> Result<SampleAccumulator> + Sync,
) -> Result<MetricsReport> {
    use rayon::prelude::*;
    if n == 0 {
        return Err(Error::EmptyMask("no samples to evaluate"));
    }
    let accs: Vec<SampleAccumulator> =
        thread_pool(opts.jobs)?.install(|| (0..n).into_par_iter().map(&load_and_accumulate).collect::<Result<_>>())?;
    let metrics = match opts.aggregation {
        Aggregation::Pooled => {
            let mut total = SampleAccumulator::default();
            for a in &accs {
                total.merge(a);
            }
            ev.finish(&total)?
        }
        Aggregation::PerSampleMean => {
            let per: Vec<Metrics> = accs.iter().map(|a| ev.finish(a)).collect::<Result<_>>()?;
            mean_metrics(&per)
        }
    };
    Ok(MetricsReport {
        schema_version: SCHEMA_VERSION,
        model: opts.model.clone(),
        resolution,
        samples: n,
        aggregation: opts.aggregation,
        direct: metrics.direct,
        boundary: metrics.boundary,
        smoothness: metrics.smoothness,
        geometric: metrics.geometric,
    })
}

/// Evaluates in-memory `(prediction, ground truth)` pairs that are already
/// prepared for evaluation.
pub fn evaluate_pairs(pairs: &[(DepthPanorama, DepthPanorama)], opts: &EvalOptions) -> Result<MetricsReport> {
    let (w, h) = pairs.first().ok_or(Error::EmptyMask("no samples to evaluate"))?.1.dims();
    let ev = Evaluator::new(opts, w, h)?;
    run(pairs.len(), Resolution { width: w, height: h }, opts, &ev, |k| {
        ev.accumulate(&pairs[k].0, &pairs[k].1)
    })
}

/// Evaluates a prediction manifest against a ground-truth manifest.
///
/// Records are matched by id; every ground-truth id needs exactly one
/// prediction and vice versa. Predictions are clamped into
/// `[PREDICTION_FLOOR, max_depth]`, ground truth outside `(0, max_depth]` is
/// masked out.
pub fn evaluate(pred: &SampleManifest, gt: &SampleManifest, opts: &EvalOptions) -> Result<MetricsReport> {
    let mut by_id: HashMap<&str, usize> = HashMap::with_capacity(pred.len());
    for (k, s) in pred.samples.iter().enumerate() {
        if by_id.insert(s.id.as_str(), k).is_some() {
            return Err(Error::Misaligned(format!("duplicate prediction id `{}`", s.id)));
        }
    }
    let mut order = Vec::with_capacity(gt.len());
    let mut seen = std::collections::HashSet::with_capacity(gt.len());
    for s in &gt.samples {
        if !seen.insert(s.id.as_str()) {
            return Err(Error::Misaligned(format!("duplicate ground-truth id `{}`", s.id)));
        }
        let k = by_id
            .get(s.id.as_str())
            .ok_or_else(|| Error::Misaligned(format!("no prediction for ground-truth id `{}`", s.id)))?;
        order.push(*k);
    }
    if pred.len() != gt.len() {
        let extra = pred.samples.iter().find(|s| !seen.contains(s.id.as_str())).map(|s| s.id.clone()).unwrap_or_default();
        return Err(Error::Misaligned(format!("prediction id `{extra}` has no ground truth")));
    }
    let first = gt.samples.first().ok_or(Error::EmptyMask("no samples to evaluate"))?;
    let (w, h) = first.load_grid()?.dims();
    for m in [pred, gt] {
        if let Some(r) = m.resolution()? {
            if (r.width, r.height) != (w, h) {
                return Err(Error::dims((r.width, r.height), (w, h)));
            }
        }
    }
    let ev = Evaluator::new(opts, w, h)?;
    run(gt.len(), Resolution { width: w, height: h }, opts, &ev, |k| {
        let g = gt.samples[k].load(opts.max_depth)?;
        let p = DepthPanorama::from_prediction(pred.samples[order[k]].load_grid()?, opts.max_depth)?;
        ev.accumulate(&p, &g)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn pano(w: usize, h: usize, f: impl FnMut(usize, usize) -> f64) -> DepthPanorama {
        DepthPanorama::from_depth(Grid::from_fn(w, h, f), DEFAULT_MAX_DEPTH).unwrap()
    }

    #[test]
    fn pooled_rmse_of_two_samples() {
        // per-sample squared errors of 1 and 3 over equal pixel counts
        let gt = pano(16, 8, |_, _| 5.0);
        let p1 = pano(16, 8, |_, _| 6.0);
        let p2 = pano(16, 8, |_, _| 5.0 + 3f64.sqrt());
        let r = evaluate_pairs(&[(p1, gt.clone()), (p2, gt)], &EvalOptions::default()).unwrap();
        assert!((r.direct.errors.rmse - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn per_sample_mean_differs_from_pooled() {
        let gt = pano(16, 8, |_, _| 5.0);
        let p1 = pano(16, 8, |_, _| 6.0);
        let p2 = pano(16, 8, |_, _| 5.0 + 3f64.sqrt());
        let opts = EvalOptions { aggregation: Aggregation::PerSampleMean, ..Default::default() };
        let r = evaluate_pairs(&[(p1, gt.clone()), (p2, gt)], &opts).unwrap();
        assert!((r.direct.errors.rmse - (1.0 + 3f64.sqrt()) / 2.0).abs() < 1e-12);
        assert_eq!(r.aggregation, Aggregation::PerSampleMean);
    }

    #[test]
    fn columns_are_unique() {
        let gt = pano(32, 16, |i, _| 2.0 + 0.02 * (i % 5) as f64);
        let opts = EvalOptions {
            spherical_weights: true,
            ico_order: Some(2),
            geom: Some(GeomOptions { hausdorff: HausdorffOptions { samples: 100, seed: 0 }, ..Default::default() }),
            ..Default::default()
        };
        let r = evaluate_pairs(&[(gt.clone(), gt)], &opts).unwrap();
        let cols = r.columns();
        let names: std::collections::HashSet<_> = cols.iter().map(|c| c.0.clone()).collect();
        assert_eq!(names.len(), cols.len());
        assert!(names.contains("wrmse") && names.contains("ico_delta1.05") && names.contains("m2m_pct"));
    }

    #[test]
    fn json_roundtrip() {
        let gt = pano(32, 16, |i, j| 1.0 + 0.1 * i as f64 + 0.05 * j as f64);
        let pred = pano(32, 16, |i, j| 1.1 + 0.09 * i as f64 + 0.06 * j as f64);
        let opts = EvalOptions { spherical_weights: true, ico_order: Some(1), model: "m".into(), ..Default::default() };
        let r = evaluate_pairs(&[(pred, gt)], &opts).unwrap();
        let s = r.to_json().unwrap();
        let back = MetricsReport::from_json(&s).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json().unwrap(), s);
    }
}
