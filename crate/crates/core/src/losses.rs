//! Depth-regression objectives with analytic gradients with respect to the
//! predicted depth.
//!
//! Every loss takes raw prediction and ground-truth grids plus a mask of the
//! pixels that participate. Gradients are zero outside the mask.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{oriented_normal, tangents};
use crate::grid::Grid;
use crate::sphere;
use crate::vec3::{self, Vec3};

#[derive(Clone, Debug, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub gradient: Grid<f64>,
}

impl LossValue {
    pub fn zero(width: usize, height: usize) -> Self {
        LossValue {
            value: 0.0,
            gradient: Grid::filled(width, height, 0.0),
        }
    }
}

fn check_inputs(pred: &Grid<f64>, gt: &Grid<f64>, mask: &Grid<bool>) -> Result<usize> {
    pred.same_dims(gt)?;
    pred.same_dims(mask)?;
    let mut n = 0;
    for k in 0..mask.len() {
        if mask.as_slice()[k] {
            if !pred.as_slice()[k].is_finite() {
                return Err(Error::NonFinite("prediction"));
            }
            if !gt.as_slice()[k].is_finite() {
                return Err(Error::NonFinite("ground truth"));
            }
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyMask("loss mask"));
    }
    Ok(n)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Mean absolute error.
pub fn l1(pred: &Grid<f64>, gt: &Grid<f64>, mask: &Grid<bool>) -> Result<LossValue> {
    let n = check_inputs(pred, gt, mask)? as f64;
    let mut out = LossValue::zero(pred.width(), pred.height());
    let mut sum = 0.0;
    for k in 0..mask.len() {
        if mask.as_slice()[k] {
            let e = pred.as_slice()[k] - gt.as_slice()[k];
            sum += e.abs();
            out.gradient.as_mut_slice()[k] = sign(e) / n;
        }
    }
    out.value = sum / n;
    Ok(out)
}

/// Mean absolute error between natural-log depths.
pub fn log_l1(pred: &Grid<f64>, gt: &Grid<f64>, mask: &Grid<bool>) -> Result<LossValue> {
    let n = check_inputs(pred, gt, mask)? as f64;
    let mut out = LossValue::zero(pred.width(), pred.height());
    let mut sum = 0.0;
    for k in 0..mask.len() {
        if !mask.as_slice()[k] {
            continue;
        }
        let (p, g) = (pred.as_slice()[k], gt.as_slice()[k]);
        if p <= 0.0 || g <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "log loss needs positive depths, got pred {p} and gt {g} at index {k}"
            )));
        }
        let e = p.ln() - g.ln();
        sum += e.abs();
        out.gradient.as_mut_slice()[k] = sign(e) / (n * p);
    }
    out.value = sum / n;
    Ok(out)
}

/// Reverse Huber threshold `0.2 · max |pred − gt|` over the mask.
pub fn berhu_threshold(pred: &Grid<f64>, gt: &Grid<f64>, mask: &Grid<bool>) -> Result<f64> {
    check_inputs(pred, gt, mask)?;
    let mut m = 0.0f64;
    for k in 0..mask.len() {
        if mask.as_slice()[k] {
            m = m.max((pred.as_slice()[k] - gt.as_slice()[k]).abs());
        }
    }
    Ok(0.2 * m)
}

/// Reverse Huber loss with the threshold derived from the current residuals.
pub fn berhu(pred: &Grid<f64>, gt: &Grid<f64>, mask: &Grid<bool>) -> Result<LossValue> {
    let c = berhu_threshold(pred, gt, mask)?;
    berhu_with_threshold(pred, gt, mask, c)
}

/// Reverse Huber loss at a fixed threshold `c`. `c = 0` reduces to L1.
pub fn berhu_with_threshold(pred: &Grid<f64>, gt: &Grid<f64>, mask: &Grid<bool>, c: f64) -> Result<LossValue> {
    let n = check_inputs(pred, gt, mask)? as f64;
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("berHu threshold must be finite and non-negative, got {c}")));
    }
    let mut out = LossValue::zero(pred.width(), pred.height());
    let mut sum = 0.0;
    for k in 0..mask.len() {
        if !mask.as_slice()[k] {
            continue;
        }
        let e = pred.as_slice()[k] - gt.as_slice()[k];
        let (v, g) = if e.abs() <= c {
            (e.abs(), sign(e))
        } else {
            ((e * e + c * c) / (2.0 * c), e / c)
        };
        sum += v;
        out.gradient.as_mut_slice()[k] = g / n;
    }
    out.value = sum / n;
    Ok(out)
}

pub const DEFAULT_GRAD_SCALES: usize = 4;

/// 2×2 average pooling; a pooled pixel is valid only when all four sources are.
fn pool(r: &Grid<f64>, m: &Grid<bool>) -> (Grid<f64>, Grid<bool>) {
    let (w, h) = (r.width() / 2, r.height() / 2);
    let mut pr = Grid::filled(w, h, 0.0);
    let mut pm = Grid::filled(w, h, false);
    for j in 0..h {
        for i in 0..w {
            let src = [(2 * i, 2 * j), (2 * i + 1, 2 * j), (2 * i, 2 * j + 1), (2 * i + 1, 2 * j + 1)];
            if src.iter().all(|&p| m[p]) {
                pm[(i, j)] = true;
                pr[(i, j)] = 0.25 * src.iter().map(|&p| r[p]).sum::<f64>();
            }
        }
    }
    (pr, pm)
}

/// Multi-scale gradient matching on the residual `pred − gt`.
///
/// Each scale adds the mean, over its valid pixels, of the absolute forward
/// differences of the residual along x (wrapped) and y. Scale `k + 1` is the
/// 2×2 average pool of scale `k`.
pub fn grad_matching(pred: &Grid<f64>, gt: &Grid<f64>, mask: &Grid<bool>, scales: usize) -> Result<LossValue> {
    check_inputs(pred, gt, mask)?;
    let (w, h) = pred.dims();
    if scales == 0 {
        return Err(Error::InvalidArgument("gradient matching needs at least one scale".into()));
    }
    let f = 1usize << (scales - 1);
    if w % f != 0 || h % f != 0 || w / f < 2 {
        return Err(Error::InvalidArgument(format!(
            "a {w}x{h} grid is too small for {scales} gradient-matching scales"
        )));
    }

    let r0 = Grid::from_fn(w, h, |i, j| if mask[(i, j)] { pred[(i, j)] - gt[(i, j)] } else { 0.0 });
    let mut levels = vec![(r0, mask.clone())];
    for _ in 1..scales {
        let (r, m) = levels.last().unwrap();
        levels.push(pool(r, m));
    }

    let mut value = 0.0;
    let mut grads: Vec<Grid<f64>> = Vec::with_capacity(scales);
    for (k, (r, m)) in levels.iter().enumerate() {
        let n = m.count_true();
        if n == 0 {
            return Err(Error::EmptyMask(if k == 0 { "loss mask" } else { "pooled loss mask" }));
        }
        let n = n as f64;
        let (lw, lh) = r.dims();
        let mut g = Grid::filled(lw, lh, 0.0);
        let mut sum = 0.0;
        for j in 0..lh {
            for i in 0..lw {
                if !m[(i, j)] {
                    continue;
                }
                let ir = (i + 1) % lw;
                if m[(ir, j)] {
                    let d = r[(ir, j)] - r[(i, j)];
                    sum += d.abs();
                    g[(ir, j)] += sign(d) / n;
                    g[(i, j)] -= sign(d) / n;
                }
                if j + 1 < lh && m[(i, j + 1)] {
                    let d = r[(i, j + 1)] - r[(i, j)];
                    sum += d.abs();
                    g[(i, j + 1)] += sign(d) / n;
                    g[(i, j)] -= sign(d) / n;
                }
            }
        }
        value += sum / n;
        grads.push(g);
    }

    // push coarse gradients back through the pooling, coarsest first
    for k in (1..scales).rev() {
        let coarse = grads[k].clone();
        let fine = &mut grads[k - 1];
        for j in 0..coarse.height() {
            for i in 0..coarse.width() {
                let g = coarse[(i, j)];
                if g != 0.0 {
                    for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                        fine[(2 * i + di, 2 * j + dj)] += 0.25 * g;
                    }
                }
            }
        }
    }
    let mut gradient = grads.swap_remove(0);
    for (g, &m) in gradient.as_mut_slice().iter_mut().zip(mask.as_slice()) {
        if !m {
            *g = 0.0;
        }
    }
    Ok(LossValue { value, gradient })
}

fn lift_raw(d: &Grid<f64>, dirs: &Grid<Vec3>) -> Grid<Vec3> {
    Grid::from_fn(d.width(), d.height(), |i, j| vec3::scale(dirs[(i, j)], d[(i, j)]))
}

/// Gradient of `g · s·c/|c|` with respect to `c`.
#[inline]
fn normalize_backward(c: Vec3, s: f64, g: Vec3) -> Vec3 {
    let len = vec3::norm(c);
    let hat = vec3::scale(c, 1.0 / len);
    vec3::scale(vec3::sub(g, vec3::scale(hat, vec3::dot(hat, g))), s / len)
}

/// Surface-orientation loss: mean `1 − n_pred · n_gt` over pixels where both
/// central-difference normals exist.
///
/// Evaluated as `½ |n_pred − n_gt|²`, equal for unit normals and never
/// negative under rounding.
pub fn cosine_normal(pred: &Grid<f64>, gt: &Grid<f64>, mask: &Grid<bool>) -> Result<LossValue> {
    check_inputs(pred, gt, mask)?;
    let (w, h) = pred.dims();
    let dirs = sphere::direction_grid(w, h);
    let pp = lift_raw(pred, &dirs);
    let gp = lift_raw(gt, &dirs);

    struct Term {
        i: usize,
        j: usize,
        a: Vec3,
        b: Vec3,
        c: Vec3,
        s: f64,
        diff: Vec3,
    }
    let mut terms = Vec::new();
    for j in 0..h {
        for i in 0..w {
            let Some((a, b)) = tangents(&pp, mask, i, j) else { continue };
            let Some((ga, gb)) = tangents(&gp, mask, i, j) else { continue };
            let Some((np, c, s)) = oriented_normal(pp[(i, j)], a, b) else { continue };
            let Some((ng, _, _)) = oriented_normal(gp[(i, j)], ga, gb) else { continue };
            terms.push(Term { i, j, a, b, c, s, diff: vec3::sub(np, ng) });
        }
    }
    if terms.is_empty() {
        return Err(Error::EmptyMask("surface normals"));
    }
    let n = terms.len() as f64;
    let mut dp = Grid::filled(w, h, [0.0; 3]);
    let mut value = 0.0;
    for t in &terms {
        value += 0.5 * vec3::norm_sq(t.diff);
        let gc = normalize_backward(t.c, t.s, vec3::scale(t.diff, 1.0 / n));
        let ga = vec3::cross(t.b, gc);
        let gb = vec3::cross(gc, t.a);
        let (il, ir) = ((t.i + w - 1) % w, (t.i + 1) % w);
        dp[(ir, t.j)] = vec3::add(dp[(ir, t.j)], ga);
        dp[(il, t.j)] = vec3::sub(dp[(il, t.j)], ga);
        dp[(t.i, t.j + 1)] = vec3::add(dp[(t.i, t.j + 1)], gb);
        dp[(t.i, t.j - 1)] = vec3::sub(dp[(t.i, t.j - 1)], gb);
    }
    let gradient = Grid::from_fn(w, h, |i, j| if mask[(i, j)] { vec3::dot(dp[(i, j)], dirs[(i, j)]) } else { 0.0 });
    Ok(LossValue { value: value / n, gradient })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VnlConfig {
    pub n_triplets: usize,
    /// Minimum pairwise distance between the ground-truth triplet points, meters.
    pub min_pair_distance: f64,
    /// Minimum interior angle of the ground-truth triangle, degrees.
    pub collinearity_min_angle: f64,
    pub seed: u64,
    /// Sampling attempts allowed per requested triplet.
    pub attempts_per_triplet: usize,
}

impl Default for VnlConfig {
    fn default() -> Self {
        VnlConfig {
            n_triplets: 2000,
            min_pair_distance: 0.3,
            collinearity_min_angle: 15.0,
            seed: 0,
            attempts_per_triplet: 100,
        }
    }
}

impl VnlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_triplets == 0 {
            return Err(Error::InvalidArgument("n_triplets must be positive".into()));
        }
        if !(self.collinearity_min_angle > 0.0 && self.collinearity_min_angle < 90.0) {
            return Err(Error::InvalidArgument(format!(
                "collinearity_min_angle must lie in (0, 90), got {}",
                self.collinearity_min_angle
            )));
        }
        if !(self.min_pair_distance >= 0.0) || !self.min_pair_distance.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "min_pair_distance must be finite and non-negative, got {}",
                self.min_pair_distance
            )));
        }
        if self.attempts_per_triplet == 0 {
            return Err(Error::InvalidArgument("attempts_per_triplet must be positive".into()));
        }
        Ok(())
    }
}

/// Draws pixel triplets whose lifted ground-truth points are far enough apart
/// and far enough from collinear.
pub fn sample_vnl_triplets(gt: &Grid<f64>, mask: &Grid<bool>, cfg: &VnlConfig) -> Result<Vec<[usize; 3]>> {
    cfg.validate()?;
    gt.same_dims(mask)?;
    let valid: Vec<usize> = (0..mask.len()).filter(|&k| mask.as_slice()[k]).collect();
    if valid.len() < 3 {
        return Err(Error::EmptyMask("virtual normal sampling needs at least three valid pixels"));
    }
    let (w, h) = gt.dims();
    let dirs = sphere::direction_grid(w, h);
    let point = |k: usize| vec3::scale(dirs.as_slice()[k], gt.as_slice()[k]);
    let min_d2 = cfg.min_pair_distance * cfg.min_pair_distance;
    let min_angle = cfg.collinearity_min_angle.to_radians();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let budget = cfg.n_triplets.saturating_mul(cfg.attempts_per_triplet);
    let mut out = Vec::with_capacity(cfg.n_triplets);
    let (mut too_close, mut too_flat) = (0usize, 0usize);
    let mut attempts = 0;
    while out.len() < cfg.n_triplets {
        if attempts == budget {
            let constraint = if too_close >= too_flat {
                format!("min_pair_distance = {} m", cfg.min_pair_distance)
            } else {
                format!("collinearity_min_angle = {}°", cfg.collinearity_min_angle)
            };
            return Err(Error::SamplingExhausted { attempts, constraint });
        }
        attempts += 1;
        let t = [0, 1, 2].map(|_| valid[rng.gen_range(0..valid.len())]);
        let p = t.map(point);
        let close = (0..3).any(|e| vec3::dist_sq(p[e], p[(e + 1) % 3]) < min_d2 || t[e] == t[(e + 1) % 3]);
        if close {
            too_close += 1;
            continue;
        }
        let flat = (0..3).any(|e| {
            let u = vec3::sub(p[(e + 1) % 3], p[e]);
            let v = vec3::sub(p[(e + 2) % 3], p[e]);
            vec3::angle(u, v) < min_angle
        });
        if flat {
            too_flat += 1;
            continue;
        }
        out.push(t);
    }
    Ok(out)
}

/// Virtual normal loss: mean L1 distance between the unit normals of triangles
/// spanned by sampled pixel triplets, lifted with predicted and with true depth.
pub fn vnl(pred: &Grid<f64>, gt: &Grid<f64>, mask: &Grid<bool>, cfg: &VnlConfig) -> Result<LossValue> {
    check_inputs(pred, gt, mask)?;
    let triplets = sample_vnl_triplets(gt, mask, cfg)?;
    vnl_with_triplets(pred, gt, &triplets)
}

/// Virtual normal loss over fixed triplets (flat pixel indices).
pub fn vnl_with_triplets(pred: &Grid<f64>, gt: &Grid<f64>, triplets: &[[usize; 3]]) -> Result<LossValue> {
    pred.same_dims(gt)?;
    let (w, h) = pred.dims();
    let dirs = sphere::direction_grid(w, h);
    let lift = |d: &Grid<f64>, k: usize| vec3::scale(dirs.as_slice()[k], d.as_slice()[k]);

    let mut used = Vec::with_capacity(triplets.len());
    for t in triplets {
        if t.iter().any(|&k| k >= pred.len()) {
            return Err(Error::InvalidArgument("triplet index out of range".into()));
        }
        let [p0, p1, p2] = t.map(|k| lift(pred, k));
        let [g0, g1, g2] = t.map(|k| lift(gt, k));
        let (a, b) = (vec3::sub(p1, p0), vec3::sub(p2, p0));
        let c = vec3::cross(a, b);
        let (Some(np), Some(ng)) = (vec3::normalize(c), vec3::normalize(vec3::cross(vec3::sub(g1, g0), vec3::sub(g2, g0)))) else {
            continue;
        };
        used.push((*t, a, b, c, vec3::sub(np, ng)));
    }
    if used.is_empty() {
        return Err(Error::EmptyMask("non-degenerate virtual normal triplets"));
    }
    let n = used.len() as f64;
    let mut dp = vec![[0.0; 3]; pred.len()];
    let mut value = 0.0;
    for (t, a, b, c, diff) in &used {
        value += diff.iter().map(|x| x.abs()).sum::<f64>();
        let gn = diff.map(|x| sign(x) / n);
        let gc = normalize_backward(*c, 1.0, gn);
        let ga = vec3::cross(*b, gc);
        let gb = vec3::cross(gc, *a);
        dp[t[1]] = vec3::add(dp[t[1]], ga);
        dp[t[2]] = vec3::add(dp[t[2]], gb);
        dp[t[0]] = vec3::sub(dp[t[0]], vec3::add(ga, gb));
    }
    let gradient = Grid::from_vec(w, h, (0..pred.len()).map(|k| vec3::dot(dp[k], dirs.as_slice()[k])).collect())?;
    Ok(LossValue { value: value / n, gradient })
}

/// Weighted sum of loss terms; `None` weights every term by 1.
pub fn combine(terms: &[LossValue], weights: Option<&[f64]>) -> Result<LossValue> {
    let first = terms.first().ok_or_else(|| Error::InvalidArgument("no loss terms to combine".into()))?;
    if let Some(ws) = weights {
        if ws.len() != terms.len() {
            return Err(Error::InvalidArgument(format!("{} weights for {} loss terms", ws.len(), terms.len())));
        }
    }
    let mut out = LossValue::zero(first.gradient.width(), first.gradient.height());
    for (k, t) in terms.iter().enumerate() {
        t.gradient.same_dims(&out.gradient)?;
        let wk = weights.map_or(1.0, |ws| ws[k]);
        out.value += wk * t.value;
        for (o, g) in out.gradient.as_mut_slice().iter_mut().zip(t.gradient.as_slice()) {
            *o += wk * g;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    L1,
    Log,
    Berhu,
    Grad,
    Cosine,
    Vnl,
    /// `l1 + grad + cosine`
    Comb,
    /// `comb + vnl`
    #[serde(rename = "comb+vnl")]
    CombVnl,
    /// `l1 + vnl`
    #[serde(rename = "l1+vnl")]
    L1Vnl,
}

impl LossKind {
    pub const ALL: [LossKind; 9] = [
        LossKind::L1,
        LossKind::Log,
        LossKind::Berhu,
        LossKind::Grad,
        LossKind::Cosine,
        LossKind::Vnl,
        LossKind::Comb,
        LossKind::CombVnl,
        LossKind::L1Vnl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::L1 => "l1",
            LossKind::Log => "log",
            LossKind::Berhu => "berhu",
            LossKind::Grad => "grad",
            LossKind::Cosine => "cosine",
            LossKind::Vnl => "vnl",
            LossKind::Comb => "comb",
            LossKind::CombVnl => "comb+vnl",
            LossKind::L1Vnl => "l1+vnl",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown loss kind `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossOptions {
    pub grad_scales: usize,
    pub vnl: VnlConfig,
}

impl Default for LossOptions {
    fn default() -> Self {
        LossOptions {
            grad_scales: DEFAULT_GRAD_SCALES,
            vnl: VnlConfig::default(),
        }
    }
}

pub fn evaluate(kind: LossKind, pred: &Grid<f64>, gt: &Grid<f64>, mask: &Grid<bool>, opts: &LossOptions) -> Result<LossValue> {
    let term = |k: LossKind| evaluate(k, pred, gt, mask, opts);
    match kind {
        LossKind::L1 => l1(pred, gt, mask),
        LossKind::Log => log_l1(pred, gt, mask),
        LossKind::Berhu => berhu(pred, gt, mask),
        LossKind::Grad => grad_matching(pred, gt, mask, opts.grad_scales),
        LossKind::Cosine => cosine_normal(pred, gt, mask),
        LossKind::Vnl => vnl(pred, gt, mask, &opts.vnl),
        LossKind::Comb => combine(&[term(LossKind::L1)?, term(LossKind::Grad)?, term(LossKind::Cosine)?], None),
        LossKind::CombVnl => combine(&[term(LossKind::Comb)?, term(LossKind::Vnl)?], None),
        LossKind::L1Vnl => combine(&[term(LossKind::L1)?, term(LossKind::Vnl)?], None),
    }
}

/// Central-difference gradient of `f` at `x`, one pixel at a time.
pub fn numeric_gradient(x: &Grid<f64>, step: f64, mut f: impl FnMut(&Grid<f64>) -> Result<f64>) -> Result<Grid<f64>> {
    let mut probe = x.clone();
    let mut out = Grid::filled(x.width(), x.height(), 0.0);
    for k in 0..x.len() {
        let x0 = x.as_slice()[k];
        probe.as_mut_slice()[k] = x0 + step;
        let up = f(&probe)?;
        probe.as_mut_slice()[k] = x0 - step;
        let down = f(&probe)?;
        probe.as_mut_slice()[k] = x0;
        out.as_mut_slice()[k] = (up - down) / (2.0 * step);
    }
    Ok(out)
}

/// `max |analytic − numeric| / max |numeric|`, the denominator floored at 1e-12.
pub fn gradient_discrepancy(analytic: &Grid<f64>, numeric: &Grid<f64>) -> f64 {
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for (a, n) in analytic.as_slice().iter().zip(numeric.as_slice()) {
        diff = diff.max((a - n).abs());
        scale = scale.max(n.abs());
    }
    diff / scale.max(1e-12)
}

pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Compares the analytic gradient of `kind` with central differences. The
/// berHu threshold and the virtual-normal triplets are held at their values
/// for the unperturbed input, matching how the analytic gradient treats them.
pub fn finite_difference_check(
    kind: LossKind,
    pred: &Grid<f64>,
    gt: &Grid<f64>,
    mask: &Grid<bool>,
    opts: &LossOptions,
    step: f64,
) -> Result<f64> {
    let analytic = evaluate(kind, pred, gt, mask, opts)?;
    let numeric = match kind {
        LossKind::Berhu => {
            let c = berhu_threshold(pred, gt, mask)?;
            numeric_gradient(pred, step, |p| Ok(berhu_with_threshold(p, gt, mask, c)?.value))?
        }
        _ => numeric_gradient(pred, step, |p| Ok(evaluate(kind, p, gt, mask, opts)?.value))?,
    };
    Ok(gradient_discrepancy(&analytic.gradient, &numeric))
}
