//! Depth lifted to 3D: surface normals, smoothness metrics, point-to-plane
//! cloud distances and mesh-to-mesh Hausdorff distances.

mod bvh;
mod export;
mod hausdorff;
mod kdtree;
mod mesh;

pub use bvh::{closest_point_on_triangle, Bvh};
pub use export::{write_mesh_obj, write_mesh_ply, write_points_ply};
pub use hausdorff::{m2m_hausdorff, HausdorffOptions, HausdorffResult};
pub use kdtree::KdTree;
pub use mesh::{grid_mesh, TriangleMesh, DEFAULT_DISC_THRESHOLD};

use serde::{Deserialize, Serialize};

use crate::accum::CompensatedSum;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io::DepthPanorama;
use crate::sphere::{self, WeightGrid};
use crate::vec3::{self, Vec3};

/// Angular accuracy thresholds in degrees.
pub const ALPHA_THRESHOLDS_DEG: [f64; 3] = [11.25, 22.5, 30.0];

/// 3D points `depth · direction` for every pixel (masked pixels included).
pub fn lift_grid(d: &DepthPanorama) -> Grid<Vec3> {
    let dirs = sphere::direction_grid(d.width(), d.height());
    Grid::from_fn(d.width(), d.height(), |i, j| vec3::scale(dirs[(i, j)], d.depth()[(i, j)]))
}

/// Central-difference tangents at `(i, j)`: `a = P(i+1) − P(i−1)` along the
/// row (wrapped) and `b = P(j+1) − P(j−1)` along the column. `None` on the
/// first and last rows or when a neighbor is masked.
#[inline]
pub(crate) fn tangents(points: &Grid<Vec3>, mask: &Grid<bool>, i: usize, j: usize) -> Option<(Vec3, Vec3)> {
    let (w, h) = points.dims();
    if j == 0 || j + 1 >= h {
        return None;
    }
    let il = (i + w - 1) % w;
    let ir = (i + 1) % w;
    if !(mask[(i, j)] && mask[(il, j)] && mask[(ir, j)] && mask[(i, j - 1)] && mask[(i, j + 1)]) {
        return None;
    }
    let a = vec3::sub(points[(ir, j)], points[(il, j)]);
    let b = vec3::sub(points[(i, j + 1)], points[(i, j - 1)]);
    Some((a, b))
}

/// Unit normal `±normalize(a × b)` facing the viewer at the origin, along
/// with the raw cross product and the applied sign.
#[inline]
pub(crate) fn oriented_normal(p: Vec3, a: Vec3, b: Vec3) -> Option<(Vec3, Vec3, f64)> {
    let c = vec3::cross(a, b);
    let n = vec3::normalize(c)?;
    let sign = if vec3::dot(n, p) > 0.0 { -1.0 } else { 1.0 };
    Some((vec3::scale(n, sign), c, sign))
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalMap {
    pub normals: Grid<Vec3>,
    pub mask: Grid<bool>,
}

pub fn normals_from_depth(d: &DepthPanorama) -> NormalMap {
    normals_from_points(&lift_grid(d), d.mask())
}

pub(crate) fn normals_from_points(points: &Grid<Vec3>, mask: &Grid<bool>) -> NormalMap {
    let (w, h) = points.dims();
    let mut normals = Grid::filled(w, h, [0.0; 3]);
    let mut out_mask = Grid::filled(w, h, false);
    for j in 0..h {
        for i in 0..w {
            if let Some((a, b)) = tangents(points, mask, i, j) {
                if let Some((n, _, _)) = oriented_normal(points[(i, j)], a, b) {
                    normals[(i, j)] = n;
                    out_mask[(i, j)] = true;
                }
            }
        }
    }
    NormalMap {
        normals,
        mask: out_mask,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    /// Angular RMSE in degrees.
    pub rmse_deg: f64,
    /// Indexed like [`ALPHA_THRESHOLDS_DEG`].
    pub alpha: [f64; 3],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessAccumulator {
    pixels: u64,
    weight: CompensatedSum,
    sq_deg: CompensatedSum,
    alpha: [CompensatedSum; 3],
}

impl SmoothnessAccumulator {
    pub fn add(&mut self, pred: Vec3, gt: Vec3, w: f64) {
        let deg = vec3::angle(pred, gt).to_degrees();
        self.pixels += 1;
        self.weight.add(w);
        self.sq_deg.add(w * deg * deg);
        for (a, &t) in self.alpha.iter_mut().zip(&ALPHA_THRESHOLDS_DEG) {
            if deg < t {
                a.add(w);
            }
        }
    }

    pub fn add_maps(
        &mut self,
        pred: &NormalMap,
        gt: &NormalMap,
        mask: Option<&Grid<bool>>,
        weights: Option<&WeightGrid>,
    ) -> Result<()> {
        pred.normals.same_dims(&gt.normals)?;
        if let Some(m) = mask {
            m.same_dims(&gt.normals)?;
        }
        if let Some(wg) = weights {
            if (wg.width(), wg.height()) != gt.normals.dims() {
                return Err(Error::dims(gt.normals.dims(), (wg.width(), wg.height())));
            }
        }
        let (w, h) = gt.normals.dims();
        for j in 0..h {
            let wt = weights.map_or(1.0, |wg| wg.weight(0, j));
            for i in 0..w {
                if pred.mask[(i, j)] && gt.mask[(i, j)] && mask.is_none_or(|m| m[(i, j)]) {
                    self.add(pred.normals[(i, j)], gt.normals[(i, j)], wt);
                }
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, o: &SmoothnessAccumulator) {
        self.pixels += o.pixels;
        self.weight.merge(&o.weight);
        self.sq_deg.merge(&o.sq_deg);
        for (a, b) in self.alpha.iter_mut().zip(&o.alpha) {
            a.merge(b);
        }
    }

    pub fn report(&self) -> Option<SmoothnessReport> {
        let w = self.weight.value();
        (self.pixels > 0 && w > 0.0).then(|| SmoothnessReport {
            rmse_deg: (self.sq_deg.value() / w).max(0.0).sqrt(),
            alpha: self.alpha.map(|a| (a.value() / w).min(1.0)),
        })
    }
}

/// Angular RMSE and `α` accuracies between two normal maps over pixels valid
/// in both (and in `mask` when given).
pub fn smoothness_metrics(
    pred: &NormalMap,
    gt: &NormalMap,
    mask: Option<&Grid<bool>>,
    weights: Option<&WeightGrid>,
) -> Result<SmoothnessReport> {
    let mut acc = SmoothnessAccumulator::default();
    acc.add_maps(pred, gt, mask, weights)?;
    acc.report().ok_or(Error::EmptyMask("joint normal mask"))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OrientedPointCloud {
    pub points: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    /// Source pixel `(i, j)` of each point.
    pub pixels: Vec<(u32, u32)>,
}

impl OrientedPointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Applies `x ↦ R x + t` to points and `R` to normals.
    pub fn transformed(&self, r: [[f64; 3]; 3], t: Vec3) -> Self {
        let apply = |v: Vec3| [vec3::dot(r[0], v), vec3::dot(r[1], v), vec3::dot(r[2], v)];
        OrientedPointCloud {
            points: self.points.iter().map(|&p| vec3::add(apply(p), t)).collect(),
            normals: self.normals.iter().map(|&n| apply(n)).collect(),
            pixels: self.pixels.clone(),
        }
    }
}

/// One point per valid pixel. Pixels without a central-difference normal
/// (pole rows, masked neighbors) fall back to the normal facing the viewer,
/// `−direction`.
pub fn lift(d: &DepthPanorama) -> Result<OrientedPointCloud> {
    let n = d.valid_count();
    if n == 0 {
        return Err(Error::EmptyMask("depth panorama"));
    }
    let points = lift_grid(d);
    let nm = normals_from_points(&points, d.mask());
    let mut cloud = OrientedPointCloud {
        points: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        pixels: Vec::with_capacity(n),
    };
    for j in 0..d.height() {
        for i in 0..d.width() {
            if !d.mask()[(i, j)] {
                continue;
            }
            let p = points[(i, j)];
            let normal = if nm.mask[(i, j)] {
                nm.normals[(i, j)]
            } else {
                vec3::scale(p, -1.0 / vec3::norm(p))
            };
            cloud.points.push(p);
            cloud.normals.push(normal);
            cloud.pixels.push((i as u32, j as u32));
        }
    }
    Ok(cloud)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct C2cAccumulator {
    count: u64,
    sum: CompensatedSum,
    sum_sq: CompensatedSum,
}

impl C2cAccumulator {
    pub fn add(&mut self, d: f64) {
        self.count += 1;
        self.sum.add(d);
        self.sum_sq.add(d * d);
    }

    pub fn merge(&mut self, o: &C2cAccumulator) {
        self.count += o.count;
        self.sum.merge(&o.sum);
        self.sum_sq.merge(&o.sum_sq);
    }

    /// `(mean, population standard deviation)`.
    pub fn value(&self) -> Option<(f64, f64)> {
        (self.count > 0).then(|| {
            let n = self.count as f64;
            let mean = self.sum.value() / n;
            let var = (self.sum_sq.value() / n - mean * mean).max(0.0);
            (mean, var.sqrt())
        })
    }

    /// Adds the point-to-plane distance of every `pred` point to the plane of
    /// its nearest `gt` point.
    pub fn add_clouds(&mut self, pred: &OrientedPointCloud, gt: &OrientedPointCloud, tree: &KdTree) {
        for &p in &pred.points {
            let (k, _) = tree.nearest(p).expect("non-empty tree");
            let q = gt.points[k];
            self.add(vec3::dot(vec3::sub(p, q), gt.normals[k]).abs());
        }
    }
}

/// Mean and standard deviation of point-to-plane distances from each
/// predicted point to its nearest ground-truth point.
pub fn c2c(pred: &OrientedPointCloud, gt: &OrientedPointCloud) -> Result<(f64, f64)> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::EmptyMask("point cloud"));
    }
    let tree = KdTree::build(&gt.points);
    let mut acc = C2cAccumulator::default();
    acc.add_clouds(pred, gt, &tree);
    Ok(acc.value().expect("non-empty"))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GeometricReport {
    pub c2c_mean: f64,
    pub c2c_std: f64,
    /// Hausdorff distance in meters.
    pub m2m: f64,
    /// Hausdorff distance as a percentage of the joint bounding-box diagonal.
    pub m2m_bbox_pct: f64,
    /// Mean of the sampled surface distances, both directions.
    pub m2m_mean: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_pano(w: usize, h: usize, r: f64) -> DepthPanorama {
        DepthPanorama::from_depth(Grid::filled(w, h, r), 100.0).unwrap()
    }

    #[test]
    fn lift_points() {
        let d = sphere_pano(32, 16, 2.5);
        let c = lift(&d).unwrap();
        assert_eq!(c.len(), 512);
        for p in &c.points {
            assert!((vec3::norm(*p) - 2.5).abs() < 1e-12);
        }
        for n in &c.normals {
            assert!((vec3::norm(*n) - 1.0).abs() < 1e-6);
        }
        let empty = DepthPanorama::new(Grid::filled(4, 2, 1.0), Grid::filled(4, 2, false)).unwrap();
        assert!(lift(&empty).is_err());
    }

    #[test]
    fn forward_direction_lifts_to_z() {
        let p = vec3::scale(sphere::direction(sphere::SphericalCoord::new(0.0, 0.0)), 2.0);
        assert_eq!(p, [0.0, 0.0, 2.0]);
        let d = sphere_pano(4, 2, 2.0);
        let c = sphere::pixel_to_spherical(2, 1, 4, 2).unwrap();
        assert_eq!(lift_grid(&d)[(2, 1)], vec3::scale(sphere::direction(c), 2.0));
    }

    #[test]
    fn sphere_normals_point_inward() {
        let (w, h) = (256, 128);
        let d = sphere_pano(w, h, 3.0);
        let nm = normals_from_depth(&d);
        let dirs = sphere::direction_grid(w, h);
        for j in 0..h {
            let lat = sphere::pixel_lat(j, h);
            if lat.abs() > 80f64.to_radians() {
                continue;
            }
            for i in 0..w {
                assert!(nm.mask[(i, j)]);
                let err = vec3::angle(nm.normals[(i, j)], vec3::scale(dirs[(i, j)], -1.0)).to_degrees();
                assert!(err < 0.5, "({i},{j}) {err}");
            }
        }
        assert!(!nm.mask[(0, 0)] && !nm.mask[(0, h - 1)]);
    }

    #[test]
    fn floor_normals_point_up() {
        let (w, h) = (256, 128);
        let height = 1.6;
        let depth = Grid::from_fn(w, h, |_, j| {
            let lat = sphere::pixel_lat(j, h);
            if lat < 0.0 { height / (-lat).sin() } else { -1.0 }
        });
        let d = DepthPanorama::from_depth(depth, f64::INFINITY).unwrap();
        let nm = normals_from_depth(&d);
        let mut checked = 0;
        for j in 0..h {
            for i in 0..w {
                if nm.mask[(i, j)] {
                    let err = vec3::angle(nm.normals[(i, j)], [0.0, 1.0, 0.0]).to_degrees();
                    assert!(err < 1.0, "({i},{j}) {err}");
                    checked += 1;
                }
            }
        }
        assert!(checked > w * (h / 2 - 3));
    }

    #[test]
    fn collinear_neighbors_are_masked() {
        let a = [1.0, 0.0, 0.0];
        assert!(oriented_normal([0.0, 0.0, 1.0], a, vec3::scale(a, 2.0)).is_none());
        assert!(oriented_normal([0.0, 0.0, 1.0], a, [0.0; 3]).is_none());
    }

    #[test]
    fn smoothness_examples() {
        let d = sphere_pano(64, 32, 2.0);
        let nm = normals_from_depth(&d);
        let r = smoothness_metrics(&nm, &nm, None, None).unwrap();
        assert_eq!(r.rmse_deg, 0.0);
        assert_eq!(r.alpha, [1.0; 3]);

        // rotate every normal by 20° about an axis perpendicular to it
        let mut rot = nm.clone();
        for j in 0..32 {
            for i in 0..64 {
                if !nm.mask[(i, j)] {
                    continue;
                }
                let n = nm.normals[(i, j)];
                let axis = vec3::normalize(vec3::cross(n, [0.3, 0.5, 0.7])).unwrap();
                let t = vec3::cross(axis, n);
                let a = 20f64.to_radians();
                rot.normals[(i, j)] = vec3::add(vec3::scale(n, a.cos()), vec3::scale(t, a.sin()));
            }
        }
        let r = smoothness_metrics(&rot, &nm, None, None).unwrap();
        assert!((r.rmse_deg - 20.0).abs() < 1e-9);
        assert_eq!(r.alpha, [0.0, 1.0, 1.0]);

        let none = NormalMap { normals: nm.normals.clone(), mask: Grid::filled(64, 32, false) };
        assert!(smoothness_metrics(&none, &nm, None, None).is_err());
    }

    fn plane_cloud(n: usize, spacing: f64, offset: Vec3) -> OrientedPointCloud {
        let mut c = OrientedPointCloud::default();
        for y in 0..n {
            for x in 0..n {
                c.points.push(vec3::add([x as f64 * spacing, y as f64 * spacing, 0.0], offset));
                c.normals.push([0.0, 0.0, 1.0]);
                c.pixels.push((x as u32, y as u32));
            }
        }
        c
    }

    #[test]
    fn c2c_plane_fixtures() {
        let gt = plane_cloud(100, 0.01, [0.0; 3]);
        assert_eq!(c2c(&gt, &gt).unwrap(), (0.0, 0.0));
        let (m, s) = c2c(&plane_cloud(100, 0.01, [0.0, 0.0, 0.1]), &gt).unwrap();
        assert!((m - 0.1).abs() < 1e-3 && s < 1e-9);
        let (m, _) = c2c(&plane_cloud(100, 0.01, [0.1, 0.05, 0.0]), &gt).unwrap();
        assert!(m < 1e-3);
        assert!(c2c(&OrientedPointCloud::default(), &gt).is_err());
    }

    #[test]
    fn c2c_rotation_invariant() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let gt = sphere_pano(64, 32, 2.0);
        let pred = DepthPanorama::from_depth(Grid::from_fn(64, 32, |_, _| rng.gen_range(1.8..2.2)), 10.0).unwrap();
        let (g, p) = (lift(&gt).unwrap(), lift(&pred).unwrap());
        let (m0, s0) = c2c(&p, &g).unwrap();
        let (a, b) = (0.7f64, -0.4f64);
        let (sa, ca) = a.sin_cos();
        let (sb, cb) = b.sin_cos();
        let rz = [[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]];
        let rx = [[1.0, 0.0, 0.0], [0.0, cb, -sb], [0.0, sb, cb]];
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|m| rz[i][m] * rx[m][k]).sum();
            }
        }
        let t = [0.3, -1.0, 2.0];
        let (m1, s1) = c2c(&p.transformed(r, t), &g.transformed(r, t)).unwrap();
        assert!((m0 - m1).abs() < 1e-6 && (s0 - s1).abs() < 1e-6);
    }
}
