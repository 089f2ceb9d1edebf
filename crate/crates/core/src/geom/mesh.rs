use crate::error::{Error, Result};
use crate::io::DepthPanorama;
use crate::vec3::{self, Vec3};

use super::lift_grid;

/// Relative depth jump above which a grid edge is treated as a discontinuity.
pub const DEFAULT_DISC_THRESHOLD: f64 = 0.1;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    /// Rejects out-of-range indices, non-finite vertices and zero-area triangles.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        if let Some(k) = vertices.iter().position(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidArgument(format!("vertex {k} is not finite")));
        }
        let n = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&k| k as usize >= n) {
                return Err(Error::InvalidArgument(format!("triangle {t} indexes past {n} vertices")));
            }
            if triangle_area(&vertices, *tri) <= 0.0 {
                return Err(Error::InvalidArgument(format!("triangle {t} is degenerate")));
            }
        }
        Ok(TriangleMesh { vertices, triangles })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|k| self.vertices[k as usize])
    }

    pub fn area(&self, t: usize) -> f64 {
        triangle_area(&self.vertices, self.triangles[t])
    }

    /// Axis-aligned bounds `(min, max)` of the referenced vertices.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let mut it = self.triangles.iter().flatten().map(|&k| self.vertices[k as usize]);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| {
            (
                [lo[0].min(p[0]), lo[1].min(p[1]), lo[2].min(p[2])],
                [hi[0].max(p[0]), hi[1].max(p[1]), hi[2].max(p[2])],
            )
        }))
    }
}

fn triangle_area(v: &[Vec3], t: [u32; 3]) -> f64 {
    let [a, b, c] = t.map(|k| v[k as usize]);
    0.5 * vec3::norm(vec3::cross(vec3::sub(b, a), vec3::sub(c, a)))
}

/// Structured triangulation of the lifted panorama.
///
/// Each quad `(i, j)..(i+1, j+1)` contributes up to two triangles, with the
/// column index wrapped so the seam is closed. A triangle is dropped when any
/// corner is masked, when an edge's depth jump exceeds `disc_thresh` times its
/// smaller endpoint depth, or when it has zero area.
pub fn grid_mesh(d: &DepthPanorama, disc_thresh: f64) -> Result<TriangleMesh> {
    if !(disc_thresh >= 0.0) {
        return Err(Error::InvalidArgument(format!("disc_thresh must be non-negative, got {disc_thresh}")));
    }
    let (w, h) = d.dims();
    let points = lift_grid(d);
    let depth = d.depth();
    let mask = d.mask();

    let mut index = vec![u32::MAX; w * h];
    let mut vertices = Vec::with_capacity(d.valid_count());
    for j in 0..h {
        for i in 0..w {
            if mask[(i, j)] {
                index[j * w + i] = vertices.len() as u32;
                vertices.push(points[(i, j)]);
            }
        }
    }
    if vertices.is_empty() {
        return Err(Error::EmptyMask("depth panorama"));
    }

    let continuous = |p: (usize, usize), q: (usize, usize)| {
        let (a, b) = (depth[p], depth[q]);
        (a - b).abs() <= disc_thresh * a.min(b)
    };
    let mut triangles = Vec::new();
    for j in 0..h.saturating_sub(1) {
        for i in 0..w {
            let ir = (i + 1) % w;
            let a = (i, j);
            let b = (ir, j);
            let c = (i, j + 1);
            let e = (ir, j + 1);
            for tri in [[a, b, e], [a, e, c]] {
                if !tri.iter().all(|&p| mask[p]) {
                    continue;
                }
                if !(continuous(tri[0], tri[1]) && continuous(tri[1], tri[2]) && continuous(tri[2], tri[0])) {
                    continue;
                }
                let t = tri.map(|(x, y)| index[y * w + x]);
                if triangle_area(&vertices, t) > 0.0 {
                    triangles.push(t);
                }
            }
        }
    }
    if triangles.is_empty() {
        return Err(Error::EmptyMask("grid mesh"));
    }
    Ok(TriangleMesh { vertices, triangles })
}
