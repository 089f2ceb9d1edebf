use crate::vec3::{self, Vec3};

use super::mesh::TriangleMesh;

const LEAF_SIZE: usize = 4;

/// Closest point to `p` on triangle `abc` (Ericson, Real-Time Collision
/// Detection, 5.1.5).
pub fn closest_point_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    let ab = vec3::sub(b, a);
    let ac = vec3::sub(c, a);
    let ap = vec3::sub(p, a);
    let d1 = vec3::dot(ab, ap);
    let d2 = vec3::dot(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = vec3::sub(p, b);
    let d3 = vec3::dot(ab, bp);
    let d4 = vec3::dot(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return vec3::add(a, vec3::scale(ab, v));
    }
    let cp = vec3::sub(p, c);
    let d5 = vec3::dot(ab, cp);
    let d6 = vec3::dot(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return vec3::add(a, vec3::scale(ac, w));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return vec3::add(b, vec3::scale(vec3::sub(c, b), w));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    vec3::add(a, vec3::add(vec3::scale(ab, v), vec3::scale(ac, w)))
}

#[derive(Clone, Copy, Debug)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Aabb {
            lo: [f64::INFINITY; 3],
            hi: [f64::NEG_INFINITY; 3],
        }
    }

    fn grow(&mut self, p: Vec3) {
        self.lo = [0, 1, 2].map(|a| self.lo[a].min(p[a]));
        self.hi = [0, 1, 2].map(|a| self.hi[a].max(p[a]));
    }

    fn dist_sq(&self, p: Vec3) -> f64 {
        let mut s = 0.0;
        for ((lo, hi), x) in self.lo.iter().zip(&self.hi).zip(p) {
            let d = (lo - x).max(x - hi).max(0.0);
            s += d * d;
        }
        s
    }
}

#[derive(Clone, Copy, Debug)]
enum Node {
    Leaf { start: u32, end: u32 },
    Inner { left: u32, right: u32 },
}

/// Bounding-volume hierarchy over a mesh's triangles for exact
/// point-to-surface distance queries.
#[derive(Clone, Debug)]
pub struct Bvh {
    tris: Vec<[Vec3; 3]>,
    boxes: Vec<Aabb>,
    nodes: Vec<Node>,
}

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Self {
        let all: Vec<[Vec3; 3]> = (0..mesh.triangles().len()).map(|t| mesh.corners(t)).collect();
        let mut order: Vec<usize> = (0..all.len()).collect();
        let centroids: Vec<Vec3> = all
            .iter()
            .map(|t| vec3::scale(vec3::add(t[0], vec3::add(t[1], t[2])), 1.0 / 3.0))
            .collect();
        let mut bvh = Bvh {
            tris: Vec::with_capacity(all.len()),
            boxes: Vec::new(),
            nodes: Vec::new(),
        };
        if !all.is_empty() {
            bvh.build_range(&all, &centroids, &mut order, 0);
            bvh.tris = order.iter().map(|&k| all[k]).collect();
        }
        bvh
    }

    fn build_range(&mut self, tris: &[[Vec3; 3]], centroids: &[Vec3], order: &mut [usize], start: usize) -> u32 {
        let mut bb = Aabb::empty();
        let mut cb = Aabb::empty();
        for &k in order.iter() {
            for p in tris[k] {
                bb.grow(p);
            }
            cb.grow(centroids[k]);
        }
        let id = self.nodes.len() as u32;
        self.boxes.push(bb);
        let n = order.len();
        if n <= LEAF_SIZE {
            self.nodes.push(Node::Leaf {
                start: start as u32,
                end: (start + n) as u32,
            });
            return id;
        }
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let ax = (0..3)
            .max_by(|&a, &b| (cb.hi[a] - cb.lo[a]).total_cmp(&(cb.hi[b] - cb.lo[b])))
            .unwrap();
        let mid = n / 2;
        order.select_nth_unstable_by(mid, |&a, &b| centroids[a][ax].total_cmp(&centroids[b][ax]));
        let (l, r) = order.split_at_mut(mid);
        let left = self.build_range(tris, centroids, l, start);
        let right = self.build_range(tris, centroids, r, start + mid);
        self.nodes[id as usize] = Node::Inner { left, right };
        id
    }

    pub fn is_empty(&self) -> bool {
        self.tris.is_empty()
    }

    /// Squared distance from `p` to the nearest triangle, or `None` for an
    /// empty hierarchy.
    pub fn distance_sq(&self, p: Vec3) -> Option<f64> {
        if self.tris.is_empty() {
            return None;
        }
        let mut best = f64::INFINITY;
        self.visit(0, p, &mut best);
        Some(best)
    }

    fn visit(&self, node: u32, p: Vec3, best: &mut f64) {
        match self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for t in &self.tris[start as usize..end as usize] {
                    let q = closest_point_on_triangle(p, t[0], t[1], t[2]);
                    *best = best.min(vec3::dist_sq(p, q));
                }
            }
            Node::Inner { left, right } => {
                let dl = self.boxes[left as usize].dist_sq(p);
                let dr = self.boxes[right as usize].dist_sq(p);
                let (first, df, second, ds) = if dl <= dr {
                    (left, dl, right, dr)
                } else {
                    (right, dr, left, dl)
                };
                if df < *best {
                    self.visit(first, p, best);
                }
                if ds < *best {
                    self.visit(second, p, best);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Minimum over the three edge segments and the in-plane projection.
    fn reference_dist_sq(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> f64 {
        let seg = |u: Vec3, v: Vec3| {
            let d = vec3::sub(v, u);
            let t = (vec3::dot(vec3::sub(p, u), d) / vec3::dot(d, d)).clamp(0.0, 1.0);
            vec3::dist_sq(p, vec3::add(u, vec3::scale(d, t)))
        };
        let mut best = seg(a, b).min(seg(b, c)).min(seg(c, a));
        // interior projection if it lands inside
        let n = vec3::cross(vec3::sub(b, a), vec3::sub(c, a));
        let nn = vec3::dot(n, n);
        let t = vec3::dot(vec3::sub(p, a), n) / nn;
        let q = vec3::sub(p, vec3::scale(n, t));
        let inside = [(a, b), (b, c), (c, a)]
            .iter()
            .all(|&(u, v)| vec3::dot(vec3::cross(vec3::sub(v, u), vec3::sub(q, u)), n) >= 0.0);
        if inside {
            best = best.min(vec3::dist_sq(p, q));
        }
        best
    }

    #[test]
    fn closest_point_matches_reference() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut r = || [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        for _ in 0..2000 {
            let (a, b, c, p) = (r(), r(), r(), r());
            let q = closest_point_on_triangle(p, a, b, c);
            let want = reference_dist_sq(p, a, b, c);
            assert!((vec3::dist_sq(p, q) - want).abs() < 1e-9, "{} vs {want}", vec3::dist_sq(p, q));
        }
    }

    #[test]
    fn bvh_matches_linear_scan() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut verts = Vec::new();
        let mut tris = Vec::new();
        for t in 0..300u32 {
            let base: Vec3 = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            for _ in 0..3 {
                verts.push(vec3::add(base, [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)]));
            }
            tris.push([3 * t, 3 * t + 1, 3 * t + 2]);
        }
        let mesh = TriangleMesh::new(verts, tris).unwrap();
        let bvh = Bvh::build(&mesh);
        for _ in 0..500 {
            let p = [rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)];
            let want = (0..mesh.triangles().len())
                .map(|t| {
                    let [a, b, c] = mesh.corners(t);
                    vec3::dist_sq(p, closest_point_on_triangle(p, a, b, c))
                })
                .fold(f64::INFINITY, f64::min);
            assert_eq!(bvh.distance_sq(p).unwrap(), want);
        }
        assert!(Bvh::build(&TriangleMesh::default()).distance_sq([0.0; 3]).is_none());
    }
}
