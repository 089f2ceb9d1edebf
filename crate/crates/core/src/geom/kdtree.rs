use crate::vec3::{self, Vec3};

const LEAF_SIZE: usize = 8;

/// Exact nearest-neighbor index over a fixed point set.
///
/// Implicit balanced layout: the subtree over `order[lo..hi]` is split at
/// `mid = (lo + hi) / 2` on the axis stored in `axis[mid]`. Ties in distance
/// resolve to the lowest point index, matching a linear scan.
#[derive(Clone, Debug)]
pub struct KdTree {
    points: Vec<Vec3>,
    order: Vec<u32>,
    axis: Vec<u8>,
}

impl KdTree {
    pub fn build(points: &[Vec3]) -> Self {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut axis = vec![0u8; points.len()];
        build_range(points, &mut order, &mut axis);
        KdTree {
            points: points.to_vec(),
            order,
            axis,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(index, squared distance)` of the closest point.
    pub fn nearest(&self, q: Vec3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(q, 0, self.order.len(), &mut best);
        Some(best)
    }

    fn search(&self, q: Vec3, lo: usize, hi: usize, best: &mut (usize, f64)) {
        if hi - lo <= LEAF_SIZE {
            for &k in &self.order[lo..hi] {
                consider(best, k as usize, vec3::dist_sq(q, self.points[k as usize]));
            }
            return;
        }
        let mid = (lo + hi) / 2;
        let k = self.order[mid] as usize;
        let p = self.points[k];
        consider(best, k, vec3::dist_sq(q, p));
        let ax = self.axis[mid] as usize;
        let diff = q[ax] - p[ax];
        let (first, second) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(q, first.0, first.1, best);
        // `<=` keeps equal-distance candidates reachable for the index tie-break
        if diff * diff <= best.1 {
            self.search(q, second.0, second.1, best);
        }
    }
}

#[inline]
fn consider(best: &mut (usize, f64), k: usize, d: f64) {
    if d < best.1 || (d == best.1 && k < best.0) {
        *best = (k, d);
    }
}

fn build_range(points: &[Vec3], order: &mut [u32], axis: &mut [u8]) {
    let n = order.len();
    if n <= LEAF_SIZE {
        return;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &k in order.iter() {
        let p = points[k as usize];
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let ax = (0..3)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap();
    let mid = n / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize][ax].total_cmp(&points[b as usize][ax])
    });
    axis[mid] = ax as u8;
    let (left, rest) = order.split_at_mut(mid);
    let (left_axis, rest_axis) = axis.split_at_mut(mid);
    build_range(points, left, left_axis);
    build_range(points, &mut rest[1..], &mut rest_axis[1..]);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn brute(points: &[Vec3], q: Vec3) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (k, p) in points.iter().enumerate() {
            consider(&mut best, k, vec3::dist_sq(q, *p));
        }
        best
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 9, 100, 1000] {
            let pts: Vec<Vec3> = (0..n).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
            let tree = KdTree::build(&pts);
            for _ in 0..200 {
                let q = [rng.gen_range(-0.5..1.5), rng.gen_range(-0.5..1.5), rng.gen_range(-0.5..1.5)];
                assert_eq!(tree.nearest(q).unwrap(), brute(&pts, q));
            }
        }
    }

    #[test]
    fn ties_resolve_to_lowest_index() {
        // a lattice has many equidistant neighbors
        let pts: Vec<Vec3> = (0..1000).map(|k| [(k % 10) as f64, ((k / 10) % 10) as f64, (k / 100) as f64]).collect();
        let tree = KdTree::build(&pts);
        for q in [[4.5, 4.5, 4.5], [0.5, 0.0, 0.0], [9.5, 9.5, 9.5], [3.0, 3.5, 7.0]] {
            assert_eq!(tree.nearest(q).unwrap(), brute(&pts, q));
        }
    }

    #[test]
    fn empty_tree() {
        assert!(KdTree::build(&[]).nearest([0.0; 3]).is_none());
    }
}
