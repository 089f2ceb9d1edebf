use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accum::CompensatedSum;
use crate::error::{Error, Result};
use crate::vec3::{self, Vec3};

use super::bvh::Bvh;
use super::mesh::TriangleMesh;

/// Samples drawn per RNG stream. Fixed so results do not depend on the
/// number of worker threads.
const CHUNK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HausdorffOptions {
    /// Surface samples per direction.
    pub samples: usize,
    pub seed: u64,
}

impl Default for HausdorffOptions {
    fn default() -> Self {
        HausdorffOptions {
            samples: 10_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HausdorffResult {
    /// Symmetric Hausdorff distance in meters.
    pub max: f64,
    /// Mean sampled distance over both directions.
    pub mean: f64,
    /// `max` as a percentage of the joint bounding-box diagonal.
    pub pct: f64,
}

type TriKey = [[u64; 3]; 3];

fn tri_key(mut t: [Vec3; 3]) -> TriKey {
    t.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    t.map(|p| p.map(f64::to_bits))
}

struct OneSided {
    max: f64,
    sum: CompensatedSum,
    count: usize,
}

fn one_sided(from: &TriangleMesh, to: &TriangleMesh, bvh: &Bvh, samples: usize, seed: u64) -> OneSided {
    let n_tri = from.triangles().len();
    let mut cdf = Vec::with_capacity(n_tri);
    let mut total = 0.0;
    for t in 0..n_tri {
        total += from.area(t);
        cdf.push(total);
    }
    let shared: HashSet<TriKey> = (0..to.triangles().len()).map(|t| tri_key(to.corners(t))).collect();
    let exact: Vec<bool> = (0..n_tri).map(|t| shared.contains(&tri_key(from.corners(t)))).collect();

    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<(f64, CompensatedSum)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = CHUNK.min(samples - c * CHUNK);
            let mut max = 0.0f64;
            let mut sum = CompensatedSum::default();
            for _ in 0..n {
                let x: f64 = rng.gen::<f64>() * total;
                let t = cdf.partition_point(|&v| v <= x).min(n_tri - 1);
                let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
                if exact[t] {
                    sum.add(0.0);
                    continue;
                }
                let [a, b, c] = from.corners(t);
                let s = r1.sqrt();
                let p = vec3::add(
                    vec3::scale(a, 1.0 - s),
                    vec3::add(vec3::scale(b, s * (1.0 - r2)), vec3::scale(c, s * r2)),
                );
                let d = bvh.distance_sq(p).expect("non-empty mesh").sqrt();
                max = max.max(d);
                sum.add(d);
            }
            (max, sum)
        })
        .collect();

    let mut out = OneSided {
        max: 0.0,
        sum: CompensatedSum::default(),
        count: samples,
    };
    for (m, s) in &parts {
        out.max = out.max.max(*m);
        out.sum.merge(s);
    }
    out
}

/// Symmetric sampled Hausdorff distance between two meshes.
///
/// Points are drawn area-uniformly on each surface and their exact distance
/// to the other surface is found through a BVH. Samples on a triangle that
/// also appears verbatim in the other mesh are exactly zero.
pub fn m2m_hausdorff(a: &TriangleMesh, b: &TriangleMesh, opts: &HausdorffOptions) -> Result<HausdorffResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyMask("mesh"));
    }
    if opts.samples == 0 {
        return Err(Error::InvalidArgument("m2m sample count must be positive".into()));
    }
    let (bva, bvb) = (Bvh::build(a), Bvh::build(b));
    // both directions share the seed so swapping the arguments is exact
    let ab = one_sided(a, b, &bvb, opts.samples, opts.seed);
    let ba = one_sided(b, a, &bva, opts.samples, opts.seed);
    let max = ab.max.max(ba.max);
    let mut sum = ab.sum;
    sum.merge(&ba.sum);
    let mean = sum.value() / (ab.count + ba.count) as f64;

    let (lo_a, hi_a) = a.bounds().expect("non-empty");
    let (lo_b, hi_b) = b.bounds().expect("non-empty");
    let lo = [0, 1, 2].map(|k| lo_a[k].min(lo_b[k]));
    let hi = [0, 1, 2].map(|k| hi_a[k].max(hi_b[k]));
    let diag = vec3::norm(vec3::sub(hi, lo));
    let pct = if diag > 0.0 { max / diag * 100.0 } else { 0.0 };
    Ok(HausdorffResult { max, mean, pct })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(z: f64, n: usize) -> TriangleMesh {
        let mut v = Vec::new();
        for y in 0..=n {
            for x in 0..=n {
                v.push([x as f64 / n as f64, y as f64 / n as f64, z]);
            }
        }
        let mut t = Vec::new();
        let id = |x: usize, y: usize| (y * (n + 1) + x) as u32;
        for y in 0..n {
            for x in 0..n {
                t.push([id(x, y), id(x + 1, y), id(x + 1, y + 1)]);
                t.push([id(x, y), id(x + 1, y + 1), id(x, y + 1)]);
            }
        }
        TriangleMesh::new(v, t).unwrap()
    }

    #[test]
    fn identical_meshes_are_zero() {
        let m = square(0.3, 6);
        let r = m2m_hausdorff(&m, &m, &HausdorffOptions::default()).unwrap();
        assert_eq!(r, HausdorffResult { max: 0.0, mean: 0.0, pct: 0.0 });
    }

    #[test]
    fn parallel_squares() {
        let (a, b) = (square(0.0, 4), square(0.25, 3));
        let r = m2m_hausdorff(&a, &b, &HausdorffOptions::default()).unwrap();
        assert!((r.max - 0.25).abs() < 1e-12, "{}", r.max);
        assert!((r.mean - 0.25).abs() < 1e-12);
        let diag = (2.0f64 + 0.0625).sqrt();
        assert!((r.pct - 25.0 / diag).abs() < 1e-9);
    }

    #[test]
    fn symmetric_and_seeded() {
        let a = square(0.0, 5);
        let mut bumped = a.vertices().to_vec();
        bumped[14][2] = 0.4;
        let b = TriangleMesh::new(bumped, a.triangles().to_vec()).unwrap();
        let o = HausdorffOptions { samples: 5000, seed: 9 };
        let ab = m2m_hausdorff(&a, &b, &o).unwrap();
        let ba = m2m_hausdorff(&b, &a, &o).unwrap();
        assert_eq!(ab.max, ba.max);
        assert_eq!(ab.pct, ba.pct);
        assert_eq!(ab, m2m_hausdorff(&a, &b, &o).unwrap());
        assert!(ab.max > 0.3 && ab.max <= 0.4 + 1e-12);
    }

    #[test]
    fn thread_count_does_not_change_result() {
        let (a, b) = (square(0.0, 7), square(0.1, 2));
        let o = HausdorffOptions { samples: 4321, seed: 2 };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let r1 = one.install(|| m2m_hausdorff(&a, &b, &o).unwrap());
        let r4 = four.install(|| m2m_hausdorff(&a, &b, &o).unwrap());
        assert_eq!(r1, r4);
    }

    #[test]
    fn rejects_empty() {
        let m = square(0.0, 1);
        assert!(m2m_hausdorff(&m, &TriangleMesh::default(), &HausdorffOptions::default()).is_err());
        assert!(m2m_hausdorff(&m, &m, &HausdorffOptions { samples: 0, seed: 0 }).is_err());
    }
}
