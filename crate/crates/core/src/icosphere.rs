//! Subdivided icosahedra for uniform sampling of the sphere.
//!
//! The base icosahedron is oriented with two vertices on the y axis (the
//! poles), an upper ring of five vertices at latitude `atan(1/2)` starting at
//! longitude 0 and a lower ring offset by 36°.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::sphere::{self, SphericalCoord};
use crate::vec3::{self, Vec3};

pub const MAX_ORDER: u32 = 8;

/// Order used for the `δ^{ico}` accuracies unless configured otherwise.
pub const DEFAULT_ORDER: u32 = 6;

#[derive(Clone, Debug)]
pub struct IcoSphere {
    order: u32,
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
}

impl IcoSphere {
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// `10·4^K + 2`.
    pub fn expected_vertex_count(order: u32) -> usize {
        10 * 4usize.pow(order) + 2
    }

    /// Nearest pixel `(i, j)` of every vertex on a `width x height` grid.
    pub fn pixel_indices(&self, width: usize, height: usize) -> Vec<(usize, usize)> {
        self.vertices
            .iter()
            .map(|&v| nearest_pixel(SphericalCoord::from_direction(v), width, height))
            .collect()
    }

    /// Writes the vertices as an OBJ point list.
    pub fn write_obj<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# icosphere order {} ({} vertices)", self.order, self.len())?;
        for v in &self.vertices {
            writeln!(out, "v {:.17} {:.17} {:.17}", v[0], v[1], v[2])?;
        }
        Ok(())
    }
}

fn base_icosahedron() -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let ring_lat = 0.5f64.atan();
    let mut vertices = Vec::with_capacity(12);
    vertices.push([0.0, 1.0, 0.0]);
    for k in 0..5 {
        let lon = 2.0 * PI * k as f64 / 5.0;
        vertices.push(sphere::direction(SphericalCoord::new(lon, ring_lat)));
    }
    for k in 0..5 {
        let lon = 2.0 * PI * (k as f64 + 0.5) / 5.0;
        vertices.push(sphere::direction(SphericalCoord::new(lon, -ring_lat)));
    }
    vertices.push([0.0, -1.0, 0.0]);

    let mut faces = Vec::with_capacity(20);
    for k in 0..5u32 {
        let u0 = 1 + k;
        let u1 = 1 + (k + 1) % 5;
        let l0 = 6 + k;
        let l1 = 6 + (k + 1) % 5;
        faces.push([0, u0, u1]);
        faces.push([u0, l0, u1]);
        faces.push([l0, l1, u1]);
        faces.push([11, l1, l0]);
    }
    (vertices, faces)
}

pub fn build_icosphere(order: u32) -> Result<IcoSphere> {
    if order > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "icosphere order {order} exceeds the maximum of {MAX_ORDER}"
        )));
    }
    let (mut vertices, mut faces) = base_icosahedron();
    for _ in 0..order {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::with_capacity(faces.len() * 3 / 2);
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(&mut vertices, &mut midpoints, a, b);
            let bc = midpoint(&mut vertices, &mut midpoints, b, c);
            let ca = midpoint(&mut vertices, &mut midpoints, c, a);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    Ok(IcoSphere {
        order,
        vertices,
        faces,
    })
}

fn midpoint(
    vertices: &mut Vec<Vec3>,
    cache: &mut HashMap<(u32, u32), u32>,
    a: u32,
    b: u32,
) -> u32 {
    let key = (a.min(b), a.max(b));
    *cache.entry(key).or_insert_with(|| {
        let m = vec3::add(vertices[a as usize], vertices[b as usize]);
        vertices.push(vec3::normalize(m).expect("antipodal edge"));
        (vertices.len() - 1) as u32
    })
}

fn nearest_pixel(c: SphericalCoord, width: usize, height: usize) -> (usize, usize) {
    let (u, v) = sphere::spherical_to_pixel(c, width, height);
    let i = (u.round() as i64).rem_euclid(width as i64) as usize;
    let j = (v.round() as i64).clamp(0, height as i64 - 1) as usize;
    (i, j)
}

/// Vertex sampling rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum VertexSampling {
    #[default]
    Nearest,
    Bilinear,
}

/// Samples `grid` at the projected vertices. Entries are `None` where the
/// contributing pixel (any contributing pixel for bilinear) is masked out.
pub fn sample_at_vertices(
    grid: &Grid<f64>,
    mask: Option<&Grid<bool>>,
    sphere: &IcoSphere,
    mode: VertexSampling,
) -> Vec<Option<f64>> {
    let (w, h) = grid.dims();
    let valid = |i: usize, j: usize| mask.is_none_or(|m| m[(i, j)]);
    sphere
        .vertices
        .iter()
        .map(|&v| {
            let c = SphericalCoord::from_direction(v);
            match mode {
                VertexSampling::Nearest => {
                    let (i, j) = nearest_pixel(c, w, h);
                    valid(i, j).then(|| grid[(i, j)])
                }
                VertexSampling::Bilinear => {
                    let (u, v) = sphere::spherical_to_pixel(c, w, h);
                    let taps = sphere::bilinear_taps(w, h, u, v);
                    let mut acc = 0.0;
                    for (i, j, wt) in taps {
                        if wt != 0.0 {
                            if !valid(i, j) {
                                return None;
                            }
                            acc += wt * grid[(i, j)];
                        }
                    }
                    Some(acc)
                }
            }
        })
        .collect()
}
