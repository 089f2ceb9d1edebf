use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::mesh::TriangleMesh;
use super::OrientedPointCloud;

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

/// Binary little-endian PLY with `x y z nx ny nz` float properties.
pub fn write_points_ply(path: &Path, cloud: &OrientedPointCloud) -> Result<()> {
    let mut out = create(path)?;
    let mut body = || -> std::io::Result<()> {
        write!(
            out,
            "ply\nformat binary_little_endian 1.0\nelement vertex {}\n\
             property float x\nproperty float y\nproperty float z\n\
             property float nx\nproperty float ny\nproperty float nz\nend_header\n",
            cloud.len()
        )?;
        for (p, n) in cloud.points.iter().zip(&cloud.normals) {
            for v in p.iter().chain(n) {
                out.write_all(&(*v as f32).to_le_bytes())?;
            }
        }
        out.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

pub fn write_mesh_ply(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let mut out = create(path)?;
    let mut body = || -> std::io::Result<()> {
        write!(
            out,
            "ply\nformat binary_little_endian 1.0\nelement vertex {}\n\
             property float x\nproperty float y\nproperty float z\n\
             element face {}\nproperty list uchar uint vertex_indices\nend_header\n",
            mesh.vertices().len(),
            mesh.triangles().len()
        )?;
        for p in mesh.vertices() {
            for v in p {
                out.write_all(&(*v as f32).to_le_bytes())?;
            }
        }
        for t in mesh.triangles() {
            out.write_all(&[3u8])?;
            for k in t {
                out.write_all(&k.to_le_bytes())?;
            }
        }
        out.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

pub fn write_mesh_obj(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let mut out = create(path)?;
    let mut body = || -> std::io::Result<()> {
        for p in mesh.vertices() {
            writeln!(out, "v {} {} {}", p[0], p[1], p[2])?;
        }
        for t in mesh.triangles() {
            writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        out.flush()
    };
    body().map_err(|e| Error::io(path, e))
}
