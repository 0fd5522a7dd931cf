//! ASCII Wavefront OBJ with `v x y z` vertices and 1-based `f i j k` faces.

use crate::geometry::{TriangleMesh, Units};
use crate::{Error, Result, Vec3};
use std::fmt::Write as _;
use std::path::Path;

pub fn format_obj(mesh: &TriangleMesh) -> String {
    let mut out = String::with_capacity(mesh.vertices.len() * 60 + mesh.triangles.len() * 24);
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}

pub fn write_obj(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    std::fs::write(path, format_obj(mesh)).map_err(|e| Error::io(path, e))
}

/// Parses vertices and triangular faces. Face entries may carry `/vt/vn`
/// suffixes, which are ignored; other record types are skipped.
pub fn parse_obj(text: &str, path: &Path, units: Units) -> Result<TriangleMesh> {
    let mut mesh = TriangleMesh::empty(units);
    let mut faces = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut parts = line.split('#').next().unwrap_or("").split_whitespace();
        match parts.next() {
            Some("v") => {
                let xyz: Vec<f64> = parts
                    .take(3)
                    .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
                    .collect::<Option<_>>()
                    .ok_or_else(|| Error::parse(path, line_no, "vertex coordinates must be finite numbers"))?;
                if xyz.len() != 3 {
                    return Err(Error::parse(path, line_no, "vertex needs 3 coordinates"));
                }
                mesh.vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let ids: Vec<u32> = parts
                    .map(|s| s.split('/').next().unwrap_or("").parse::<u32>().ok().filter(|&v| v >= 1))
                    .collect::<Option<_>>()
                    .ok_or_else(|| Error::parse(path, line_no, "face indices must be positive integers"))?;
                if ids.len() != 3 {
                    return Err(Error::parse(path, line_no, format!("only triangles are supported, got {} indices", ids.len())));
                }
                faces.push((line_no, [ids[0] - 1, ids[1] - 1, ids[2] - 1]));
            }
            _ => {}
        }
    }
    for (line_no, f) in faces {
        if f.iter().any(|&v| v as usize >= mesh.vertices.len()) {
            return Err(Error::parse(path, line_no, "face references a missing vertex"));
        }
        mesh.triangles.push(f);
    }
    Ok(mesh)
}

pub fn read_obj(path: &Path, units: Units) -> Result<TriangleMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text, path, units)
}
