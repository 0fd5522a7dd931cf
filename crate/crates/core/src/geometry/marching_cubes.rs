//! Marching cubes over a regular grid on `[-1, 1]^3`.
//!
//! The 256-entry case table is generated from the cube's faces rather than
//! typed in: on each face the iso-contour segments are found from the corner
//! signs, and the segments of all six faces are chained into closed loops,
//! each of which is fan-triangulated. Faces with four crossings (the
//! ambiguous configuration) always cut off their inside corners, so the
//! negative corners of an ambiguous face are never connected across it.
//! Because a face's segments depend only on that face's corners, neighbouring
//! cells agree on every shared face and the extracted surface is closed
//! wherever the level set does not touch the grid boundary.

use super::field::ScalarField;
use super::mesh::{TriangleMesh, Units};
use crate::{Error, Result, Vec3};
use std::sync::OnceLock;

/// Corner `i` of the unit cell sits at `(i & 1, (i >> 1) & 1, (i >> 2) & 1)`.
fn corner_offset(corner: usize) -> [usize; 3] {
    [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1]
}

/// The twelve cell edges as `(low corner, axis)`; the high corner is
/// `low | 1 << axis`.
fn edges() -> [(usize, usize); 12] {
    let mut out = [(0, 0); 12];
    let mut n = 0;
    for axis in 0..3 {
        for corner in 0..8 {
            if corner & (1 << axis) == 0 {
                out[n] = (corner, axis);
                n += 1;
            }
        }
    }
    out
}

fn edge_index(a: usize, b: usize) -> usize {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let axis = (lo ^ hi).trailing_zeros() as usize;
    edges()
        .iter()
        .position(|&e| e == (lo, axis))
        .expect("corners share an edge")
}

/// Corners of each face, counter-clockwise about the outward normal.
fn faces() -> [[usize; 4]; 6] {
    let mut out = [[0; 4]; 6];
    for axis in 0..3 {
        let u = (axis + 1) % 3;
        let v = (axis + 2) % 3;
        for side in 0..2 {
            let mut ring = [(0, 0), (1, 0), (1, 1), (0, 1)]
                .map(|(bu, bv)| (side << axis) | (bu << u) | (bv << v));
            if side == 0 {
                ring.reverse();
            }
            out[2 * axis + side] = ring;
        }
    }
    out
}

/// Closed loops of edge indices for one corner configuration. Bit `i` of
/// `case` is set when corner `i` is inside (below the iso value).
fn loops_for_case(case: usize) -> Vec<Vec<u8>> {
    let inside = |c: usize| case & (1 << c) != 0;
    let mut next = [usize::MAX; 12];
    for face in faces() {
        // crossings in traversal order: (edge, entering the inside region)
        let crossings: Vec<(usize, bool)> = (0..4)
            .filter_map(|j| {
                let a = face[j];
                let b = face[(j + 1) % 4];
                (inside(a) != inside(b)).then(|| (edge_index(a, b), inside(b)))
            })
            .collect();
        for (k, &(edge, entering)) in crossings.iter().enumerate() {
            if entering {
                let (exit, _) = crossings[(k + 1) % crossings.len()];
                next[edge] = exit;
            }
        }
    }
    let mut used = [false; 12];
    let mut loops = Vec::new();
    for start in 0..12 {
        if next[start] == usize::MAX || used[start] {
            continue;
        }
        let mut ring = Vec::new();
        let mut e = start;
        while !used[e] {
            used[e] = true;
            ring.push(e as u8);
            e = next[e];
        }
        loops.push(ring);
    }
    loops
}

/// Triangles (as edge-index triples) for all 256 corner configurations.
pub fn case_table() -> &'static [Vec<[u8; 3]>] {
    static TABLE: OnceLock<Vec<Vec<[u8; 3]>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..256)
            .map(|case| {
                loops_for_case(case)
                    .iter()
                    .flat_map(|ring| (1..ring.len() - 1).map(move |i| [ring[0], ring[i], ring[i + 1]]))
                    .collect()
            })
            .collect()
    })
}

/// Coordinate of grid index `i` on a `resolution`-point axis spanning `[-1, 1]`.
pub fn grid_coordinate(i: usize, resolution: usize) -> f64 {
    -1.0 + 2.0 * i as f64 / (resolution - 1) as f64
}

const MIN_AREA: f64 = 1e-12;

/// Extracts the `iso` level set of `field` sampled on a `resolution^3` grid
/// over `[-1, 1]^3`. Vertices sit on sign-changing grid edges at the linearly
/// interpolated crossing and are shared between neighbouring cells.
pub fn extract_mesh<F: ScalarField + ?Sized>(field: &F, resolution: usize, iso: f64) -> Result<TriangleMesh> {
    if resolution < 8 {
        return Err(Error::Degenerate(format!("grid resolution must be at least 8, got {resolution}")));
    }
    let r = resolution;
    let coords: Vec<f64> = (0..r).map(|i| grid_coordinate(i, r)).collect();
    let mut points = Vec::with_capacity(r * r * r);
    for k in 0..r {
        for j in 0..r {
            for i in 0..r {
                points.push(Vec3::new(coords[i], coords[j], coords[k]));
            }
        }
    }
    let values = field.values(&points);
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        let p = points[bad];
        return Err(Error::NonFiniteField(p.x, p.y, p.z));
    }

    let index = |i: usize, j: usize, k: usize| i + r * (j + r * k);
    let table = case_table();
    let cell_edges = edges();
    let mut edge_vertex = vec![u32::MAX; 3 * r * r * r];
    let mut corner_vertex = vec![u32::MAX; r * r * r];
    let mut mesh = TriangleMesh::empty(Units::Normalized);

    let mut vertex_for = |mesh: &mut TriangleMesh, a: usize, b: usize, axis: usize| -> u32 {
        let (va, vb) = (values[a], values[b]);
        let t = ((iso - va) / (vb - va)).clamp(0.0, 1.0);
        // crossings exactly on a grid point collapse onto that point
        let slot = if t == 0.0 {
            &mut corner_vertex[a]
        } else if t == 1.0 {
            &mut corner_vertex[b]
        } else {
            &mut edge_vertex[3 * a + axis]
        };
        if *slot == u32::MAX {
            *slot = mesh.vertices.len() as u32;
            mesh.vertices.push(points[a] + (points[b] - points[a]) * t);
        }
        *slot
    };

    for k in 0..r - 1 {
        for j in 0..r - 1 {
            for i in 0..r - 1 {
                let corner_index = |c: usize| {
                    let [dx, dy, dz] = corner_offset(c);
                    index(i + dx, j + dy, k + dz)
                };
                let case = (0..8).fold(0usize, |acc, c| {
                    if values[corner_index(c)] < iso {
                        acc | (1 << c)
                    } else {
                        acc
                    }
                });
                for tri in &table[case] {
                    let ids = tri.map(|e| {
                        let (lo, axis) = cell_edges[e as usize];
                        let a = corner_index(lo);
                        let b = corner_index(lo | (1 << axis));
                        vertex_for(&mut mesh, a, b, axis)
                    });
                    if ids[0] == ids[1] || ids[1] == ids[2] || ids[0] == ids[2] {
                        continue;
                    }
                    let [pa, pb, pc] = ids.map(|v| mesh.vertices[v as usize]);
                    if 0.5 * (pb - pa).cross(&(pc - pa)).norm() <= MIN_AREA {
                        continue;
                    }
                    mesh.triangles.push(ids);
                }
            }
        }
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_cases_are_empty() {
        assert!(case_table()[0].is_empty());
        assert!(case_table()[255].is_empty());
    }

    #[test]
    fn single_corner_gives_one_outward_triangle() {
        for corner in 0..8 {
            let tris = &case_table()[1 << corner];
            assert_eq!(tris.len(), 1);
            // with edge midpoints as vertices the normal points away from the
            // inside corner
            let cell = edges();
            let mid = |e: u8| {
                let (lo, axis) = cell[e as usize];
                let o = corner_offset(lo);
                let mut p = Vec3::new(o[0] as f64, o[1] as f64, o[2] as f64);
                p[axis] += 0.5;
                p
            };
            let [a, b, c] = tris[0].map(mid);
            let n = (b - a).cross(&(c - a));
            let o = corner_offset(corner);
            let inside = Vec3::new(o[0] as f64, o[1] as f64, o[2] as f64);
            assert!(n.dot(&(a - inside)) > 0.0, "corner {corner}");
        }
    }

    #[test]
    fn complementary_cases_have_same_triangle_count_when_unambiguous() {
        // a half-space split: four corners on one side
        assert_eq!(case_table()[0b0000_1111].len(), 2);
        assert_eq!(case_table()[0b1111_0000].len(), 2);
    }

    #[test]
    fn constant_field_yields_empty_mesh() {
        let m = extract_mesh(&|_: &Vec3| 1.0, 16, 0.0).unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn low_resolution_rejected() {
        assert!(extract_mesh(&|p: &Vec3| p.norm() - 0.5, 4, 0.0).is_err());
    }

    #[test]
    fn non_finite_field_rejected() {
        let err = extract_mesh(&|p: &Vec3| if p.x > 0.9 { f64::NAN } else { 1.0 }, 8, 0.0);
        assert!(matches!(err, Err(Error::NonFiniteField(..))));
    }

    #[test]
    fn sphere_vertices_on_surface_and_closed() {
        let sphere = |p: &Vec3| p.norm() - 0.5;
        let m = extract_mesh(&sphere, 64, 0.0).unwrap();
        assert!(!m.is_empty());
        let worst = m.vertices.iter().map(|v| (v.norm() - 0.5).abs()).fold(0.0, f64::max);
        assert!(worst <= 0.01, "worst radius error {worst}");
        assert!(m.is_closed());
        let volume = m.signed_volume();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 0.125;
        assert!((volume - exact).abs() / exact < 0.01, "volume {volume}");
    }

    #[test]
    fn ambiguous_random_fields_stay_closed() {
        // A field with many saddles: gyroid-like lattice clipped to a ball so
        // the level set never reaches the grid boundary.
        let f = |p: &Vec3| {
            let g = (7.0 * p.x).sin() * (7.0 * p.y).cos()
                + (7.0 * p.y).sin() * (7.0 * p.z).cos()
                + (7.0 * p.z).sin() * (7.0 * p.x).cos();
            g.max(p.norm() - 0.8)
        };
        let m = extract_mesh(&f, 24, 0.0).unwrap();
        assert!(!m.is_empty());
        assert!(m.is_closed());
    }

    #[test]
    fn exact_grid_hits_are_welded() {
        // plane through a grid layer: every crossing lands on grid points
        let r = 9;
        let level = grid_coordinate(4, r);
        let slab = |p: &Vec3| (p.z - level).abs().max(p.x.abs().max(p.y.abs()) - 0.5) - 0.25;
        let m = extract_mesh(&slab, r, 0.0).unwrap();
        m.validate().unwrap();
        assert!(m.triangles.iter().all(|t| t[0] != t[1] && t[1] != t[2] && t[0] != t[2]));
    }
}
