//! Signed distance to a closed triangle mesh.
//!
//! Magnitudes are exact point-to-mesh distances. Signs come from a flood fill
//! over a grid around the mesh: starting at the grid boundary, outside is
//! propagated along grid edges whose endpoints both lie farther than half a
//! cell from the surface, which no surface can cross. A query point at least
//! one cell away from the surface takes the label of its nearest grid node;
//! closer points use the face normal of the nearest triangle.
//!
//! Voids enclosed by the surface are unreachable from the boundary and count
//! as inside, so the mesh should bound a single solid without cavities.

use super::distance::MeshDistance;
use super::field::ScalarField;
use super::mesh::TriangleMesh;
use crate::{Error, Result, Vec3};
use rayon::prelude::*;
use std::collections::VecDeque;

pub struct MeshSdf<'a> {
    mesh: &'a TriangleMesh,
    query: MeshDistance<'a>,
    origin: Vec3,
    spacing: f64,
    dims: [usize; 3],
    /// +1 outside, -1 inside, 0 within half a cell of the surface.
    labels: Vec<i8>,
}

impl<'a> MeshSdf<'a> {
    /// `resolution` grid points along the longest bounding-box side.
    pub fn new(mesh: &'a TriangleMesh, resolution: usize) -> Result<Self> {
        if resolution < 4 {
            return Err(Error::Degenerate("sign grid needs at least 4 points per axis".into()));
        }
        let query = MeshDistance::new(mesh)?;
        let (lo, hi) = mesh.bounding_box().ok_or(Error::EmptyMesh)?;
        let extent = (hi - lo).max();
        if !(extent > 0.0) {
            return Err(Error::Degenerate("mesh has zero extent".into()));
        }
        let spacing = extent / (resolution - 1) as f64;
        // two cells of margin keep the grid boundary outside the surface
        let origin = lo - Vec3::repeat(2.0 * spacing);
        let dims = [0, 1, 2].map(|a| ((hi[a] - lo[a]) / spacing).ceil() as usize + 5);
        let n = dims[0] * dims[1] * dims[2];
        let node = |idx: usize| {
            let i = idx % dims[0];
            let j = (idx / dims[0]) % dims[1];
            let k = idx / (dims[0] * dims[1]);
            origin + Vec3::new(i as f64, j as f64, k as f64) * spacing
        };
        let clear: Vec<bool> = (0..n)
            .into_par_iter()
            .map(|idx| query.distance(&node(idx)) > 0.5 * spacing)
            .collect();

        let mut labels = vec![0i8; n];
        let mut queue = VecDeque::new();
        for idx in 0..n {
            let i = idx % dims[0];
            let j = (idx / dims[0]) % dims[1];
            let k = idx / (dims[0] * dims[1]);
            let boundary = i == 0 || j == 0 || k == 0 || i + 1 == dims[0] || j + 1 == dims[1] || k + 1 == dims[2];
            if boundary && clear[idx] {
                labels[idx] = 1;
                queue.push_back(idx);
            }
        }
        let strides = [1, dims[0], dims[0] * dims[1]];
        while let Some(idx) = queue.pop_front() {
            let coord = [idx % dims[0], (idx / dims[0]) % dims[1], idx / (dims[0] * dims[1])];
            for axis in 0..3 {
                for forward in [false, true] {
                    let next = if forward {
                        if coord[axis] + 1 == dims[axis] {
                            continue;
                        }
                        idx + strides[axis]
                    } else {
                        if coord[axis] == 0 {
                            continue;
                        }
                        idx - strides[axis]
                    };
                    if labels[next] == 0 && clear[next] {
                        labels[next] = 1;
                        queue.push_back(next);
                    }
                }
            }
        }
        for (label, &c) in labels.iter_mut().zip(&clear) {
            if *label == 0 && c {
                *label = -1;
            }
        }
        Ok(Self { mesh, query, origin, spacing, dims, labels })
    }

    fn nearest_label(&self, p: &Vec3) -> Option<i8> {
        let rel = (p - self.origin) / self.spacing;
        let mut idx = 0;
        let mut stride = 1;
        for a in 0..3 {
            let c = rel[a].round();
            if !(c >= 0.0 && c < self.dims[a] as f64) {
                return None;
            }
            idx += c as usize * stride;
            stride *= self.dims[a];
        }
        Some(self.labels[idx])
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }
}

impl ScalarField for MeshSdf<'_> {
    fn value(&self, p: &Vec3) -> f64 {
        let (tri, q, d) = self.query.closest_triangle(p);
        let label = self.nearest_label(p);
        // outside the grid everything is exterior
        let Some(label) = label else { return d };
        if d >= self.spacing && label != 0 {
            return f64::from(label) * d;
        }
        let [a, b, c] = self.mesh.corners(tri);
        let normal = (b - a).cross(&(c - a));
        if (p - q).dot(&normal) >= 0.0 {
            d
        } else {
            -d
        }
    }
}
