use crate::{Error, Result, Vec3};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Normalized,
    Millimeters,
}

/// Indexed triangle surface. Triangles are wound counter-clockwise seen from
/// the outside (positive side of the level set).
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub units: Units,
}

impl TriangleMesh {
    pub fn empty(units: Units) -> Self {
        Self {
            vertices: Vec::new(),
            triangles: Vec::new(),
            units,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if let Some(t) = self
            .triangles
            .iter()
            .find(|t| t.iter().any(|&i| i as usize >= n))
        {
            return Err(Error::Degenerate(format!(
                "triangle {t:?} references a vertex beyond {n}"
            )));
        }
        if self.vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::Degenerate("non-finite mesh vertex".into()));
        }
        Ok(())
    }

    pub fn corners(&self, index: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[index];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn triangle_area(&self, index: usize) -> f64 {
        let [a, b, c] = self.corners(index);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| self.triangle_area(i)).sum()
    }

    /// Volume enclosed by a closed, outward-wound mesh.
    pub fn signed_volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| {
                let [a, b, c] = self.corners(i);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// True when every undirected edge is used by exactly two triangles, once
    /// in each direction.
    pub fn is_closed(&self) -> bool {
        let mut directed: HashMap<(u32, u32), u32> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                *directed.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
            }
        }
        !self.triangles.is_empty()
            && directed
                .iter()
                .all(|(&(a, b), &count)| count == 1 && directed.get(&(b, a)) == Some(&1))
    }

    /// Applies `f` to every vertex and relabels the units.
    pub fn map_vertices(&self, units: Units, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self {
            vertices: self.vertices.iter().map(f).collect(),
            triangles: self.triangles.clone(),
            units,
        }
    }

    pub fn bounding_box(&self) -> Option<(Vec3, Vec3)> {
        let mut iter = self.vertices.iter();
        let first = *iter.next()?;
        Some(iter.fold((first, first), |(lo, hi), v| (lo.inf(v), hi.sup(v))))
    }
}
