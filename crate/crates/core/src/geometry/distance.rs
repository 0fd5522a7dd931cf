use super::mesh::TriangleMesh;
use crate::{Error, Result, Vec3};

/// Closest point to `p` on triangle `abc`, including edge and vertex regions.
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = va + vb + vc;
    if denom == 0.0 {
        // collapsed triangle: nearest of its three edges
        return [(a, b), (b, c), (c, a)]
            .into_iter()
            .map(|(s, e)| closest_point_on_segment(p, s, e))
            .min_by(|x, y| (x - p).norm_squared().total_cmp(&(y - p).norm_squared()))
            .expect("three edges");
    }
    let v = vb / denom;
    let w = vc / denom;
    a + ab * v + ac * w
}

fn closest_point_on_segment(p: &Vec3, a: &Vec3, b: &Vec3) -> Vec3 {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    a + d * ((p - a).dot(&d) / len2).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Self {
            lo: Vec3::repeat(f64::INFINITY),
            hi: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Vec3) {
        self.lo = self.lo.inf(p);
        self.hi = self.hi.sup(p);
    }

    fn merge(&self, other: &Aabb) -> Aabb {
        Aabb {
            lo: self.lo.inf(&other.lo),
            hi: self.hi.sup(&other.hi),
        }
    }

    fn distance_squared(&self, p: &Vec3) -> f64 {
        let below = self.lo - p;
        let above = p - self.hi;
        below.sup(&above).sup(&Vec3::zeros()).norm_squared()
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

const LEAF_SIZE: usize = 4;

/// Exact point-to-mesh distance queries accelerated by an AABB hierarchy.
/// Results equal a brute-force minimum over all triangles.
pub struct MeshDistance<'a> {
    mesh: &'a TriangleMesh,
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl<'a> MeshDistance<'a> {
    pub fn new(mesh: &'a TriangleMesh) -> Result<Self> {
        if mesh.is_empty() {
            return Err(Error::EmptyMesh);
        }
        mesh.validate()?;
        let boxes: Vec<Aabb> = (0..mesh.triangles.len())
            .map(|i| {
                let mut b = Aabb::empty();
                for v in mesh.corners(i) {
                    b.grow(&v);
                }
                b
            })
            .collect();
        let centroids: Vec<Vec3> = (0..mesh.triangles.len())
            .map(|i| {
                let [a, b, c] = mesh.corners(i);
                (a + b + c) / 3.0
            })
            .collect();
        let mut order: Vec<usize> = (0..mesh.triangles.len()).collect();
        let mut nodes = Vec::new();
        build(&mut nodes, &mut order, 0, mesh.triangles.len(), &boxes, &centroids);
        Ok(Self { mesh, nodes, order })
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        self.closest_point(p).1
    }

    /// Closest surface point and its distance.
    pub fn closest_point(&self, p: &Vec3) -> (Vec3, f64) {
        let (_, q, d) = self.closest_triangle(p);
        (q, d)
    }

    /// Index of the triangle holding the closest point, the point, and its
    /// distance. Ties go to the triangle visited first.
    pub fn closest_triangle(&self, p: &Vec3) -> (usize, Vec3, f64) {
        let mut best = (usize::MAX, Vec3::zeros(), f64::INFINITY);
        let mut best_sq = f64::INFINITY;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.bounds().distance_squared(p) >= best_sq {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for &tri in &self.order[start..end] {
                        let [a, b, c] = self.mesh.corners(tri);
                        let q = closest_point_on_triangle(p, &a, &b, &c);
                        let d = (q - p).norm_squared();
                        if d < best_sq {
                            best_sq = d;
                            best = (tri, q, d);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[left].bounds().distance_squared(p);
                    let dr = self.nodes[right].bounds().distance_squared(p);
                    // visit the nearer child first
                    if dl < dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        (best.0, best.1, best.2.sqrt())
    }
}

fn build(
    nodes: &mut Vec<Node>,
    order: &mut [usize],
    start: usize,
    end: usize,
    boxes: &[Aabb],
    centroids: &[Vec3],
) -> usize {
    let bounds = order[start..end]
        .iter()
        .fold(Aabb::empty(), |acc, &i| acc.merge(&boxes[i]));
    let id = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { bounds, start, end });
        return id;
    }
    let mut spread = Aabb::empty();
    for &i in &order[start..end] {
        spread.grow(&centroids[i]);
    }
    let axis = (spread.hi - spread.lo).imax();
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
    });
    nodes.push(Node::Leaf { bounds, start, end });
    let left = build(nodes, order, start, mid, boxes, centroids);
    let right = build(nodes, order, mid, end, boxes, centroids);
    nodes[id] = Node::Inner { bounds, left, right };
    id
}

/// Distance from `p` to the nearest point of `mesh`.
///
/// Builds a hierarchy per call; use [`MeshDistance`] for repeated queries.
pub fn point_to_mesh_distance(p: &Vec3, mesh: &TriangleMesh) -> Result<f64> {
    Ok(MeshDistance::new(mesh)?.distance(p))
}

#[cfg(test)]
mod tests {
    use super::super::{extract_mesh, Units};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(p: &Vec3, mesh: &TriangleMesh) -> f64 {
        (0..mesh.triangles.len())
            .map(|i| {
                let [a, b, c] = mesh.corners(i);
                (closest_point_on_triangle(p, &a, &b, &c) - p).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn unit_triangle() -> TriangleMesh {
        TriangleMesh {
            vertices: vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            triangles: vec![[0, 1, 2]],
            units: Units::Normalized,
        }
    }

    #[test]
    fn point_above_right_triangle() {
        let m = unit_triangle();
        assert_eq!(point_to_mesh_distance(&Vec3::new(0.0, 0.0, 1.0), &m).unwrap(), 1.0);
    }

    #[test]
    fn vertex_distance_is_zero() {
        let m = unit_triangle();
        for v in &m.vertices {
            assert_eq!(point_to_mesh_distance(v, &m).unwrap(), 0.0);
        }
    }

    #[test]
    fn edge_and_vertex_regions() {
        let m = unit_triangle();
        // beyond the hypotenuse
        let d = point_to_mesh_distance(&Vec3::new(1.0, 1.0, 0.0), &m).unwrap();
        assert!((d - 0.5f64.sqrt()).abs() < 1e-15);
        // beyond vertex (1,0,0)
        let d = point_to_mesh_distance(&Vec3::new(2.0, -1.0, 0.0), &m).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn collapsed_triangle_falls_back_to_edges() {
        let a = Vec3::zeros();
        let b = Vec3::new(1.0, 0.0, 0.0);
        let q = closest_point_on_triangle(&Vec3::new(0.5, 1.0, 0.0), &a, &b, &b);
        assert!((q - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn empty_mesh_is_error() {
        let m = TriangleMesh::empty(Units::Normalized);
        assert!(matches!(point_to_mesh_distance(&Vec3::zeros(), &m), Err(Error::EmptyMesh)));
    }

    #[test]
    fn hierarchy_matches_brute_force() {
        let mesh = extract_mesh(&|p: &Vec3| (p - Vec3::new(0.1, 0.0, -0.1)).norm() - 0.4, 20, 0.0).unwrap();
        let query = MeshDistance::new(&mesh).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..300 {
            let p = Vec3::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
            let fast = query.distance(&p);
            let slow = brute_force(&p, &mesh);
            assert!((fast - slow).abs() <= 1e-12, "{fast} vs {slow}");
        }
    }
}
