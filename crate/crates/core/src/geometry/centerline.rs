//! Centerlines and inscribed-sphere diameter profiles of a level set.
//!
//! Stations are spaced evenly along a chosen axis between the axial extremes
//! of the interior. At each station the center starts at the centroid of the
//! largest bounded interior section of the station plane and then descends the field
//! within that plane toward its minimum, which is the center of the largest
//! sphere inscribed at that station. The inscribed diameter there is
//! `2 |f(center)|`.
//!
//! Only the largest connected interior region on the grid is considered, and
//! stations whose refined center is not inside are skipped.
//!
//! The fitting losses see the field only through `|f|` and `|grad f|`, so a
//! learned field may come out with inside and outside swapped. The side that
//! holds most of the grid boundary is taken as outside, and the field is
//! negated for the whole computation when that side is negative.

use super::field::ScalarField;
use super::marching_cubes::grid_coordinate;
use super::normalize::NormalizationTransform;
use crate::{Error, Result, Vec3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterlineOptions {
    /// Points per axis of the grid used to locate the axial extremes.
    pub grid_resolution: usize,
    /// Points per axis of the in-plane grid used to seed each station.
    pub plane_resolution: usize,
    /// Descent stops once the step length falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Central-difference step for in-plane gradients.
    pub gradient_step: f64,
}

impl Default for CenterlineOptions {
    fn default() -> Self {
        Self {
            grid_resolution: 65,
            plane_resolution: 65,
            tolerance: 1e-4,
            max_iterations: 100,
            gradient_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterlineStation {
    /// Position of the station plane along the axis.
    pub offset: f64,
    pub center: Vec3,
    /// Field value at the refined center, oriented so that inside is negative.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Centerline {
    pub stations: Vec<CenterlineStation>,
    /// Indices of requested stations whose plane had no bounded interior
    /// section or whose refined center was not inside.
    pub skipped: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiameterStation {
    pub arclength_mm: f64,
    pub center_mm: Vec3,
    pub diameter_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiameterProfile {
    pub stations: Vec<DiameterStation>,
    pub skipped: Vec<usize>,
}

impl DiameterProfile {
    pub fn max_diameter_mm(&self) -> Option<f64> {
        self.stations.iter().map(|s| s.diameter_mm).reduce(f64::max)
    }
}

fn plane_basis(axis: &Vec3) -> (Vec3, Vec3) {
    let helper = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = axis.cross(&helper).normalize();
    let v = axis.cross(&u);
    (u, v)
}

/// Extracts centerline stations of the region where `field < 0`.
pub fn centerline<F: ScalarField + ?Sized>(
    field: &F,
    axis: &Vec3,
    n_stations: usize,
    options: &CenterlineOptions,
) -> Result<Centerline> {
    stations(field, None, axis, n_stations, options)
}

/// Like [`centerline`], but each station center is then moved within its
/// cross-section to the point of largest `clearance`, typically the distance
/// to the surface, which makes it the center of the largest inscribed sphere
/// even where `field` is not a distance function.
pub fn centerline_with_clearance<F: ScalarField + ?Sized>(
    field: &F,
    clearance: &(dyn Fn(&Vec3) -> f64 + Sync),
    axis: &Vec3,
    n_stations: usize,
    options: &CenterlineOptions,
) -> Result<Centerline> {
    stations(field, Some(clearance), axis, n_stations, options)
}

fn stations<F: ScalarField + ?Sized>(
    field: &F,
    clearance: Option<&(dyn Fn(&Vec3) -> f64 + Sync)>,
    axis: &Vec3,
    n_stations: usize,
    options: &CenterlineOptions,
) -> Result<Centerline> {
    let norm = axis.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Degenerate("centerline axis must be a non-zero vector".into()));
    }
    if n_stations == 0 || options.grid_resolution < 2 || options.plane_resolution < 2 {
        return Err(Error::Degenerate("centerline needs stations and grids of at least 2 points".into()));
    }
    let axis = axis / norm;

    // axial extent of the interior
    let r = options.grid_resolution;
    let mut grid = Vec::with_capacity(r * r * r);
    for k in 0..r {
        for j in 0..r {
            for i in 0..r {
                grid.push(Vec3::new(grid_coordinate(i, r), grid_coordinate(j, r), grid_coordinate(k, r)));
            }
        }
    }
    let mut values = field.values(&grid);
    let on_boundary = |idx: usize| {
        [idx % r, (idx / r) % r, idx / (r * r)].iter().any(|&c| c == 0 || c + 1 == r)
    };
    let balance: i64 = (0..values.len())
        .filter(|&idx| on_boundary(idx))
        .map(|idx| if values[idx] < 0.0 { -1 } else if values[idx] > 0.0 { 1 } else { 0 })
        .sum();
    let sign = if balance < 0 { -1.0 } else { 1.0 };
    if sign < 0.0 {
        values.iter_mut().for_each(|v| *v = -*v);
    }
    let field = &Oriented { inner: field, sign };
    let main = largest_component(&values, r);
    let (lo, hi) = grid
        .iter()
        .zip(&main)
        .filter(|(_, m)| **m)
        .map(|(p, _)| p.dot(&axis))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)));
    if lo > hi {
        return Err(Error::Degenerate("level set has no interior on the grid".into()));
    }
    let in_main = |p: &Vec3| {
        let mut idx = 0;
        let mut stride = 1;
        for a in 0..3 {
            let c = ((p[a] + 1.0) * 0.5 * (r - 1) as f64).round();
            if !(0.0..=(r - 1) as f64).contains(&c) {
                return false;
            }
            idx += c as usize * stride;
            stride *= r;
        }
        main[idx]
    };

    let (u, v) = plane_basis(&axis);
    let pr = options.plane_resolution;
    let mut result = Centerline::default();
    for station in 0..n_stations {
        let offset = if n_stations == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * station as f64 / (n_stations - 1) as f64
        };
        let origin = axis * offset;
        let plane: Vec<Vec3> = (0..pr * pr)
            .map(|idx| origin + u * grid_coordinate(idx % pr, pr) + v * grid_coordinate(idx / pr, pr))
            .collect();
        let plane_values = field.values(&plane);
        let inside: Vec<bool> = plane.iter().zip(&plane_values).map(|(p, val)| *val < 0.0 && in_main(p)).collect();
        let Some(section) = enclosed_section(&inside, pr) else {
            result.skipped.push(station);
            continue;
        };
        let seed = section.iter().fold(Vec3::zeros(), |s, &i| s + plane[i]) / section.len() as f64;
        let h = 2.0 / (pr - 1) as f64;
        let cell = |x: f64| ((x + 1.0) / h).round();
        let in_section = |p: &Vec3| {
            let (a, b) = (cell((p - origin).dot(&u)), cell((p - origin).dot(&v)));
            (0.0..pr as f64).contains(&a)
                && (0.0..pr as f64).contains(&b)
                && section.binary_search(&(a as usize + b as usize * pr)).is_ok()
        };
        let in_domain = |p: &Vec3| p.amax() <= 1.0;
        let mut center = descend_in_plane(field, seed, &u, &v, options, &in_domain);
        // the refined center must stay in the section it was seeded from
        if !in_section(&center) {
            let best = section.iter().copied().min_by(|&i, &j| plane_values[i].total_cmp(&plane_values[j])).unwrap();
            center = plane[best];
        }
        if let Some(clearance) = clearance {
            let deficit = |p: &Vec3| -clearance(p);
            center = descend_in_plane(&deficit, center, &u, &v, options, &|p| in_domain(p) && in_section(p));
        }
        let value = field.value(&center);
        if !(value < 0.0) {
            result.skipped.push(station);
            continue;
        }
        result.stations.push(CenterlineStation { offset, center, value });
    }
    Ok(result)
}

/// Largest 4-connected set of `inside` plane points that does not touch the
/// edge of the plane grid, as sorted indices. Regions reaching the edge of the
/// domain are not part of a bounded cross-section.
fn enclosed_section(inside: &[bool], pr: usize) -> Option<Vec<usize>> {
    let mut seen = vec![false; inside.len()];
    let mut best: Option<Vec<usize>> = None;
    for start in 0..inside.len() {
        if !inside[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut members = Vec::new();
        let mut touches_edge = false;
        while let Some(idx) = stack.pop() {
            members.push(idx);
            let (i, j) = (idx % pr, idx / pr);
            touches_edge |= i == 0 || j == 0 || i + 1 == pr || j + 1 == pr;
            let mut visit = |n: usize| {
                if inside[n] && !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            };
            if i > 0 {
                visit(idx - 1);
            }
            if i + 1 < pr {
                visit(idx + 1);
            }
            if j > 0 {
                visit(idx - pr);
            }
            if j + 1 < pr {
                visit(idx + pr);
            }
        }
        if !touches_edge && best.as_ref().is_none_or(|b| members.len() > b.len()) {
            members.sort_unstable();
            best = Some(members);
        }
    }
    best
}

struct Oriented<'a, F: ?Sized> {
    inner: &'a F,
    sign: f64,
}

impl<F: ScalarField + ?Sized> ScalarField for Oriented<'_, F> {
    fn value(&self, p: &Vec3) -> f64 {
        self.sign * self.inner.value(p)
    }

    fn values(&self, points: &[Vec3]) -> Vec<f64> {
        let mut v = self.inner.values(points);
        v.iter_mut().for_each(|x| *x *= self.sign);
        v
    }
}

/// Marks the largest 6-connected set of grid points with negative values.
/// Learned fields can dip below zero in small pockets away from the surface;
/// those must not pull stations away from the main lumen.
fn largest_component(values: &[f64], r: usize) -> Vec<bool> {
    let mut label = vec![u32::MAX; values.len()];
    let mut best = (0usize, u32::MAX);
    let mut next_label = 0u32;
    let mut stack = Vec::new();
    for seed in 0..values.len() {
        if values[seed] >= 0.0 || label[seed] != u32::MAX {
            continue;
        }
        let id = next_label;
        next_label += 1;
        let mut size = 0;
        label[seed] = id;
        stack.push(seed);
        while let Some(idx) = stack.pop() {
            size += 1;
            let coord = [idx % r, (idx / r) % r, idx / (r * r)];
            let mut stride = 1;
            for c in coord {
                if c > 0 && values[idx - stride] < 0.0 && label[idx - stride] == u32::MAX {
                    label[idx - stride] = id;
                    stack.push(idx - stride);
                }
                if c + 1 < r && values[idx + stride] < 0.0 && label[idx + stride] == u32::MAX {
                    label[idx + stride] = id;
                    stack.push(idx + stride);
                }
                stride *= r;
            }
        }
        if size > best.0 {
            best = (size, id);
        }
    }
    label.iter().map(|&l| l == best.1 && l != u32::MAX).collect()
}

/// Backtracking descent on the field restricted to the plane spanned by
/// `u` and `v` through `start`, kept inside `[-1, 1]^3`.
fn descend_in_plane<F: ScalarField + ?Sized>(
    field: &F,
    start: Vec3,
    u: &Vec3,
    v: &Vec3,
    options: &CenterlineOptions,
    admissible: &dyn Fn(&Vec3) -> bool,
) -> Vec3 {
    let h = options.gradient_step;
    let mut c = start;
    let mut fc = field.value(&c);
    let mut step = 0.1;
    for _ in 0..options.max_iterations {
        let gu = (field.value(&(c + u * h)) - field.value(&(c - u * h))) / (2.0 * h);
        let gv = (field.value(&(c + v * h)) - field.value(&(c - v * h))) / (2.0 * h);
        let g = u * gu + v * gv;
        let gn = g.norm();
        if !(gn > 0.0) {
            break;
        }
        let dir = -g / gn;
        let mut moved = false;
        while step >= options.tolerance {
            let cand = c + dir * step;
            if !admissible(&cand) {
                step *= 0.5;
                continue;
            }
            let fcand = field.value(&cand);
            if fcand < fc {
                c = cand;
                fc = fcand;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    c
}

/// Inscribed-sphere diameter profile in millimeters.
///
/// Diameters are `2 |f(center)|` scaled by the transform; arclength
/// accumulates along the refined centers in physical space.
pub fn diameter_profile<F: ScalarField + ?Sized>(
    field: &F,
    axis: &Vec3,
    n_stations: usize,
    tr: &NormalizationTransform,
    options: &CenterlineOptions,
) -> Result<DiameterProfile> {
    let line = centerline(field, axis, n_stations, options)?;
    Ok(profile_from_centerline(&line, tr, |s| s.value.abs()))
}

/// Diameter profile along `line` with inscribed radii (normalized units)
/// supplied by `radius`.
pub fn profile_from_centerline(
    line: &Centerline,
    tr: &NormalizationTransform,
    radius: impl Fn(&CenterlineStation) -> f64,
) -> DiameterProfile {
    let mut stations = Vec::with_capacity(line.stations.len());
    let mut arclength = 0.0;
    let mut previous: Option<Vec3> = None;
    for s in &line.stations {
        let center_mm = tr.to_physical(&s.center);
        if let Some(prev) = previous {
            arclength += (center_mm - prev).norm();
        }
        previous = Some(center_mm);
        stations.push(DiameterStation {
            arclength_mm: arclength,
            center_mm,
            diameter_mm: tr.distance_to_mm(2.0 * radius(s)),
        });
    }
    DiameterProfile {
        stations,
        skipped: line.skipped.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shifted;

    fn capsule(p: &Vec3) -> f64 {
        let z = p.z.clamp(-0.5, 0.5);
        (p - Vec3::new(0.0, 0.0, z)).norm() - 0.3
    }

    #[test]
    fn capsule_centerline_on_axis() {
        let line = centerline(&capsule, &Vec3::z(), 21, &CenterlineOptions::default()).unwrap();
        assert!(line.skipped.is_empty());
        assert_eq!(line.stations.len(), 21);
        for s in &line.stations {
            assert!(s.center.xy().norm() <= 1e-2, "{:?}", s.center);
        }
    }

    #[test]
    fn swapped_sign_gives_same_stations() {
        let flipped = |p: &Vec3| -capsule(p);
        let opts = CenterlineOptions::default();
        let a = centerline(&capsule, &Vec3::z(), 11, &opts).unwrap();
        let b = centerline(&flipped, &Vec3::z(), 11, &opts).unwrap();
        assert_eq!(a.stations.len(), b.stations.len());
        for (x, y) in a.stations.iter().zip(&b.stations) {
            assert!((x.center - y.center).norm() < 1e-9);
            assert!((x.value - y.value).abs() < 1e-12 && y.value < 0.0);
        }
    }

    #[test]
    fn clearance_recenters_skewed_field() {
        // same zero set as the capsule, interior minimum pushed toward +x
        let skewed = |p: &Vec3| {
            let z = p.z.clamp(-0.5, 0.5);
            ((p - Vec3::new(0.0, 0.0, z)).norm_squared() - 0.09) * (1.5 * p.x).exp()
        };
        let opts = CenterlineOptions::default();
        let plain = centerline(&skewed, &Vec3::z(), 11, &opts).unwrap();
        assert!(plain.stations.iter().filter(|s| s.offset.abs() <= 0.4).all(|s| s.center.x > 0.04));
        let clearance = |p: &Vec3| capsule(p).abs();
        let line = centerline_with_clearance(&skewed, &clearance, &Vec3::z(), 11, &opts).unwrap();
        assert_eq!(line.stations.len(), 11);
        for s in &line.stations {
            assert!(s.center.xy().norm() <= 1e-2, "{:?}", s.center);
        }
    }

    #[test]
    fn stray_pocket_ignored() {
        let pocket = |p: &Vec3| capsule(p).min((p - Vec3::new(0.8, 0.8, 0.0)).norm() - 0.05);
        let line = centerline(&pocket, &Vec3::z(), 11, &CenterlineOptions::default()).unwrap();
        for s in &line.stations {
            assert!(s.center.xy().norm() <= 1e-2, "{:?}", s.center);
        }
    }

    #[test]
    fn capsule_interior_diameters() {
        let prof = diameter_profile(&capsule, &Vec3::z(), 21, &NormalizationTransform::identity(), &CenterlineOptions::default())
            .unwrap();
        let interior: Vec<_> = prof.stations.iter().filter(|s| s.center_mm.z.abs() <= 0.5).collect();
        assert!(interior.len() >= 10);
        for s in interior {
            assert!((s.diameter_mm - 0.6).abs() <= 0.012, "{}", s.diameter_mm);
        }
        assert!(prof.stations.iter().all(|s| s.diameter_mm >= 0.0));
        assert!(prof.stations.windows(2).all(|w| w[0].arclength_mm <= w[1].arclength_mm));
    }

    #[test]
    fn sphere_centerline_passes_through_center() {
        let c = Vec3::new(0.1, -0.05, 0.0);
        let sphere = move |p: &Vec3| (p - c).norm() - 0.5;
        let line = centerline(&sphere, &Vec3::z(), 15, &CenterlineOptions::default()).unwrap();
        for s in &line.stations {
            let lateral = (s.center - c).xy().norm();
            assert!(lateral <= 1e-2, "{lateral}");
        }
    }

    #[test]
    fn sphere_max_diameter() {
        let sphere = |p: &Vec3| p.norm() - 0.5;
        let tr = NormalizationTransform { scale_mm: 50.0, ..NormalizationTransform::identity() };
        let prof = diameter_profile(&sphere, &Vec3::z(), 33, &tr, &CenterlineOptions::default()).unwrap();
        let max = prof.max_diameter_mm().unwrap();
        assert!((max - 50.0).abs() <= 1.0, "{max}");
    }

    #[test]
    fn translation_equivariance() {
        let opts = CenterlineOptions::default();
        let h = 2.0 / (opts.grid_resolution - 1) as f64;
        let shift = Vec3::new(2.0 * h, -h, 3.0 * h);
        let moved = Shifted { inner: &capsule, offset: shift };
        let a = centerline(&capsule, &Vec3::z(), 11, &opts).unwrap();
        let b = centerline(&moved, &Vec3::z(), 11, &opts).unwrap();
        assert_eq!(a.stations.len(), b.stations.len());
        for (p, q) in a.stations.iter().zip(&b.stations) {
            assert!((q.center - p.center - shift).norm() <= 1e-6, "{:?} {:?}", p.center, q.center);
        }
    }

    #[test]
    fn empty_interior_is_error() {
        let outside = |_: &Vec3| 1.0;
        assert!(centerline(&outside, &Vec3::z(), 5, &CenterlineOptions::default()).is_err());
    }
}
