//! Analytic space-time signed distance functions and surface samplers.
//!
//! Shapes live in normalized units, with time in `[-1, 1]`. Sequences built
//! from them are expressed in synthetic millimeters at [`MM_PER_UNIT`].

use crate::geometry::ScalarField;
use crate::nn::SpaceTimePoint;
use crate::training::{PointCloudSequence, Scan};
use crate::{Error, Result, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Millimeters per normalized unit in synthetic sequences.
pub const MM_PER_UNIT: f64 = 50.0;

/// Shapes must stay inside this cube for all `t` in `[-1, 1]`.
pub const SHAPE_BOUND: f64 = 0.95;

/// Closed shapes with exact signed distance functions. Capsules run along z
/// and are centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticShape {
    /// Sphere with radius `r0 + rate * t`.
    GrowingSphere { r0: f64, rate: f64 },
    Capsule { half_length: f64, radius: f64 },
    /// Union of a base capsule and a shorter, wider capsule of half-length
    /// `bulge_width` whose radius is `base_radius + a(s)`, where
    /// `a(s) = c0 + c1 s + c2 s^2` and `s = (t + 1) / 2`.
    BulgingCapsule {
        half_length: f64,
        base_radius: f64,
        bulge_amplitude: [f64; 3],
        bulge_width: f64,
    },
}

fn capsule_sdf(p: &Vec3, half_length: f64, radius: f64) -> f64 {
    (p - Vec3::new(0.0, 0.0, p.z.clamp(-half_length, half_length))).norm() - radius
}

fn capsule_gradient(p: &Vec3, half_length: f64) -> Option<Vec3> {
    let d = p - Vec3::new(0.0, 0.0, p.z.clamp(-half_length, half_length));
    let n = d.norm();
    (n > 0.0).then(|| d / n)
}

fn capsule_area(half_length: f64, radius: f64) -> f64 {
    4.0 * PI * radius * half_length + 4.0 * PI * radius * radius
}

fn unit_direction<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

fn sample_capsule<R: Rng + ?Sized>(half_length: f64, radius: f64, rng: &mut R) -> Vec3 {
    let cylinder = 4.0 * PI * radius * half_length;
    let total = capsule_area(half_length, radius);
    if rng.random::<f64>() * total < cylinder {
        let z = rng.random_range(-half_length..=half_length);
        let phi = rng.random_range(0.0..2.0 * PI);
        Vec3::new(radius * phi.cos(), radius * phi.sin(), z)
    } else {
        let d = unit_direction(rng);
        let cz = if d.z >= 0.0 { half_length } else { -half_length };
        Vec3::new(0.0, 0.0, cz) + d * radius
    }
}

impl AnalyticShape {
    pub fn growing_sphere(r0: f64, rate: f64) -> Result<Self> {
        let s = AnalyticShape::GrowingSphere { r0, rate };
        s.validate()?;
        Ok(s)
    }

    pub fn capsule(half_length: f64, radius: f64) -> Result<Self> {
        let s = AnalyticShape::Capsule { half_length, radius };
        s.validate()?;
        Ok(s)
    }

    pub fn bulging_capsule(
        half_length: f64,
        base_radius: f64,
        bulge_amplitude: [f64; 3],
        bulge_width: f64,
    ) -> Result<Self> {
        let s = AnalyticShape::BulgingCapsule { half_length, base_radius, bulge_amplitude, bulge_width };
        s.validate()?;
        Ok(s)
    }

    /// Radius of the bulge capsule at time `t`.
    fn bulge_radius(base_radius: f64, c: &[f64; 3], t: f64) -> f64 {
        let s = (t + 1.0) / 2.0;
        base_radius + c[0] + c[1] * s + c[2] * s * s
    }

    /// Extreme bulge radii over `t` in `[-1, 1]`.
    fn bulge_radius_range(base_radius: f64, c: &[f64; 3]) -> (f64, f64) {
        let mut candidates = vec![0.0, 1.0];
        if c[2] != 0.0 {
            let vertex = -c[1] / (2.0 * c[2]);
            if (0.0..=1.0).contains(&vertex) {
                candidates.push(vertex);
            }
        }
        candidates
            .into_iter()
            .map(|s| Self::bulge_radius(base_radius, c, 2.0 * s - 1.0))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidShape(msg));
        match *self {
            AnalyticShape::GrowingSphere { r0, rate } => {
                if !(r0.is_finite() && rate.is_finite()) {
                    return fail("sphere parameters must be finite".into());
                }
                if r0 - rate.abs() <= 0.0 {
                    return fail(format!("sphere radius must stay positive (r0 {r0}, rate {rate})"));
                }
                if r0 + rate.abs() > SHAPE_BOUND {
                    return fail(format!("sphere leaves [-{SHAPE_BOUND}, {SHAPE_BOUND}]^3"));
                }
            }
            AnalyticShape::Capsule { half_length, radius } => {
                if !(half_length >= 0.0 && radius > 0.0) {
                    return fail("capsule needs half_length >= 0 and radius > 0".into());
                }
                if half_length + radius > SHAPE_BOUND {
                    return fail(format!("capsule leaves [-{SHAPE_BOUND}, {SHAPE_BOUND}]^3"));
                }
            }
            AnalyticShape::BulgingCapsule { half_length, base_radius, bulge_amplitude, bulge_width } => {
                AnalyticShape::Capsule { half_length, radius: base_radius }.validate()?;
                if !(bulge_width >= 0.0) || !bulge_amplitude.iter().all(|c| c.is_finite()) {
                    return fail("bulge parameters must be finite and bulge_width >= 0".into());
                }
                let (lo, hi) = Self::bulge_radius_range(base_radius, &bulge_amplitude);
                if lo <= 0.0 {
                    return fail("bulge radius must stay positive".into());
                }
                if bulge_width + hi > SHAPE_BOUND {
                    return fail(format!("bulge leaves [-{SHAPE_BOUND}, {SHAPE_BOUND}]^3"));
                }
            }
        }
        Ok(())
    }

    /// Exact signed distance, negative inside.
    pub fn sdf(&self, x: &Vec3, t: f64) -> f64 {
        match *self {
            AnalyticShape::GrowingSphere { r0, rate } => x.norm() - (r0 + rate * t),
            AnalyticShape::Capsule { half_length, radius } => capsule_sdf(x, half_length, radius),
            AnalyticShape::BulgingCapsule { half_length, base_radius, bulge_amplitude, bulge_width } => {
                let base = capsule_sdf(x, half_length, base_radius);
                let bulge = capsule_sdf(x, bulge_width, Self::bulge_radius(base_radius, &bulge_amplitude, t));
                base.min(bulge)
            }
        }
    }

    /// Closed-form `(grad_x, d/dt)` of the SDF; `None` on the medial locus
    /// where the gradient is undefined.
    pub fn gradient(&self, x: &Vec3, t: f64) -> Option<(Vec3, f64)> {
        match *self {
            AnalyticShape::GrowingSphere { rate, .. } => {
                let n = x.norm();
                (n > 0.0).then(|| (x / n, -rate))
            }
            AnalyticShape::Capsule { half_length, .. } => capsule_gradient(x, half_length).map(|g| (g, 0.0)),
            AnalyticShape::BulgingCapsule { half_length, base_radius, bulge_amplitude, bulge_width } => {
                let base = capsule_sdf(x, half_length, base_radius);
                let bulge = capsule_sdf(x, bulge_width, Self::bulge_radius(base_radius, &bulge_amplitude, t));
                if base < bulge {
                    capsule_gradient(x, half_length).map(|g| (g, 0.0))
                } else {
                    let s = (t + 1.0) / 2.0;
                    // dR/dt = (c1 + 2 c2 s) / 2
                    let dr = (bulge_amplitude[1] + 2.0 * bulge_amplitude[2] * s) / 2.0;
                    capsule_gradient(x, bulge_width).map(|g| (g, -dr))
                }
            }
        }
    }

    /// `n` points on the surface at time `t`, uniform by area.
    pub fn sample_surface<R: Rng + ?Sized>(&self, t: f64, n: usize, rng: &mut R) -> Vec<Vec3> {
        match *self {
            AnalyticShape::GrowingSphere { r0, rate } => {
                let r = r0 + rate * t;
                (0..n).map(|_| unit_direction(rng) * r).collect()
            }
            AnalyticShape::Capsule { half_length, radius } => {
                (0..n).map(|_| sample_capsule(half_length, radius, rng)).collect()
            }
            AnalyticShape::BulgingCapsule { half_length, base_radius, bulge_amplitude, bulge_width } => {
                let rb = Self::bulge_radius(base_radius, &bulge_amplitude, t);
                let area_base = capsule_area(half_length, base_radius);
                let area_bulge = capsule_area(bulge_width, rb);
                let mut out = Vec::with_capacity(n);
                while out.len() < n {
                    let p = if rng.random::<f64>() * (area_base + area_bulge) < area_base {
                        let p = sample_capsule(half_length, base_radius, rng);
                        (capsule_sdf(&p, bulge_width, rb) >= 0.0).then_some(p)
                    } else {
                        let p = sample_capsule(bulge_width, rb, rng);
                        (capsule_sdf(&p, half_length, base_radius) >= 0.0).then_some(p)
                    };
                    out.extend(p);
                }
                out
            }
        }
    }

    /// The shape frozen at time `t`, as a field.
    pub fn at_time(&self, t: f64) -> ShapeSlice {
        ShapeSlice { shape: *self, t }
    }
}

/// Exact signed distance of `shape` at a space-time point.
pub fn analytic_sdf(shape: &AnalyticShape, p: &SpaceTimePoint) -> f64 {
    shape.sdf(&p.x, p.t)
}

/// Area-uniform surface samples; deterministic for a given `rng` state.
pub fn sample_surface<R: Rng + ?Sized>(shape: &AnalyticShape, t: f64, n: usize, rng: &mut R) -> Vec<Vec3> {
    shape.sample_surface(t, n, rng)
}

pub struct ShapeSlice {
    shape: AnalyticShape,
    t: f64,
}

impl ScalarField for ShapeSlice {
    fn value(&self, p: &Vec3) -> f64 {
        self.shape.sdf(p, self.t)
    }
}

/// Normalized shape time of each scan: the first day maps to -1 and the last
/// to +1.
pub fn shape_times(times_days: &[f64]) -> Result<Vec<f64>> {
    if times_days.len() < 2 {
        return Err(Error::InvalidSequence("a synthetic sequence needs at least 2 times".into()));
    }
    let first = times_days[0];
    let last = times_days[times_days.len() - 1];
    if !(last > first) || times_days.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidSequence("times must be strictly increasing".into()));
    }
    Ok(times_days
        .iter()
        .map(|d| -1.0 + 2.0 * (d - first) / (last - first))
        .collect())
}

/// Samples `n_per_scan` surface points at each scan time and expresses them
/// in synthetic millimeters. Scan `j` uses its own stream of `seed`.
pub fn make_sequence(
    shape: &AnalyticShape,
    times_days: &[f64],
    n_per_scan: usize,
    seed: u64,
) -> Result<PointCloudSequence> {
    shape.validate()?;
    let ts = shape_times(times_days)?;
    let scans = times_days
        .iter()
        .zip(&ts)
        .enumerate()
        .map(|(j, (&day, &t))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            Scan {
                time_days: day,
                points: shape
                    .sample_surface(t, n_per_scan, &mut rng)
                    .into_iter()
                    .map(|p| p * MM_PER_UNIT)
                    .collect(),
            }
        })
        .collect();
    PointCloudSequence::new(format!("synthetic-{}", shape.kind_name()), scans)
}

impl AnalyticShape {
    pub fn kind_name(&self) -> &'static str {
        match self {
            AnalyticShape::GrowingSphere { .. } => "growing-sphere",
            AnalyticShape::Capsule { .. } => "capsule",
            AnalyticShape::BulgingCapsule { .. } => "bulging-capsule",
        }
    }
}

impl fmt::Display for AnalyticShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AnalyticShape::GrowingSphere { r0, rate } => write!(f, "growing-sphere:r0={r0},rate={rate}"),
            AnalyticShape::Capsule { half_length, radius } => {
                write!(f, "capsule:half_length={half_length},radius={radius}")
            }
            AnalyticShape::BulgingCapsule { half_length, base_radius, bulge_amplitude: [c0, c1, c2], bulge_width } => {
                write!(
                    f,
                    "bulging-capsule:half_length={half_length},base_radius={base_radius},\
                     bulge0={c0},bulge1={c1},bulge2={c2},bulge_width={bulge_width}"
                )
            }
        }
    }
}

/// Parses `kind:key=value,...`, e.g. `growing-sphere:r0=0.5,rate=0.1`.
impl FromStr for AnalyticShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let mut params = std::collections::BTreeMap::new();
        for item in rest.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidShape(format!("expected key=value, got {item:?}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidShape(format!("{k}: not a number: {v:?}")))?;
            if params.insert(k.trim().to_string(), v).is_some() {
                return Err(Error::InvalidShape(format!("duplicate parameter {k:?}")));
            }
        }
        let mut take = |key: &str, default: Option<f64>| -> Result<f64> {
            params
                .remove(key)
                .or(default)
                .ok_or_else(|| Error::InvalidShape(format!("{kind}: missing parameter {key:?}")))
        };
        let shape = match kind {
            "growing-sphere" => AnalyticShape::GrowingSphere { r0: take("r0", None)?, rate: take("rate", Some(0.0))? },
            "capsule" => AnalyticShape::Capsule {
                half_length: take("half_length", None)?,
                radius: take("radius", None)?,
            },
            "bulging-capsule" => AnalyticShape::BulgingCapsule {
                half_length: take("half_length", None)?,
                base_radius: take("base_radius", None)?,
                bulge_amplitude: [take("bulge0", Some(0.0))?, take("bulge1", Some(0.0))?, take("bulge2", Some(0.0))?],
                bulge_width: take("bulge_width", Some(0.0))?,
            },
            other => return Err(Error::InvalidShape(format!("unknown shape kind {other:?}"))),
        };
        if let Some(extra) = params.keys().next() {
            return Err(Error::InvalidShape(format!("{kind}: unknown parameter {extra:?}")));
        }
        shape.validate()?;
        Ok(shape)
    }
}
