use crate::training::PointCloudSequence;
use crate::{Error, Result, Vec3};
use serde::{Deserialize, Serialize};

/// Maps physical coordinates (mm, days) onto the normalized domain.
///
/// Space uses one isotropic scale so normalized distances convert to
/// millimeters with a single multiplication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationTransform {
    pub center_mm: Vec3,
    /// Millimeters per normalized unit.
    pub scale_mm: f64,
    pub t0_days: f64,
    /// Days per normalized time unit.
    pub time_scale_days: f64,
}

impl NormalizationTransform {
    pub fn identity() -> Self {
        Self {
            center_mm: Vec3::zeros(),
            scale_mm: 1.0,
            t0_days: 0.0,
            time_scale_days: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.center_mm.iter().all(|v| v.is_finite())
            && self.scale_mm.is_finite()
            && self.t0_days.is_finite()
            && self.time_scale_days.is_finite();
        if finite && self.scale_mm > 0.0 && self.time_scale_days > 0.0 {
            Ok(())
        } else {
            Err(Error::Degenerate(format!("invalid normalization transform {self:?}")))
        }
    }

    pub fn to_normalized(&self, p_mm: &Vec3) -> Vec3 {
        (p_mm - self.center_mm) / self.scale_mm
    }

    pub fn to_physical(&self, p: &Vec3) -> Vec3 {
        p * self.scale_mm + self.center_mm
    }

    pub fn time_to_normalized(&self, days: f64) -> f64 {
        (days - self.t0_days) / self.time_scale_days
    }

    pub fn time_to_days(&self, t: f64) -> f64 {
        t * self.time_scale_days + self.t0_days
    }

    pub fn distance_to_mm(&self, d: f64) -> f64 {
        d * self.scale_mm
    }

    pub fn distance_to_normalized(&self, d_mm: f64) -> f64 {
        d_mm / self.scale_mm
    }
}

/// Converts a normalized distance to millimeters.
pub fn physical_distance(d_normalized: f64, tr: &NormalizationTransform) -> f64 {
    tr.distance_to_mm(d_normalized)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedScan {
    pub t: f64,
    pub points: Vec<Vec3>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSequence {
    pub patient_id: String,
    pub scans: Vec<NormalizedScan>,
    pub transform: NormalizationTransform,
    /// Set when the sequence has one scan and time maps to 0.
    pub single_scan: bool,
}

/// Jointly normalizes every scan of a sequence.
///
/// The spatial center is the midpoint of the bounding box over all scans and
/// the largest half-extent maps to `padding`. Time maps affinely so the first
/// scan lands on -1 and the last on +1.
pub fn normalize_sequence(seq: &PointCloudSequence, padding: f64) -> Result<NormalizedSequence> {
    if !(padding > 0.0 && padding <= 1.0) {
        return Err(Error::InvalidSequence(format!("padding must lie in (0, 1], got {padding}")));
    }
    let scans = seq.scans();
    if scans.is_empty() || scans.iter().any(|s| s.points.is_empty()) {
        return Err(Error::InvalidSequence("sequence has no points to normalize".into()));
    }
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in scans.iter().flat_map(|s| &s.points) {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let half = (hi - lo).max() / 2.0;
    if !(half > 0.0) || !half.is_finite() {
        return Err(Error::Degenerate("point sequence has zero spatial extent".into()));
    }
    let (t0_days, time_scale_days, single_scan) = if scans.len() == 1 {
        (scans[0].time_days, 1.0, true)
    } else {
        let first = scans[0].time_days;
        let last = scans[scans.len() - 1].time_days;
        ((first + last) / 2.0, (last - first) / 2.0, false)
    };
    let transform = NormalizationTransform {
        center_mm: (lo + hi) / 2.0,
        scale_mm: half / padding,
        t0_days,
        time_scale_days,
    };
    transform.validate()?;
    let normalized = scans
        .iter()
        .map(|s| NormalizedScan {
            t: transform.time_to_normalized(s.time_days),
            points: s.points.iter().map(|p| transform.to_normalized(p)).collect(),
        })
        .collect();
    Ok(NormalizedSequence {
        patient_id: seq.patient_id().to_string(),
        scans: normalized,
        transform,
        single_scan,
    })
}
