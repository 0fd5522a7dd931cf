use crate::{Error, Result, Vec3};

/// One surface point cloud in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub time_days: f64,
    pub points: Vec<Vec3>,
}

/// Time-stamped surface point clouds of one subject, in mm and days.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloudSequence {
    patient_id: String,
    scans: Vec<Scan>,
}

impl PointCloudSequence {
    /// Validates strictly increasing times and clouds of at least four finite,
    /// non-coplanar points.
    pub fn new(patient_id: impl Into<String>, scans: Vec<Scan>) -> Result<Self> {
        if scans.is_empty() {
            return Err(Error::InvalidSequence("sequence has no scans".into()));
        }
        for (j, scan) in scans.iter().enumerate() {
            if !scan.time_days.is_finite() {
                return Err(Error::InvalidSequence(format!("scan {j} has a non-finite time")));
            }
            if j > 0 && scan.time_days <= scans[j - 1].time_days {
                return Err(Error::InvalidSequence(format!(
                    "scan times must be strictly increasing ({} after {})",
                    scan.time_days,
                    scans[j - 1].time_days
                )));
            }
            if scan.points.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
                return Err(Error::InvalidSequence(format!("scan {j} has a non-finite point")));
            }
            if !spans_volume(&scan.points) {
                return Err(Error::InvalidSequence(format!(
                    "scan {j} needs at least 4 non-coplanar points"
                )));
            }
        }
        Ok(Self::from_scans_unchecked(patient_id, scans))
    }

    pub fn from_scans_unchecked(patient_id: impl Into<String>, scans: Vec<Scan>) -> Self {
        Self {
            patient_id: patient_id.into(),
            scans,
        }
    }

    pub fn patient_id(&self) -> &str {
        &self.patient_id
    }

    pub fn scans(&self) -> &[Scan] {
        &self.scans
    }

    pub fn len(&self) -> usize {
        self.scans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scans.is_empty()
    }

    /// The sequence with scan `index` removed.
    pub fn without(&self, index: usize) -> Self {
        let scans = self
            .scans
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != index)
            .map(|(_, s)| s.clone())
            .collect();
        Self::from_scans_unchecked(self.patient_id.clone(), scans)
    }
}

fn spans_volume(points: &[Vec3]) -> bool {
    if points.len() < 4 {
        return false;
    }
    let p0 = points[0];
    let Some(p1) = points.iter().max_by(|a, b| (*a - p0).norm_squared().total_cmp(&(*b - p0).norm_squared())) else {
        return false;
    };
    let e1 = p1 - p0;
    let scale = e1.norm();
    if !(scale > 0.0) {
        return false;
    }
    let Some(p2) = points
        .iter()
        .max_by(|a, b| e1.cross(&(*a - p0)).norm().total_cmp(&e1.cross(&(*b - p0)).norm()))
    else {
        return false;
    };
    let n = e1.cross(&(p2 - p0));
    if n.norm() <= 1e-12 * scale * scale {
        return false;
    }
    points
        .iter()
        .any(|p| n.dot(&(p - p0)).abs() > 1e-12 * scale * scale * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra() -> Vec<Vec3> {
        vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()]
    }

    #[test]
    fn accepts_valid_sequence() {
        let seq = PointCloudSequence::new(
            "a",
            vec![Scan { time_days: 0.0, points: tetra() }, Scan { time_days: 3.0, points: tetra() }],
        )
        .unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.without(0).scans()[0].time_days, 3.0);
    }

    #[test]
    fn rejects_unordered_times() {
        let err = PointCloudSequence::new(
            "a",
            vec![Scan { time_days: 5.0, points: tetra() }, Scan { time_days: 5.0, points: tetra() }],
        );
        assert!(err.is_err());
    }

    #[test]
    fn rejects_coplanar_cloud() {
        let flat = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::new(1.0, 1.0, 0.0)];
        assert!(PointCloudSequence::new("a", vec![Scan { time_days: 0.0, points: flat }]).is_err());
        assert!(PointCloudSequence::new("a", vec![Scan { time_days: 0.0, points: tetra()[..3].to_vec() }]).is_err());
    }
}
