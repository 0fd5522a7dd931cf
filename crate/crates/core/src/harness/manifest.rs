//! JSON description of a scan sequence.
//!
//! ```json
//! {
//!   "patient_id": "p01",
//!   "scans": [
//!     { "cloud": "day0000.csv", "time_days": 0.0, "landmarks": [[0, 0, 0], [10, 0, 0], [0, 10, 0]] },
//!     { "cloud": "day0103.csv", "time_days": 103.0, "reference_mesh": "day0103.obj" }
//!   ]
//! }
//! ```
//!
//! Relative paths resolve against the manifest's directory. Landmarks, when
//! given, are corresponding points used to rigidly align each scan onto the
//! first one.

use super::cloud::read_cloud;
use crate::geometry::{kabsch_align, RigidTransform};
use crate::training::{PointCloudSequence, Scan};
use crate::{Error, Result, Vec3};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestScan {
    pub cloud: PathBuf,
    pub time_days: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landmarks: Option<Vec<[f64; 3]>>,
    /// Optional ground-truth surface (OBJ, millimeters) used for evaluation
    /// instead of the cloud.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_mesh: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceManifest {
    pub patient_id: String,
    pub scans: Vec<ManifestScan>,
}

impl SequenceManifest {
    /// Parses and checks manifest text without touching the filesystem.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let manifest: SequenceManifest =
            serde_json::from_str(text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        manifest.check().map_err(|m| Error::parse(path, 0, m))?;
        Ok(manifest)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.scans.is_empty() {
            return Err("manifest lists no scans".into());
        }
        if let Some(s) = self.scans.iter().find(|s| !s.time_days.is_finite()) {
            return Err(format!("non-finite time for {}", s.cloud.display()));
        }
        if let Some(w) = self.scans.windows(2).find(|w| !(w[1].time_days > w[0].time_days)) {
            return Err(format!(
                "scan times must be strictly increasing ({} then {})",
                w[0].time_days, w[1].time_days
            ));
        }
        let with_landmarks: Vec<&Vec<[f64; 3]>> = self.scans.iter().filter_map(|s| s.landmarks.as_ref()).collect();
        if !with_landmarks.is_empty() {
            let Some(anchor) = &self.scans[0].landmarks else {
                return Err("landmarks are given but the first scan, the alignment target, has none".into());
            };
            if anchor.len() < 3 {
                return Err("landmark sets need at least 3 points".into());
            }
            if with_landmarks.iter().any(|l| l.len() != anchor.len()) {
                return Err("every landmark set must have as many points as the first scan's".into());
            }
            if with_landmarks.iter().flat_map(|l| l.iter()).flatten().any(|c| !c.is_finite()) {
                return Err("landmark coordinates must be finite".into());
            }
        }
        Ok(())
    }

    /// Reads a manifest, resolves its paths and checks that they exist.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest = Self::parse(&text, path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for scan in &mut manifest.scans {
            scan.cloud = base.join(&scan.cloud);
            if let Some(mesh) = &mut scan.reference_mesh {
                *mesh = base.join(&*mesh);
            }
            for p in std::iter::once(&scan.cloud).chain(scan.reference_mesh.as_ref()) {
                if !p.is_file() {
                    return Err(Error::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "file not found")));
                }
            }
        }
        Ok(manifest)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn has_landmarks(&self) -> bool {
        self.scans.iter().any(|s| s.landmarks.is_some())
    }

    /// Rigid transform taking each scan's landmarks onto the first scan's;
    /// identity for scans without landmarks.
    pub fn alignments(&self) -> Result<Vec<RigidTransform>> {
        let to_vecs = |l: &Vec<[f64; 3]>| l.iter().map(|p| Vec3::from(*p)).collect::<Vec<_>>();
        let anchor = match &self.scans[0].landmarks {
            Some(l) => to_vecs(l),
            None => return Ok(vec![RigidTransform::identity(); self.scans.len()]),
        };
        self.scans
            .iter()
            .map(|s| match &s.landmarks {
                Some(l) => kabsch_align(&to_vecs(l), &anchor),
                None => Ok(RigidTransform::identity()),
            })
            .collect()
    }

    /// Loads every cloud; with `align`, applies [`Self::alignments`].
    pub fn load_sequence(&self, align: bool) -> Result<PointCloudSequence> {
        let transforms = if align {
            self.alignments()?
        } else {
            vec![RigidTransform::identity(); self.scans.len()]
        };
        let scans = self
            .scans
            .iter()
            .zip(&transforms)
            .map(|(s, tr)| {
                let points = read_cloud(&s.cloud)?.iter().map(|p| tr.apply(p)).collect();
                Ok(Scan { time_days: s.time_days, points })
            })
            .collect::<Result<Vec<_>>>()?;
        PointCloudSequence::new(self.patient_id.clone(), scans)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"patient_id": "p", "scans": [{"cloud": "a.csv", "time_days": 0}, {"cloud": "b.csv", "time_days": 15}]}"#;

    #[test]
    fn parses_minimal_manifest() {
        let m = SequenceManifest::parse(MINIMAL, Path::new("m.json")).unwrap();
        assert_eq!(m.scans.len(), 2);
        assert!(!m.has_landmarks());
        assert_eq!(SequenceManifest::parse(&m.to_json(), Path::new("m.json")).unwrap(), m);
    }

    #[test]
    fn rejects_unordered_times() {
        let text = MINIMAL.replace("15", "0");
        assert!(SequenceManifest::parse(&text, Path::new("m.json")).is_err());
    }

    #[test]
    fn syntax_errors_have_line_numbers() {
        let err = SequenceManifest::parse("{\n\"patient_id\": \"p\",\n\"scans\": [,]\n}", Path::new("m.json")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(SequenceManifest::parse(r#"{"patient_id": "p", "scans": [], "x": 1}"#, Path::new("m.json")).is_err());
    }

    #[test]
    fn landmarks_need_anchor_on_first_scan() {
        let text = r#"{"patient_id": "p", "scans": [{"cloud": "a.csv", "time_days": 0},
            {"cloud": "b.csv", "time_days": 1, "landmarks": [[0,0,0],[1,0,0],[0,1,0]]}]}"#;
        assert!(SequenceManifest::parse(text, Path::new("m.json")).is_err());
    }

    #[test]
    fn missing_cloud_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        std::fs::write(&path, MINIMAL).unwrap();
        std::fs::write(dir.path().join("a.csv"), "0,0,0\n").unwrap();
        let err = SequenceManifest::load(&path).unwrap_err();
        match err {
            Error::Io { path, .. } => assert!(path.ends_with("b.csv")),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn landmark_alignment_recovers_motion() {
        let dir = tempfile::tempdir().unwrap();
        let square = [[0.0, 0.0, 0.0], [10.0, 0.0, 0.0], [0.0, 10.0, 0.0], [0.0, 0.0, 10.0]];
        // second scan: rotated 90 degrees about z and shifted
        let moved: Vec<[f64; 3]> = square.iter().map(|p| [-p[1] + 5.0, p[0], p[2] - 2.0]).collect();
        let cloud_a = "0,0,0\n10,0,0\n0,10,0\n0,0,10\n";
        let cloud_b: String = moved.iter().map(|p| format!("{},{},{}\n", p[0], p[1], p[2])).collect();
        std::fs::write(dir.path().join("a.csv"), cloud_a).unwrap();
        std::fs::write(dir.path().join("b.csv"), cloud_b).unwrap();
        let m = SequenceManifest {
            patient_id: "p".into(),
            scans: vec![
                ManifestScan { cloud: "a.csv".into(), time_days: 0.0, landmarks: Some(square.to_vec()), reference_mesh: None },
                ManifestScan { cloud: "b.csv".into(), time_days: 1.0, landmarks: Some(moved), reference_mesh: None },
            ],
        };
        let path = dir.path().join("m.json");
        m.save(&path).unwrap();
        let seq = SequenceManifest::load(&path).unwrap().load_sequence(true).unwrap();
        for (a, b) in seq.scans()[0].points.iter().zip(&seq.scans()[1].points) {
            assert!((a - b).norm() < 1e-9);
        }
    }
}
