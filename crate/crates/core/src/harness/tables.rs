//! CSV outputs for external plotting.

use crate::geometry::{DiameterProfile, SampleDistance};
use crate::nn::LossBreakdown;
use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

pub const DIAMETER_HEADER: &str = "arclength_mm,cx,cy,cz,diameter_mm";
pub const ASD_SAMPLE_HEADER: &str = "x,y,z,distance_mm";
pub const LOSS_HEADER: &str = "epoch,data_abs,eikonal_data,temporal_data,eikonal_reg,temporal_reg,total";

pub fn format_diameter_csv(profile: &DiameterProfile) -> String {
    let mut out = format!("{DIAMETER_HEADER}\n");
    for s in &profile.stations {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.arclength_mm, s.center_mm.x, s.center_mm.y, s.center_mm.z, s.diameter_mm
        );
    }
    out
}

/// Per-sample surface distances; points and distances in the units given.
pub fn format_asd_samples_csv(samples: &[SampleDistance]) -> String {
    let mut out = format!("{ASD_SAMPLE_HEADER}\n");
    for s in samples {
        let _ = writeln!(out, "{},{},{},{}", s.point.x, s.point.y, s.point.z, s.distance);
    }
    out
}

pub fn format_loss_csv(history: &[LossBreakdown]) -> String {
    let mut out = format!("{LOSS_HEADER}\n");
    for (epoch, l) in history.iter().enumerate() {
        let c = l.components();
        let _ = writeln!(out, "{epoch},{},{},{},{},{},{}", c[0], c[1], c[2], c[3], c[4], c[5]);
    }
    out
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DiameterStation;
    use crate::Vec3;

    #[test]
    fn diameter_columns_exact() {
        let p = DiameterProfile {
            stations: vec![DiameterStation { arclength_mm: 0.0, center_mm: Vec3::new(1.0, 2.0, 3.5), diameter_mm: 30.25 }],
            skipped: vec![],
        };
        assert_eq!(format_diameter_csv(&p), "arclength_mm,cx,cy,cz,diameter_mm\n0,1,2,3.5,30.25\n");
    }

    #[test]
    fn loss_rows_numbered_from_zero() {
        let l = LossBreakdown { data_abs: 0.5, total: 0.5, ..Default::default() };
        let text = format_loss_csv(&[l, l]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "0,0.5,0,0,0,0,0.5");
        assert!(lines[2].starts_with("1,"));
    }
}
