//! Point clouds as CSV: one `x,y,z` point per line in millimeters.
//!
//! `#` starts a comment, blank lines are skipped and an `x,y,z` header is
//! accepted as the first data line.

use crate::{Error, Result, Vec3};
use std::fmt::Write as _;
use std::path::Path;

pub fn parse_cloud(text: &str, path: &Path) -> Result<Vec<Vec3>> {
    let mut points = Vec::new();
    let mut first = true;
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let was_first = std::mem::replace(&mut first, false);
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        if was_first && fields.iter().map(|f| f.to_ascii_lowercase()).eq(["x", "y", "z"]) {
            continue;
        }
        if fields.len() != 3 {
            return Err(Error::parse(path, i + 1, format!("expected 3 fields, got {}", fields.len())));
        }
        let mut xyz = [0.0; 3];
        for (slot, field) in xyz.iter_mut().zip(&fields) {
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(path, i + 1, format!("not a finite number: {field:?}")))?;
        }
        points.push(Vec3::from(xyz));
    }
    Ok(points)
}

pub fn read_cloud(path: &Path) -> Result<Vec<Vec3>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cloud(&text, path)
}

/// CSV text with a header; values use the shortest exact representation.
pub fn format_cloud(points: &[Vec3]) -> String {
    let mut out = String::with_capacity(points.len() * 60 + 8);
    out.push_str("x,y,z\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.x, p.y, p.z);
    }
    out
}

pub fn write_cloud(path: &Path, points: &[Vec3]) -> Result<()> {
    std::fs::write(path, format_cloud(points)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<Vec<Vec3>> {
        parse_cloud(text, Path::new("cloud.csv"))
    }

    #[test]
    fn header_comments_and_blanks() {
        let pts = parse("# scan 1\nx,y,z\n1,2,3\n\n 4.5 , -6 ,7e1 # trailing\n").unwrap();
        assert_eq!(pts, vec![Vec3::new(1.0, 2.0, 3.0), Vec3::new(4.5, -6.0, 70.0)]);
    }

    #[test]
    fn headerless_file() {
        assert_eq!(parse("0,0,0\n").unwrap().len(), 1);
    }

    #[test]
    fn bad_lines_report_line_number() {
        let err = parse("x,y,z\n1,2,3\n1,2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse("1,2,nan\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        // a header is only accepted first
        assert!(parse("1,2,3\nx,y,z\n").is_err());
    }

    #[test]
    fn missing_file_names_path() {
        let err = read_cloud(Path::new("/nonexistent/cloud.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/cloud.csv"));
    }

    proptest! {
        #[test]
        fn format_parse_round_trip(raw in proptest::collection::vec(proptest::array::uniform3(-1e6f64..1e6), 0..50)) {
            let pts: Vec<Vec3> = raw.into_iter().map(Vec3::from).collect();
            prop_assert_eq!(parse(&format_cloud(&pts)).unwrap(), pts);
        }
    }
}
