//! Replays the checked-in fuzz corpus through the same round-trip properties
//! the fuzz targets assert, so the seeds stay meaningful on stable toolchains.

use evolving_sdf::geometry::Units;
use evolving_sdf::harness::*;
use evolving_sdf::synthetic::AnalyticShape;
use std::path::{Path, PathBuf};

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            let bytes = std::fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn text(bytes: &[u8]) -> &str {
    std::str::from_utf8(bytes).unwrap()
}

#[test]
fn cloud_seeds() {
    let mut parsed = 0;
    for (path, bytes) in seeds("cloud_csv") {
        if let Ok(points) = parse_cloud(text(&bytes), &path) {
            assert_eq!(parse_cloud(&format_cloud(&points), &path).unwrap(), points);
            parsed += 1;
        }
    }
    assert!(parsed > 0);
}

#[test]
fn config_seeds() {
    let mut parsed = 0;
    for (path, bytes) in seeds("config_text") {
        if let Ok(config) = parse_config(text(&bytes), &path) {
            let again = parse_config(&format_config(&config), &path).unwrap();
            assert_eq!(format_config(&config), format_config(&again));
            parsed += 1;
        }
    }
    assert!(parsed > 0);
}

#[test]
fn manifest_seeds() {
    for (path, bytes) in seeds("manifest_json") {
        let manifest = SequenceManifest::parse(text(&bytes), &path).unwrap();
        assert_eq!(SequenceManifest::parse(&manifest.to_json(), &path).unwrap(), manifest);
    }
}

#[test]
fn model_seeds() {
    for (_, bytes) in seeds("model_file") {
        let artifact = ModelArtifact::from_bytes(&bytes).unwrap();
        assert_eq!(artifact.to_bytes(), bytes);
        // every truncation is rejected, never a panic
        for cut in [0, 10, bytes.len() / 2, bytes.len() - 1] {
            assert!(ModelArtifact::from_bytes(&bytes[..cut]).is_err());
        }
    }
}

#[test]
fn obj_seeds() {
    let mut parsed = 0;
    for (path, bytes) in seeds("obj_mesh") {
        if let Ok(mesh) = parse_obj(text(&bytes), &path, Units::Millimeters) {
            assert_eq!(parse_obj(&format_obj(&mesh), &path, Units::Millimeters).unwrap(), mesh);
            parsed += 1;
        }
    }
    assert!(parsed > 0);
}

#[test]
fn shape_seeds() {
    for (_, bytes) in seeds("shape_spec") {
        let shape: AnalyticShape = text(&bytes).parse().unwrap();
        assert_eq!(shape.to_string().parse::<AnalyticShape>().unwrap(), shape);
    }
}
