#![no_main]

use evolving_sdf::geometry::Units;
use evolving_sdf::harness::{format_obj, parse_obj};
use libfuzzer_sys::fuzz_target;
use std::path::Path;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(mesh) = parse_obj(text, Path::new("fuzz.obj"), Units::Millimeters) {
        let again = parse_obj(&format_obj(&mesh), Path::new("fuzz.obj"), Units::Millimeters).expect("formatted mesh parses");
        assert_eq!(mesh, again);
    }
});
