#![no_main]

use evolving_sdf::harness::{format_cloud, parse_cloud};
use libfuzzer_sys::fuzz_target;
use std::path::Path;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(points) = parse_cloud(text, Path::new("fuzz.csv")) {
        let again = parse_cloud(&format_cloud(&points), Path::new("fuzz.csv")).expect("formatted cloud parses");
        assert_eq!(points, again);
    }
});
