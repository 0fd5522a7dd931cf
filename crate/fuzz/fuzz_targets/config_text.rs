#![no_main]

use evolving_sdf::harness::{format_config, parse_config};
use libfuzzer_sys::fuzz_target;
use std::path::Path;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = parse_config(text, Path::new("fuzz.cfg")) {
        let again = parse_config(&format_config(&config), Path::new("fuzz.cfg")).expect("formatted config parses");
        assert_eq!(format_config(&config), format_config(&again));
    }
});
