#![no_main]

use evolving_sdf::harness::SequenceManifest;
use libfuzzer_sys::fuzz_target;
use std::path::Path;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(manifest) = SequenceManifest::parse(text, Path::new("fuzz.json")) {
        let again = SequenceManifest::parse(&manifest.to_json(), Path::new("fuzz.json")).expect("serialized manifest parses");
        assert_eq!(manifest, again);
    }
});
