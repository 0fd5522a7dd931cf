#![no_main]

use evolving_sdf::harness::ModelArtifact;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(artifact) = ModelArtifact::from_bytes(data) {
        let bytes = artifact.to_bytes();
        let again = ModelArtifact::from_bytes(&bytes).expect("serialized model parses");
        assert_eq!(bytes, again.to_bytes());
    }
});
