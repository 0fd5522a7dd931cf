#![no_main]

use evolving_sdf::synthetic::AnalyticShape;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(shape) = text.parse::<AnalyticShape>() {
        let again: AnalyticShape = shape.to_string().parse().expect("displayed shape parses");
        assert_eq!(shape, again);
    }
});
