#![no_main]

use kgrl_core::noise::NoiseLabels;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(labels) = NoiseLabels::parse("fuzz", text) {
            let again = NoiseLabels::parse("fuzz", &labels.to_text()).unwrap();
            assert_eq!(again, labels);
        }
    }
});
