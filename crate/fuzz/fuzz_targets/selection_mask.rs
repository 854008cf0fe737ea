#![no_main]

use kgrl_core::trainer::SelectionMask;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(mask) = SelectionMask::parse("fuzz", text) {
            let again = SelectionMask::parse("fuzz", &mask.to_text()).unwrap();
            assert_eq!(again, mask);
        }
    }
});
