#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(rows) = kgrl_core::graph::parse_triple_lines("fuzz", text) {
            for row in rows {
                assert!(row.iter().all(|f| !f.is_empty() && !f.contains('\t')));
            }
        }
    }
});
