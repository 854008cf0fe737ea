#![no_main]

use kgrl_core::clustering::parse_assignment;
use kgrl_core::graph::Vocab;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let relations = Vocab::from_names(["born_in", "works_at", "located_in", "part_of"]);
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(ids) = parse_assignment("fuzz", text, &relations) {
            assert_eq!(ids.len(), relations.len());
        }
    }
});
