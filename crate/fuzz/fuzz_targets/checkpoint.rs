#![no_main]

use kgrl_core::models::checkpoint::{decode, encode};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ckpt) = decode(data) {
        let bytes = encode(&ckpt.store, &ckpt.entities, &ckpt.relations).unwrap();
        let again = decode(&bytes).unwrap();
        assert_eq!(again.entities, ckpt.entities);
        assert_eq!(again.relations, ckpt.relations);
        assert_eq!(
            again.store.entities.as_slice().len(),
            ckpt.store.entities.as_slice().len()
        );
    }
});
