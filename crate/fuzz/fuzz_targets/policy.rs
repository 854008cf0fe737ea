#![no_main]

use kgrl_core::agent::{decode_policy, encode_policy};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((params, clusters)) = decode_policy(data) {
        let bytes = encode_policy(&params, &clusters).unwrap();
        let (p2, c2) = decode_policy(&bytes).unwrap();
        assert_eq!(c2, clusters);
        assert_eq!(p2.v.as_slice().len(), params.v.as_slice().len());
    }
});
