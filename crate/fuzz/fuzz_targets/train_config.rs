#![no_main]

use kgrl_core::config::TrainConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = TrainConfig::parse(text) {
            let again = TrainConfig::parse(&cfg.to_text()).unwrap();
            // NaN never compares equal; the text form is the stable identity
            assert_eq!(again.to_text(), cfg.to_text());
        }
    }
});
