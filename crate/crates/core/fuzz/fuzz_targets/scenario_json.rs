#![no_main]

use libfuzzer_sys::fuzz_target;
use rbac_chain::bench::Scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = Scenario::from_json(text) {
        assert!(s.validate().is_ok());
        assert!(s.block_count() >= 1);
    }
});
