#![no_main]

use libfuzzer_sys::fuzz_target;
use rbac_chain::audit::{events_to_jsonl, parse_audit_jsonl};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(events) = parse_audit_jsonl(text) {
        let again = parse_audit_jsonl(&events_to_jsonl(&events)).expect("own output parses");
        assert_eq!(again, events);
    }
});
