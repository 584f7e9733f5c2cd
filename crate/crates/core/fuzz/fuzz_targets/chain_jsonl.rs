#![no_main]

use libfuzzer_sys::fuzz_target;
use rbac_chain::ledger::{chain_to_jsonl, parse_chain_jsonl, verify_blocks, verify_chain_jsonl};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let verdict = verify_chain_jsonl(text);
    if let Ok(blocks) = parse_chain_jsonl(text) {
        assert_eq!(verify_blocks(&blocks), verdict);
        // a parsed chain re-exports to text that parses back to the same blocks
        let again = parse_chain_jsonl(&chain_to_jsonl(&blocks)).expect("export parses");
        assert_eq!(again, blocks);
    } else {
        assert!(!verdict);
    }
});
