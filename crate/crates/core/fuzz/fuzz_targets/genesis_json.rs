#![no_main]

use libfuzzer_sys::fuzz_target;
use rbac_chain::{Engine, Genesis};

fuzz_target!(|data: &[u8]| {
    let Ok(genesis) = serde_json::from_slice::<Genesis>(data) else { return };
    if genesis.accounts.len() > 64 || genesis.roles.len() > 64 {
        return;
    }
    if let Ok(e) = Engine::new(genesis) {
        assert!(e.ledger().verify_chain());
    }
});
