#![no_main]

use libfuzzer_sys::fuzz_target;
use rbac_chain::bundle::{load_bundle, parse_bundle_line};
use rbac_chain::{AccountId, AccountSpec, ChainConfig, Engine, Genesis};

fn engine() -> Engine {
    let issuer = AccountId::new("issuer").unwrap();
    let mut config = ChainConfig::new(vec![AccountId::new("bpa").unwrap()]);
    config.cpu_capacity_us = u64::MAX / 4;
    config.net_capacity_bytes = u64::MAX / 4;
    Engine::new(Genesis {
        config,
        issuer: issuer.clone(),
        accounts: vec![AccountSpec::new(issuer, "issuer", 1, 1 << 20)],
        roles: vec!["doctor".into(), "nurse".into()],
    })
    .unwrap()
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for (i, line) in text.lines().enumerate() {
        let _ = parse_bundle_line(i + 1, line);
    }
    // bound the number of blocks a single input can produce
    if text.lines().count() <= 16 {
        let mut e = engine();
        match load_bundle(&mut e, text) {
            Ok(n) => assert!(n <= text.lines().count()),
            Err(f) => assert!(f.applied < f.line),
        }
        assert!(e.ledger().verify_chain());
    }
});
