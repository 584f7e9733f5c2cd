#![no_main]

use libfuzzer_sys::fuzz_target;
use rbac_chain::{ContextCondition, RequestContext, Value};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = Value::parse_typed(text);
    let mut ctx = RequestContext::default();
    for line in text.lines() {
        if let Ok((k, v)) = RequestContext::parse_pair(line) {
            ctx = ctx.with(k, v);
        }
    }
    for line in text.lines() {
        if let Ok(cond) = ContextCondition::parse(line) {
            let _ = cond.holds(&ctx);
        }
    }
});
