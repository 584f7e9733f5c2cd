#![no_main]

use libfuzzer_sys::fuzz_target;
use rbac_chain::metrics::{
    compute_bttt, compute_cet, compute_throughput, parse_timeline_csv, timelines_to_csv, MetricsWindow,
};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(rows) = parse_timeline_csv(text) else { return };
    assert_eq!(parse_timeline_csv(&timelines_to_csv(&rows)).expect("own output parses"), rows);
    let window = MetricsWindow::covering(vec![rows], 0.0);
    if let Ok(v) = compute_bttt(&window) {
        assert!(v >= 0.0);
    }
    if let Ok(v) = compute_cet(&window) {
        assert!(v >= 0.0);
    }
    if let Ok(v) = compute_throughput(&window) {
        assert!(v >= 0.0);
    }
});
