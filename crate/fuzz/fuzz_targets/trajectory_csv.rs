#![no_main]

use doblab_core::sim::parse_trajectory_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.is_empty() {
        return;
    }
    // First byte picks the sampling period.
    let ts = [1e-4, 1e-3, 0.5, 1.0][(data[0] & 3) as usize];
    if let Ok(text) = std::str::from_utf8(&data[1..]) {
        if let Ok(q) = parse_trajectory_csv(text, ts) {
            assert!(!q.is_empty());
            assert!(q.iter().all(|v| v.is_finite()));
        }
    }
});
