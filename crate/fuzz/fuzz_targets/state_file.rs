#![no_main]

use libfuzzer_sys::fuzz_target;
use speclat::io::parse_state;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(state) = parse_state(s) {
            // Small states only: the lift and rational conversion must not panic.
            if state.config().l <= 24 {
                let _ = state.rational();
                let _ = state.floating();
            }
        }
    }
});
