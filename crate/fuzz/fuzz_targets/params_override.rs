#![no_main]

use edrf::scenario::parse_params;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(p) = parse_params(text) {
            p.validate().unwrap();
        }
    }
});
