//! Fuzz the full config pipeline: JSON parsing, schema checks, and the
//! numeric validators (model assumptions, CFL, data ranges). Arbitrary
//! input must produce `Ok` or a structured error, never a panic.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(config) = garz::config::RunConfig::from_json_str(text) else {
        return;
    };
    let _ = config.resolve();
});
