#![no_main]

use casimir_core::materials::{parse_table, Profile};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(samples) = parse_table(text) else {
        return;
    };
    let Ok(profile) = Profile::table(samples) else {
        return;
    };
    let (a, b) = profile.interval();
    let m = profile.value_at(0.5 * (a + b));
    assert!(m.is_finite() && m > 0.0, "accepted table yields m = {m}");
    let _ = profile.reciprocal_integral(a, b);
});
