#![no_main]

use casimir_core::materials::ProfileSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(spec) = text.parse::<ProfileSpec>() else {
        return;
    };
    // Table specs name files; resolving them is the table target's job.
    if matches!(spec, ProfileSpec::Table(_)) {
        return;
    }
    // Display must produce text that parses back to the same spec.
    let again: ProfileSpec = spec.to_string().parse().expect("display output reparses");
    assert_eq!(spec, again);
    let _ = spec.resolve(Some((0.25, 0.75)));
});
