#![no_main]

use casimir_cli::parse_args;
use libfuzzer_sys::fuzz_target;

// Arguments are NUL-separated. Only parsing and validation run, never a scenario.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let argv = std::iter::once("casimir").chain(text.split('\0'));
    let _ = parse_args(argv);
});
