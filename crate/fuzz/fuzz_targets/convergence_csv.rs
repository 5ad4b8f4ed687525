#![no_main]

use casimir_core::experiments::{parse_convergence, write_convergence};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(rows) = parse_convergence(text) else {
        return;
    };
    if let Ok(written) = write_convergence(&rows) {
        let again = parse_convergence(&written).expect("written rows reparse");
        assert_eq!(again.len(), rows.len());
    }
});
