#![no_main]

use casimir_core::experiments::{parse_reports, write_reports};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(reports) = parse_reports(text) else {
        return;
    };
    let timing = reports.iter().any(|r| r.runtime_ms.is_some());
    if let Ok(written) = write_reports(&reports, timing) {
        let again = parse_reports(&written).expect("written reports reparse");
        assert_eq!(again.len(), reports.len());
    }
});
