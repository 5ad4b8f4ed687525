#![no_main]

use casimir_cli::parse_config_text;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(entries) = parse_config_text(text) {
        for (key, _) in entries {
            assert!(!key.is_empty());
        }
    }
});
