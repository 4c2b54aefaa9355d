#![no_main]

use extbandit::config::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Parsing and validation must reject bad input with an error, never panic.
    if let Ok(file) = parse_config(text, &[]) {
        if let Ok(valid) = file.validate() {
            assert!(!valid.sweep.policies.is_empty());
            assert!(valid.sweep.replications >= 1);
            let _ = valid.sweep.grid();
        }
    }
});
