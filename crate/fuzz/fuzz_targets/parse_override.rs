#![no_main]

use extbandit::config::Override;
use libfuzzer_sys::fuzz_target;
use serde_json::json;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(o) = Override::parse(text) else {
        return;
    };
    assert!(!o.path.is_empty());
    assert!(!o.value.is_array() && !o.value.is_object());
    let mut doc = json!({
        "model": { "mu": [0.5, 0.3], "theta": [1, 1], "alpha": 1.0, "horizon": 100 },
        "policies": [{ "name": "ucb", "gamma": 3 }],
        "run": { "replications": 10, "base_seed": 1 }
    });
    // Applying may fail, but must never panic or replace a container.
    let _ = o.apply(&mut doc);
    assert!(doc["model"].is_object() && doc["model"]["mu"].is_array());
    assert!(doc["policies"].is_array());
});
