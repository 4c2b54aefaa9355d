#![no_main]

use extbandit::results::{read_json, write_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(doc) = read_json(data) else {
        return;
    };
    let mut buf = Vec::new();
    write_json(&mut buf, &doc).expect("document re-encodes");
    let again = read_json(&buf[..]).expect("re-encoded document parses");
    assert_eq!(doc, again);
});
