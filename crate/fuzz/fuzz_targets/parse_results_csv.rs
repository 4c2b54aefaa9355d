#![no_main]

use extbandit::results::{read_result_rows, write_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(rows) = read_result_rows(data) else {
        return;
    };
    // Accepted rows survive a write/read round trip unchanged.
    let mut buf = Vec::new();
    write_csv(&mut buf, &rows, None).expect("rows re-encode");
    let again = read_result_rows(&buf[..]).expect("re-encoded rows parse");
    assert_eq!(rows, again);
});
