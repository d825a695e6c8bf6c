#![no_main]

use libfuzzer_sys::fuzz_target;
use portal_core::bench::{read_results, write_results};

fuzz_target!(|data: &[u8]| {
    let Ok(records) = read_results(data) else { return };
    let mut out = Vec::new();
    write_results(&records, &mut out).expect("in-memory write");
    let again = read_results(&out[..]).expect("written results read back");
    assert_eq!(again.len(), records.len());
});
