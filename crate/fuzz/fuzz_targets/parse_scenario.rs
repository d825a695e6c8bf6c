#![no_main]

use libfuzzer_sys::fuzz_target;
use portal_core::strips::{parse_scenario, Domain};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spec) = parse_scenario(text) else { return };
    // Anything accepted must print back to an equal scenario.
    let again = parse_scenario(&spec.to_text()).expect("printed scenario parses");
    assert_eq!(again, spec);
    if spec.cells.len() <= 64 && spec.entities.len() <= 8 {
        let _ = Domain::new(&spec);
    }
});
