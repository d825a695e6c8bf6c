#![no_main]

use libfuzzer_sys::fuzz_target;
use portal_core::bench::SweepConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = text.parse::<SweepConfig>() {
        // Bound the grid before expanding it.
        let size = config.domains.len()
            * config.algorithms.len()
            * config.budgets.len().max(1)
            * config.amounts.len()
            * config.likelihoods.len()
            * config.seeds.len();
        if size <= 100_000 {
            let _ = config.episodes();
        }
    }
});
