#![no_main]

use libfuzzer_sys::fuzz_target;
use seqsat_core::{build_circuit, parse_bench};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(nl) = parse_bench(text) else {
        return;
    };
    // Anything that parses must survive a write/read cycle unchanged.
    let again = parse_bench(&nl.to_bench()).expect("re-parse of serialized netlist");
    assert_eq!(nl.stats(), again.stats());
    let _ = build_circuit(nl);
});
