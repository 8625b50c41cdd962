#![no_main]

use libfuzzer_sys::fuzz_target;
use seqsat_core::cnf::parse_dimacs;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(d) = parse_dimacs(text) {
            assert!(d
                .clauses
                .iter()
                .flatten()
                .all(|&l| l != 0 && l.unsigned_abs() <= d.num_vars));
        }
    }
});
