#![no_main]

use libfuzzer_sys::fuzz_target;
use seqsat_cli::spec::ConstraintSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = ConstraintSpec::parse(text);
    }
});
