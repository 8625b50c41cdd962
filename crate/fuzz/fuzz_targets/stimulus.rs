#![no_main]

use libfuzzer_sys::fuzz_target;
use seqsat_cli::stimulus::parse_stimulus;

fuzz_target!(|data: &[u8]| {
    let Some((&width, rest)) = data.split_first() else {
        return;
    };
    if let Ok(text) = std::str::from_utf8(rest) {
        if let Ok(m) = parse_stimulus(text, width as usize % 64) {
            assert_eq!(m.cols(), width as usize % 64);
        }
    }
});
