#![no_main]

use dr_core::format::{decode_statistics, encode_statistics};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(stats) = decode_statistics(text) {
        assert_eq!(decode_statistics(&encode_statistics(&stats)).expect("re-decode"), stats);
    }
});
