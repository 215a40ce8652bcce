#![no_main]

use dr_core::format::{decode_series, encode_series};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(days) = decode_series(text) {
        assert_eq!(decode_series(&encode_series(&days)).expect("re-decode"), days);
    }
});
