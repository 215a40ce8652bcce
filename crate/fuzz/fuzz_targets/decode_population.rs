#![no_main]

use dr_core::format::{decode_population, encode_population};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(pop) = decode_population(text) {
        let encoded = encode_population(&pop);
        let again = decode_population(&encoded).expect("re-decode");
        assert_eq!(encode_population(&again), encoded);
    }
});
