#![no_main]

use dr_core::scenario::{parse_series, series_to_csv, ColumnMap, SeriesKind};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let columns = ColumnMap::default();
    for kind in [SeriesKind::Temperature, SeriesKind::Renewable] {
        if let Ok(days) = parse_series(text, &columns, kind) {
            assert!(days.iter().all(|d| d.values.len() == 24));
            if kind == SeriesKind::Renewable {
                assert!(days.iter().flat_map(|d| &d.values).all(|v| *v >= 0.0));
            }
            let again = parse_series(&series_to_csv(&days), &columns, kind).expect("re-parse");
            assert_eq!(again, days);
        }
    }
});
