//! Replays the checked-in fuzz corpus seeds through the decoders.

use std::fs;
use std::path::PathBuf;

use dr_core::format::{decode_population, decode_series, decode_statistics, encode_population, encode_series, encode_statistics};
use dr_core::scenario::{parse_series, series_to_csv, ColumnMap, SeriesKind};
use proptest::prelude::*;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with("seed-"))
        .map(|p| (p.display().to_string(), fs::read_to_string(&p).unwrap()))
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn series_csv_seeds() {
    let mut accepted = 0;
    for (name, text) in seeds("parse_series") {
        for kind in [SeriesKind::Temperature, SeriesKind::Renewable] {
            if let Ok(days) = parse_series(&text, &ColumnMap::default(), kind) {
                accepted += 1;
                let again = parse_series(&series_to_csv(&days), &ColumnMap::default(), kind).unwrap();
                assert_eq!(again, days, "{name}");
            }
        }
    }
    assert!(accepted > 0);
}

#[test]
fn population_seeds() {
    let mut rejected = 0;
    for (name, text) in seeds("decode_population") {
        match decode_population(&text) {
            Ok(pop) => assert_eq!(decode_population(&encode_population(&pop)).unwrap(), pop, "{name}"),
            Err(_) => rejected += 1,
        }
    }
    assert_eq!(rejected, 1);
}

#[test]
fn series_seeds() {
    let mut rejected = 0;
    for (name, text) in seeds("decode_series") {
        match decode_series(&text) {
            Ok(days) => assert_eq!(decode_series(&encode_series(&days)).unwrap(), days, "{name}"),
            Err(_) => rejected += 1,
        }
    }
    assert_eq!(rejected, 1);
}

#[test]
fn statistics_seeds() {
    let mut rejected = 0;
    for (name, text) in seeds("decode_statistics") {
        match decode_statistics(&text) {
            Ok(stats) => assert_eq!(decode_statistics(&encode_statistics(&stats)).unwrap(), stats, "{name}"),
            Err(_) => rejected += 1,
        }
    }
    assert_eq!(rejected, 1);
}

proptest! {
    #[test]
    fn decoders_never_panic(text in "\\PC{0,200}") {
        let _ = decode_population(&text);
        let _ = decode_series(&text);
        let _ = decode_statistics(&text);
        let _ = parse_series(&text, &ColumnMap::default(), SeriesKind::Renewable);
    }

    #[test]
    fn mutated_seeds_never_panic(idx in 0usize..4, cut in 0usize..400, junk in "[ =a-z0-9.#%\n-]{0,12}") {
        let all: Vec<String> = ["decode_population", "decode_series", "decode_statistics", "parse_series"]
            .iter()
            .flat_map(|t| seeds(t))
            .map(|(_, text)| text)
            .collect();
        let text = &all[idx % all.len()];
        let mut cut = cut.min(text.len());
        while !text.is_char_boundary(cut) {
            cut -= 1;
        }
        let mutated = format!("{}{junk}{}", &text[..cut], &text[cut..]);
        let _ = decode_population(&mutated);
        let _ = decode_series(&mutated);
        let _ = decode_statistics(&mutated);
        let _ = parse_series(&mutated, &ColumnMap::default(), SeriesKind::Temperature);
    }
}
