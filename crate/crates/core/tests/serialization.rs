mod common;

use toruszeros::io::{write_bundle_csv, BundleFile, ClassificationFile, StateFile, ZerosFile};
use toruszeros::paths::classify;
use toruszeros::zeros::{find_zeros, state_from_zeros, RootFindConfig};
use toruszeros::Cell;

use common::*;

#[test]
fn bundle_json_round_trip_is_exact() {
    let run = &hamiltonian_runs()[2];
    let b = run.track(run.period / 2000.0).unwrap();
    let text = serde_json::to_string(&BundleFile::from_bundle(&b)).unwrap();
    let back: BundleFile = serde_json::from_str(&text).unwrap();
    let again = back.to_bundle().unwrap();
    assert_eq!(serde_json::to_string(&BundleFile::from_bundle(&again)).unwrap(), text);
    assert_eq!(again.lifted, b.lifted);
    assert_eq!(again.times, b.times);
}

#[test]
fn classification_survives_serialization() {
    let run = &hamiltonian_runs()[0];
    let b = run.track(run.period / 5000.0).unwrap();
    let text = serde_json::to_string(&BundleFile::from_bundle(&b)).unwrap();
    let reread = serde_json::from_str::<BundleFile>(&text).unwrap().to_bundle().unwrap();
    let (c1, c2) = (classify(&b, run.period, None).unwrap(), classify(&reread, run.period, None).unwrap());
    assert_eq!(c1.permutation, c2.permutation);
    let f = ClassificationFile::from_classification(&c1);
    assert!(serde_json::to_string(&f).unwrap().contains("\"M\""));
}

#[test]
fn csv_has_one_row_per_path_and_time() {
    let run = &hamiltonian_runs()[2];
    let b = run.track(run.period / 500.0).unwrap();
    let mut buf = Vec::new();
    write_bundle_csv(&b, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,path_index,re_lifted,im_lifted,re_cell,im_cell");
    assert_eq!(lines.count(), b.len() * b.dim());
}

#[test]
fn conversions_are_deterministic() {
    let cell = Cell::origin(4);
    let state = state_from_zeros(&fig1_zeros()[..3], &cell).unwrap();
    let a = serde_json::to_string(&StateFile::from_state(&state.phase_fixed())).unwrap();
    let b = serde_json::to_string(&StateFile::from_state(&state_from_zeros(&fig1_zeros()[..3], &cell).unwrap().phase_fixed())).unwrap();
    assert_eq!(a, b);
    let zs = find_zeros(&state, &cell, &RootFindConfig::default()).unwrap();
    let z1 = serde_json::to_string(&ZerosFile::from_zero_set(&zs)).unwrap();
    let z2 = serde_json::to_string(&ZerosFile::from_zero_set(&find_zeros(&state, &cell, &RootFindConfig::default()).unwrap())).unwrap();
    assert_eq!(z1, z2);
}

#[test]
fn malformed_state_file_is_rejected() {
    assert!(serde_json::from_str::<StateFile>(r#"{"d": 2, "g": [[1, 0]], "extra": 1}"#).is_err());
    let short: StateFile = serde_json::from_str(r#"{"d": 2, "g": [[1, 0]]}"#).unwrap();
    assert!(short.to_state().is_err());
}
