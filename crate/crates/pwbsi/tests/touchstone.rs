//! Touchstone reader and writer: option handling, malformed input and
//! round trips in every data format.

use num_complex::Complex64;
use std::f64::consts::PI;

use proptest::prelude::*;
use pwbsi::touchstone::{parse_touchstone, read_touchstone, write_touchstone, DataFormat, TouchstoneError, WriteOptions};
use pwbsi_core::network::{Matrix4, NetworkData};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// One record: the frequency followed by 16 pairs over four lines.
fn record(freq: &str, pair: &str) -> String {
    let row = [pair; 4].join("  ");
    format!("{freq} {row}\n {row}\n {row}\n {row}\n")
}

#[test]
fn zero_matrix_record() {
    let text = format!("! zeros\n# GHz S RI R 50\n{}{}", record("1", "0 0"), record("2", "0 0"));
    let net = parse_touchstone(&text).unwrap();
    assert_eq!(net.freqs_hz(), &[1e9, 2e9]);
    assert!(net.matrices().iter().flatten().flatten().all(|z| *z == ZERO));
    assert_eq!(net.z_ref_ohm(), 50.0);
}

#[test]
fn magnitude_angle_and_db_forms() {
    let net = parse_touchstone(&format!("# MHZ S MA R 50\n{}{}", record("100", "1 -90"), record("200", "1 -90"))).unwrap();
    assert_eq!(net.freqs_hz(), &[100e6, 200e6]);
    let z = net.matrices()[0][1][0];
    assert!((z - Complex64::new(0.0, -1.0)).norm() < 1e-15, "{z}");

    let net = parse_touchstone(&format!("# HZ S DB R 50\n{}{}", record("1e9", "-20 180"), record("2e9", "-20 180"))).unwrap();
    assert!((net.matrices()[0][3][2] - Complex64::new(-0.1, 0.0)).norm() < 1e-15);
}

#[test]
fn option_defaults_are_ghz_ma_50_ohm() {
    let net = parse_touchstone(&format!("{}{}", record("3", "0.5 0"), record("4", "0.5 0"))).unwrap();
    assert_eq!(net.freqs_hz(), &[3e9, 4e9]);
    assert_eq!(net.matrices()[0][0][0], Complex64::new(0.5, 0.0));
    assert_eq!(net.z_ref_ohm(), 50.0);
}

#[test]
fn values_may_wrap_over_any_lines() {
    let flat: Vec<String> = std::iter::once("1".to_string()).chain((0..32).map(|k| k.to_string())).collect();
    let text = format!("# GHZ S RI R 50\n{}\n{}\n{}", flat[..20].join(" "), flat[20..].join(" "), record("2", "0 0"));
    let net = parse_touchstone(&text).unwrap();
    assert_eq!(net.matrices()[0][3][3], Complex64::new(30.0, 31.0));
}

#[test]
fn non_monotone_frequencies_are_rejected() {
    let text = format!("# GHZ S RI R 50\n{}{}", record("2", "0 0"), record("1", "0 0"));
    match parse_touchstone(&text) {
        Err(TouchstoneError::NonMonotone { line, freq_hz, previous_hz }) => {
            assert_eq!((line, freq_hz, previous_hz), (6, 1e9, 2e9));
        }
        other => panic!("{other:?}"),
    }
    let repeated = format!("# GHZ S RI R 50\n{}{}", record("1", "0 0"), record("1", "0 0"));
    assert!(matches!(parse_touchstone(&repeated), Err(TouchstoneError::NonMonotone { .. })));
}

#[test]
fn version_2_files_are_rejected() {
    let text = format!("[Version] 2.0\n# GHZ S RI R 50\n[Number of Ports] 4\n{}", record("1", "0 0"));
    match parse_touchstone(&text) {
        Err(TouchstoneError::Version2 { line: 1, keyword }) => assert_eq!(keyword, "[Version]"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn truncated_and_misaligned_records() {
    let mut text = format!("# GHZ S RI R 50\n{}", record("1", "0 0"));
    text.push_str("2 0 0 0 0\n");
    match parse_touchstone(&text) {
        Err(TouchstoneError::Truncated { line, got, want }) => assert_eq!((line, got, want), (6, 4, 32)),
        other => panic!("{other:?}"),
    }
    let long = format!("# GHZ S RI R 50\n{}", record("1", "0 0").replace("0 0\n", "0 0 7\n"));
    assert!(matches!(parse_touchstone(&long), Err(TouchstoneError::Misaligned { .. })));
    assert!(matches!(parse_touchstone("# GHZ S RI R 50\n"), Err(TouchstoneError::Empty)));
    assert!(matches!(parse_touchstone(&record("1", "x 0")), Err(TouchstoneError::Number { line: 1, .. })));
}

#[test]
fn other_port_counts_are_rejected() {
    // two-port rows hold the frequency and four pairs
    let two = "# GHZ S RI R 50\n1 0 0 1 0 1 0 0 0\n2 0 0 1 0 1 0 0 0\n";
    assert!(matches!(parse_touchstone(two), Err(TouchstoneError::UnsupportedPorts { ports: 2, .. })));
    let one = "# GHZ S RI R 50\n1 0.1 0\n";
    assert!(matches!(parse_touchstone(one), Err(TouchstoneError::UnsupportedPorts { ports: 1, .. })));
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("net.s2p");
    std::fs::write(&p, two).unwrap();
    assert!(matches!(read_touchstone(&p), Err(TouchstoneError::UnsupportedPorts { ports: 2, line: 0 })));
}

#[test]
fn unsupported_options_are_rejected() {
    for opt in ["# GHZ Z RI R 50", "# GHZ S RI R -5", "# GHZ S XY"] {
        let text = format!("{opt}\n{}", record("1", "0 0"));
        assert!(matches!(parse_touchstone(&text), Err(TouchstoneError::OptionLine { line: 1, .. })), "{opt}");
    }
}

fn network(values: &[(f64, f64)], points: usize) -> NetworkData {
    let freqs: Vec<f64> = (1..=points).map(|k| k as f64 * 12.5e6).collect();
    let mats: Vec<Matrix4> = (0..points)
        .map(|p| {
            let mut m = [[ZERO; 4]; 4];
            for (k, z) in m.iter_mut().flatten().enumerate() {
                let (mag, ang) = values[(p * 16 + k) % values.len()];
                *z = Complex64::from_polar(mag, ang);
            }
            m
        })
        .collect();
    NetworkData::new(freqs, mats, 50.0).unwrap()
}

fn worst_difference(a: &NetworkData, b: &NetworkData) -> f64 {
    assert_eq!(a.freqs_hz(), b.freqs_hz());
    a.matrices().iter().flatten().flatten().zip(b.matrices().iter().flatten().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_in_every_format(values in prop::collection::vec((0.0f64..1.0, -PI..PI), 16..64), points in 2usize..6) {
        let net = network(&values, points);
        for (format, tol) in [(DataFormat::Ri, 1e-9), (DataFormat::Ma, 1e-7), (DataFormat::Db, 1e-7)] {
            let text = write_touchstone(&net, &WriteOptions { format, ..WriteOptions::default() });
            let back = parse_touchstone(&text).unwrap();
            prop_assert!(worst_difference(&net, &back) < tol, "{:?}", format);
            prop_assert_eq!(back.z_ref_ohm(), 50.0);
        }
    }
}

#[test]
fn exact_zero_survives_db_form() {
    let net = network(&[(0.0, 0.0), (1.0, 0.5)], 2);
    let text = write_touchstone(&net, &WriteOptions { format: DataFormat::Db, ..WriteOptions::default() });
    assert!(worst_difference(&net, &parse_touchstone(&text).unwrap()) < 1e-7);
}
