//! Manifest loading and validation.

use pwbsi::manifest::{load_manifest, load_manifest_file, write_manifest, ManifestError, COLUMNS};
use pwbsi_core::network::PortMap;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn header() -> String {
    COLUMNS.join(",")
}

fn row(net: &str, board: &str, lp: &str) -> String {
    format!("{net},{board},3,{lp},10.0,ATE1,{board}/{net}.s4p")
}

#[test]
fn header_only_manifest_is_empty() {
    let m = load_manifest(format!("{}\n", header()).as_bytes()).unwrap();
    assert!(m.records.is_empty());
    assert!(m.warnings.is_empty());
}

#[test]
fn negative_length_names_row_and_field() {
    let text = format!("{}\n{}\n{}\n", header(), row("N1", "SN1", "10"), row("N2", "SN1", "-1"));
    let err = load_manifest(text.as_bytes()).unwrap_err();
    match &err {
        ManifestError::Field { row, line, field, .. } => assert_eq!((*row, *line, field.as_str()), (2, 3, "len_p_in")),
        other => panic!("{other:?}"),
    }
    let msg = err.to_string();
    assert!(msg.contains("row 2") && msg.contains("len_p_in"), "{msg}");
}

#[test]
fn bad_fields_are_reported() {
    for (bad, field) in [
        (row("N1", "SN1", "x"), "len_p_in"),
        (row("N1", "SN1", "0"), "len_p_in"),
        ("N1,SN1,-3,1,1,ATE1,a.s4p".to_string(), "routing_core"),
        (",SN1,3,1,1,ATE1,a.s4p".to_string(), "net_name"),
        (format!("{},1 2 3", row("N1", "SN1", "1")), "port_map"),
        (format!("{},1 1 2 3", row("N1", "SN1", "1")), "port_map"),
    ] {
        let pad = if bad.split(',').count() == COLUMNS.len() { "," } else { "" };
        let text = format!("{},port_map\n{bad}{pad}\n", header());
        match load_manifest(text.as_bytes()) {
            Err(ManifestError::Field { field: f, .. }) => assert_eq!(f, field, "{bad}"),
            other => panic!("{bad}: {other:?}"),
        }
    }
}

#[test]
fn duplicate_net_on_one_board_is_rejected() {
    let text = format!("{}\n{}\n{}\n{}\n", header(), row("N1", "SN1", "1"), row("N1", "SN2", "1"), row("N1", "SN1", "2"));
    match load_manifest(text.as_bytes()) {
        Err(ManifestError::Duplicate { row, first_row, net_name, board_serial, .. }) => {
            assert_eq!((row, first_row, net_name.as_str(), board_serial.as_str()), (3, 1, "N1", "SN1"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn header_problems() {
    let missing = "net_name,board_serial,routing_core,len_p_in,len_n_in,s4p_path\n";
    assert!(matches!(load_manifest(missing.as_bytes()), Err(ManifestError::MissingColumn(c)) if c == "tester_id"));
    let unknown = format!("{},colour\n", header());
    assert!(matches!(load_manifest(unknown.as_bytes()), Err(ManifestError::UnknownColumn(c)) if c == "colour"));
    let repeated = format!("{},net_name\n", header());
    assert!(matches!(load_manifest(repeated.as_bytes()), Err(ManifestError::RepeatedColumn(_))));
}

#[test]
fn port_map_column_is_one_based() {
    let text = format!("{},port_map\n{},1 3 2 4\n{},\n", header(), row("N1", "SN1", "1"), row("N2", "SN1", "1"));
    let m = load_manifest(text.as_bytes()).unwrap();
    assert_eq!(m.records[0].port_map, PortMap { p_near: 0, p_far: 2, n_near: 1, n_far: 3 });
    assert_eq!(m.records[1].port_map, PortMap::default());
    let back = load_manifest(write_manifest(&m.records).unwrap().as_bytes()).unwrap();
    assert_eq!(back.records, m.records);
}

fn synthetic_rows(n: usize) -> Vec<String> {
    (0..n).map(|i| row(&format!("NET{:05}", i % 2000), &format!("SN{:03}", i / 2000 + 1), &format!("{}", 1.7 + (i % 311) as f64 * 0.1))).collect()
}

#[test]
fn twelve_thousand_rows_load_cleanly_in_any_order() {
    let dir = tempfile::tempdir().unwrap();
    let rows = synthetic_rows(12_000);
    for r in &rows {
        let path = r.split(',').nth(6).unwrap();
        let p = dir.path().join(path);
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(p, "").unwrap();
    }
    let path = dir.path().join("manifest.csv");
    std::fs::write(&path, format!("{}\n{}\n", header(), rows.join("\n"))).unwrap();
    let m = load_manifest_file(&path).unwrap();
    assert_eq!(m.records.len(), 12_000);
    assert!(m.warnings.is_empty(), "{:?}", &m.warnings[..3.min(m.warnings.len())]);

    let mut shuffled = rows.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(5));
    let again = load_manifest(format!("{}\n{}\n", header(), shuffled.join("\n")).as_bytes()).unwrap();
    assert_eq!(again.records, m.records);
    assert!(m.records.windows(2).all(|w| (&w[0].board_serial, &w[0].net_name) < (&w[1].board_serial, &w[1].net_name)));
}

#[test]
fn missing_files_are_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("manifest.csv");
    std::fs::write(&path, format!("{}\n{}\n", header(), row("N1", "SN1", "1"))).unwrap();
    let m = load_manifest_file(&path).unwrap();
    assert_eq!(m.records.len(), 1);
    assert_eq!(m.warnings.len(), 1);
    assert!(m.warnings[0].contains("SN1/N1"));
    assert!(matches!(load_manifest_file(&dir.path().join("none.csv")), Err(ManifestError::Io { .. })));
}
