//! The per-net metadata manifest (`manifest.csv`).

use std::collections::HashMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use pwbsi_core::network::PortMap;
use pwbsi_core::record::NetRecord;
use thiserror::Error;

/// Required columns, in the order they are written.
pub const COLUMNS: [&str; 7] = ["net_name", "board_serial", "routing_core", "len_p_in", "len_n_in", "tester_id", "s4p_path"];
/// Optional column: the file's ports (1-based) for P near, P far, N near,
/// N far, separated by spaces, e.g. `1 3 2 4`.
pub const PORT_MAP_COLUMN: &str = "port_map";

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest header lacks column `{0}`")]
    MissingColumn(String),
    #[error("manifest header has unknown column `{0}`")]
    UnknownColumn(String),
    #[error("manifest header repeats column `{0}`")]
    RepeatedColumn(String),
    #[error("row {row} (line {line}), field `{field}`: {why}")]
    Field { row: usize, line: u64, field: String, why: String },
    #[error("row {row} (line {line}): duplicate net `{net_name}` on board `{board_serial}` (first seen in row {first_row})")]
    Duplicate { row: usize, line: u64, first_row: usize, net_name: String, board_serial: String },
    #[error("manifest: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Validated manifest rows in canonical order, plus what was noticed on
/// the way.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub records: Vec<NetRecord>,
    pub warnings: Vec<String>,
}

/// Canonical row order: board serial, then net name.
pub fn canonical_sort(records: &mut [NetRecord]) {
    records.sort_by(|a, b| (&a.board_serial, &a.net_name).cmp(&(&b.board_serial, &b.net_name)));
}

fn parse_port_map(text: &str) -> Result<PortMap, String> {
    let ports: Vec<usize> = text
        .split(|c: char| c.is_whitespace() || c == ';')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().map_err(|_| format!("`{t}` is not a port number")))
        .collect::<Result<_, _>>()?;
    if ports.len() != 4 || ports.contains(&0) {
        return Err(format!("expected four 1-based ports, got `{text}`"));
    }
    let map = PortMap { p_near: ports[0] - 1, p_far: ports[1] - 1, n_near: ports[2] - 1, n_far: ports[3] - 1 };
    if !map.is_permutation() {
        return Err(format!("`{text}` is not a permutation of ports 1–4"));
    }
    Ok(map)
}

fn format_port_map(map: &PortMap) -> String {
    map.as_array().iter().map(|p| (p + 1).to_string()).collect::<Vec<_>>().join(" ")
}

/// Parse manifest CSV text. Rows come back in canonical order; file
/// existence is not checked here (see [`load_manifest_file`]).
pub fn load_manifest<R: Read>(reader: R) -> Result<Manifest, ManifestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        if !COLUMNS.contains(&h) && h != PORT_MAP_COLUMN {
            return Err(ManifestError::UnknownColumn(h.to_string()));
        }
        if index.insert(h, i).is_some() {
            return Err(ManifestError::RepeatedColumn(h.to_string()));
        }
    }
    for c in COLUMNS {
        if !index.contains_key(c) {
            return Err(ManifestError::MissingColumn(c.to_string()));
        }
    }

    let mut records = Vec::new();
    let mut seen: HashMap<(String, String), usize> = HashMap::new();
    for (i, result) in rdr.records().enumerate() {
        let rec = result?;
        let row = i + 1;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |name: &str| rec.get(index[name]).unwrap_or("");
        let fail = |name: &str, why: String| ManifestError::Field { row, line, field: name.to_string(), why };
        let text = |name: &str| -> Result<String, ManifestError> {
            let v = field(name);
            if v.is_empty() {
                return Err(fail(name, "empty".into()));
            }
            Ok(v.to_string())
        };
        let length = |name: &str| -> Result<f64, ManifestError> {
            let v = field(name);
            let x: f64 = v.parse().map_err(|_| fail(name, format!("`{v}` is not a number")))?;
            if !(x.is_finite() && x > 0.0) {
                return Err(fail(name, format!("length must be positive, got {v}")));
            }
            Ok(x)
        };
        let core_text = field("routing_core");
        let routing_core: u32 =
            core_text.parse().map_err(|_| fail("routing_core", format!("`{core_text}` is not a non-negative integer")))?;
        let port_map = match index.get(PORT_MAP_COLUMN).map(|&k| rec.get(k).unwrap_or("")) {
            Some(t) if !t.is_empty() => parse_port_map(t).map_err(|why| fail(PORT_MAP_COLUMN, why))?,
            _ => PortMap::default(),
        };
        let record = NetRecord {
            net_name: text("net_name")?,
            board_serial: text("board_serial")?,
            routing_core,
            len_p_in: Some(length("len_p_in")?),
            len_n_in: Some(length("len_n_in")?),
            tester_id: text("tester_id")?,
            s4p_path: text("s4p_path")?,
            port_map,
        };
        let key = (record.net_name.clone(), record.board_serial.clone());
        if let Some(&first_row) = seen.get(&key) {
            return Err(ManifestError::Duplicate { row, line, first_row, net_name: key.0, board_serial: key.1 });
        }
        seen.insert(key, row);
        records.push(record);
    }
    canonical_sort(&mut records);
    Ok(Manifest { records, warnings: Vec::new() })
}

/// Where a record's measurement file lives: relative paths are taken from
/// the manifest's directory.
pub fn resolve(base_dir: &Path, rec: &NetRecord) -> PathBuf {
    let p = Path::new(&rec.s4p_path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}

/// Load a manifest file and report every row whose measurement file is
/// missing as a warning.
pub fn load_manifest_file(path: &Path) -> Result<Manifest, ManifestError> {
    let file = fs::File::open(path).map_err(|source| ManifestError::Io { path: path.display().to_string(), source })?;
    let mut manifest = load_manifest(std::io::BufReader::new(file))?;
    let base = path.parent().unwrap_or(Path::new("."));
    for rec in &manifest.records {
        let p = resolve(base, rec);
        if !p.is_file() {
            manifest.warnings.push(format!("{}/{}: measurement file {} is missing", rec.board_serial, rec.net_name, p.display()));
        }
    }
    Ok(manifest)
}

/// Manifest CSV for `records`, in the order given. Lengths are written with
/// enough digits to read back exactly. The port map column appears only
/// when some record uses a non-default map.
pub fn write_manifest(records: &[NetRecord]) -> Result<String, ManifestError> {
    let with_map = records.iter().any(|r| r.port_map != PortMap::default());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = COLUMNS.to_vec();
    if with_map {
        header.push(PORT_MAP_COLUMN);
    }
    w.write_record(&header)?;
    let len = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in records {
        let mut row = vec![
            r.net_name.clone(),
            r.board_serial.clone(),
            r.routing_core.to_string(),
            len(r.len_p_in),
            len(r.len_n_in),
            r.tester_id.clone(),
            r.s4p_path.clone(),
        ];
        if with_map {
            row.push(format_port_map(&r.port_map));
        }
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| ManifestError::Io { path: "<memory>".into(), source: e.into_error() })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
