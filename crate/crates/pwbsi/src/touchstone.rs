//! Touchstone v1 reader and writer for 4-port S-parameter files.
//!
//! Each frequency record holds the frequency followed by the 4×4 matrix in
//! row order, as real/imaginary, magnitude/angle or dB/angle pairs. Records
//! may wrap over any number of lines but always start on a fresh line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use pwbsi_core::network::{Matrix4, NetworkData, NetworkError};
use thiserror::Error;

use crate::numfmt::SIG_DIGITS;

const PORTS: usize = 4;
const VALUES_PER_RECORD: usize = 1 + 2 * PORTS * PORTS;
/// Magnitude floor of the dB format; an exact zero is written at this level.
const DB_FLOOR: f64 = -400.0;

#[derive(Debug, Error)]
pub enum TouchstoneError {
    #[error("line {line}: malformed option line: {why}")]
    OptionLine { line: usize, why: String },
    #[error("line {line}: Touchstone 2 keyword `{keyword}` is not supported; only version 1 files are read")]
    Version2 { line: usize, keyword: String },
    #[error("line {line}: `{token}` is not a number")]
    Number { line: usize, token: String },
    #[error("line {line}: non-monotone frequency {freq_hz} Hz after {previous_hz} Hz")]
    NonMonotone { line: usize, freq_hz: f64, previous_hz: f64 },
    #[error("line {line}: truncated matrix block: {got} of {want} values")]
    Truncated { line: usize, got: usize, want: usize },
    #[error("line {line}: record does not end on a line boundary after {want} values")]
    Misaligned { line: usize, want: usize },
    #[error("line {line}: unsupported port count {ports}; only 4-port data is read")]
    UnsupportedPorts { line: usize, ports: usize },
    #[error("no frequency records")]
    Empty,
    #[error("{0}")]
    Network(#[from] NetworkError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// How complex entries are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DataFormat {
    /// Real and imaginary parts.
    #[default]
    Ri,
    /// Linear magnitude and angle in degrees.
    Ma,
    /// Magnitude in dB and angle in degrees.
    Db,
}

impl DataFormat {
    fn keyword(self) -> &'static str {
        match self {
            DataFormat::Ri => "RI",
            DataFormat::Ma => "MA",
            DataFormat::Db => "DB",
        }
    }

    fn pair(self, a: f64, b: f64) -> Complex64 {
        match self {
            DataFormat::Ri => Complex64::new(a, b),
            DataFormat::Ma => Complex64::from_polar(a, b.to_radians()),
            DataFormat::Db => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
        }
    }

    fn split(self, z: Complex64) -> (f64, f64) {
        match self {
            DataFormat::Ri => (z.re, z.im),
            DataFormat::Ma => (z.norm(), z.arg().to_degrees()),
            DataFormat::Db => {
                let mag = z.norm();
                let db = if mag > 0.0 { (20.0 * mag.log10()).max(DB_FLOOR) } else { DB_FLOOR };
                (db, z.arg().to_degrees())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Options {
    unit_hz: f64,
    format: DataFormat,
    z_ref_ohm: f64,
}

impl Default for Options {
    fn default() -> Self {
        // Touchstone 1 defaults
        Options { unit_hz: 1e9, format: DataFormat::Ma, z_ref_ohm: 50.0 }
    }
}

fn parse_options(body: &str, line: usize) -> Result<Options, TouchstoneError> {
    let bad = |why: String| TouchstoneError::OptionLine { line, why };
    let mut opts = Options::default();
    let mut tokens = body.split_whitespace();
    while let Some(tok) = tokens.next() {
        match tok.to_ascii_uppercase().as_str() {
            "HZ" => opts.unit_hz = 1.0,
            "KHZ" => opts.unit_hz = 1e3,
            "MHZ" => opts.unit_hz = 1e6,
            "GHZ" => opts.unit_hz = 1e9,
            "S" => {}
            p @ ("Y" | "Z" | "H" | "G") => return Err(bad(format!("{p}-parameters are not supported"))),
            "RI" => opts.format = DataFormat::Ri,
            "MA" => opts.format = DataFormat::Ma,
            "DB" => opts.format = DataFormat::Db,
            "R" => {
                let value = tokens.next().ok_or_else(|| bad("`R` without a reference impedance".into()))?;
                opts.z_ref_ohm = value
                    .parse::<f64>()
                    .ok()
                    .filter(|z| z.is_finite() && *z > 0.0)
                    .ok_or_else(|| bad(format!("invalid reference impedance `{value}`")))?;
            }
            _ => return Err(bad(format!("unknown token `{tok}`"))),
        }
    }
    Ok(opts)
}

/// Port count implied by the first two data lines of a v1 file: one- and
/// two-port records sit on one line, three-port rows hold three pairs.
fn foreign_port_count(first: usize, second: Option<usize>) -> Option<usize> {
    match (first, second) {
        (3, _) => Some(1),
        (9, Some(9)) => Some(2),
        (7, _) => Some(3),
        _ => None,
    }
}

/// Parse Touchstone v1 text holding 4-port S-parameters.
pub fn parse_touchstone(text: &str) -> Result<NetworkData, TouchstoneError> {
    let mut options: Option<Options> = None;
    let mut data_lines: Vec<(usize, Vec<&str>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('!').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            let keyword = content.split(']').next().unwrap_or(content).to_string() + "]";
            return Err(TouchstoneError::Version2 { line, keyword });
        }
        if let Some(body) = content.strip_prefix('#') {
            // only the first option line counts
            if options.is_none() {
                options = Some(parse_options(body, line)?);
            } else {
                log::warn!("line {line}: additional option line ignored");
            }
            continue;
        }
        data_lines.push((line, content.split_whitespace().collect()));
    }
    let opts = options.unwrap_or_default();
    let Some((first_line, first)) = data_lines.first() else {
        return Err(TouchstoneError::Empty);
    };
    if let Some(ports) = foreign_port_count(first.len(), data_lines.get(1).map(|(_, t)| t.len())) {
        return Err(TouchstoneError::UnsupportedPorts { line: *first_line, ports });
    }

    let mut freqs = Vec::new();
    let mut matrices: Vec<Matrix4> = Vec::new();
    let mut record: Vec<f64> = Vec::with_capacity(VALUES_PER_RECORD);
    let mut record_line = 0;
    for (line, tokens) in &data_lines {
        if record.is_empty() {
            record_line = *line;
        }
        for tok in tokens {
            let v: f64 = tok
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| TouchstoneError::Number { line: *line, token: tok.to_string() })?;
            if record.len() == VALUES_PER_RECORD {
                return Err(TouchstoneError::Misaligned { line: *line, want: VALUES_PER_RECORD });
            }
            record.push(v);
        }
        if record.len() == VALUES_PER_RECORD {
            let f = record[0] * opts.unit_hz;
            if let Some(&previous_hz) = freqs.last() {
                if f <= previous_hz {
                    return Err(TouchstoneError::NonMonotone { line: record_line, freq_hz: f, previous_hz });
                }
            }
            let mut m = [[Complex64::new(0.0, 0.0); PORTS]; PORTS];
            for (k, pair) in record[1..].chunks_exact(2).enumerate() {
                m[k / PORTS][k % PORTS] = opts.format.pair(pair[0], pair[1]);
            }
            freqs.push(f);
            matrices.push(m);
            record.clear();
        }
    }
    if !record.is_empty() {
        return Err(TouchstoneError::Truncated { line: record_line, got: record.len() - 1, want: VALUES_PER_RECORD - 1 });
    }
    Ok(NetworkData::new(freqs, matrices, opts.z_ref_ohm)?)
}

/// Read and parse a `.s4p` file; other `.sNp` extensions are rejected.
pub fn read_touchstone(path: &Path) -> Result<NetworkData, TouchstoneError> {
    if let Some(ext) = path.extension().and_then(|e| e.to_str()) {
        let lower = ext.to_ascii_lowercase();
        if let Some(n) = lower.strip_prefix('s').and_then(|r| r.strip_suffix('p')).and_then(|n| n.parse::<usize>().ok()) {
            if n != PORTS {
                return Err(TouchstoneError::UnsupportedPorts { line: 0, ports: n });
            }
        }
    }
    let text = fs::read_to_string(path).map_err(|source| TouchstoneError::Io { path: path.display().to_string(), source })?;
    parse_touchstone(&text)
}

/// Writer settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WriteOptions {
    pub format: DataFormat,
    /// Significant digits of every matrix value.
    pub precision: usize,
}

impl Default for WriteOptions {
    fn default() -> Self {
        WriteOptions { format: DataFormat::Ri, precision: SIG_DIGITS }
    }
}

/// Touchstone v1 text of `net`. Frequencies are written in Hz with enough
/// digits to read back exactly; matrix values at the requested precision.
pub fn write_touchstone(net: &NetworkData, opts: &WriteOptions) -> String {
    let digits = opts.precision.max(1) - 1;
    let mut out = String::with_capacity(net.len() * 4 * (PORTS * 2 * (digits + 9) + 16) + 64);
    out.push_str("! 4-port S-parameters\n");
    writeln!(out, "# HZ S {} R {}", opts.format.keyword(), net.z_ref_ohm()).unwrap();
    for (f, m) in net.freqs_hz().iter().zip(net.matrices()) {
        for (row, entries) in m.iter().enumerate() {
            if row == 0 {
                write!(out, "{f}").unwrap();
            } else {
                out.push(' ');
            }
            for z in entries {
                let (a, b) = opts.format.split(*z);
                write!(out, " {a:.digits$e} {b:.digits$e}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

/// Write `net` to `path` in Touchstone v1 form.
pub fn save_touchstone(net: &NetworkData, path: &Path, opts: &WriteOptions) -> Result<(), TouchstoneError> {
    fs::write(path, write_touchstone(net, opts)).map_err(|source| TouchstoneError::Io { path: path.display().to_string(), source })
}

/// Warning text when the file's reference impedance differs from the one
/// the analysis expects; no renormalization is done.
pub fn reference_mismatch(net: &NetworkData, expected_ohm: f64) -> Option<String> {
    (net.z_ref_ohm() != expected_ohm)
        .then(|| format!("reference impedance {} ohm differs from the expected {} ohm; data used as is", net.z_ref_ohm(), expected_ohm))
}
