//! Driver waveform files: a `# ui=<seconds>` line, then `time_s,volts`
//! rows of the driver's response to one isolated 1-bit on a uniform grid.

use std::fmt::Write as _;
use std::path::Path;

use pwbsi_core::linksim::{DriverWaveform, LinkError};
use thiserror::Error;

/// Calibrated default driver: swing, edge time as a fraction of the UI,
/// and time resolution.
pub const DEFAULT_SWING_V: f64 = 1.1;
pub const DEFAULT_EDGE_UI: f64 = 0.1;
pub const DEFAULT_SAMPLES_PER_UI: usize = 40;
/// Relative tolerance on the spacing of the time column.
const SPACING_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("driver file lacks the `# ui=<seconds>` header line")]
    MissingUi,
    #[error("line {line}: {why}")]
    Line { line: usize, why: String },
    #[error("driver file needs at least two samples")]
    TooFewSamples,
    #[error("line {line}: time step differs from the first step")]
    NonUniform { line: usize },
    #[error("{0}")]
    Waveform(#[from] LinkError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Trapezoid at the calibrated defaults for `rate_gbps`.
pub fn default_driver(rate_gbps: f64) -> DriverWaveform {
    let ui = 1e-9 / rate_gbps;
    DriverWaveform::trapezoid(DEFAULT_SWING_V, ui, DEFAULT_EDGE_UI * ui, DEFAULT_SAMPLES_PER_UI)
}

pub fn parse_driver_csv(text: &str) -> Result<DriverWaveform, DriverError> {
    let mut ui: Option<f64> = None;
    let mut times = Vec::new();
    let mut volts = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() {
            continue;
        }
        if let Some(comment) = content.strip_prefix('#') {
            if let Some(value) = comment.trim().strip_prefix("ui=") {
                let v: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| DriverError::Line { line, why: format!("`{}` is not a unit interval", value.trim()) })?;
                ui = Some(v);
            }
            continue;
        }
        let mut cells = content.split(',').map(str::trim);
        let (Some(t), Some(v), None) = (cells.next(), cells.next(), cells.next()) else {
            return Err(DriverError::Line { line, why: "expected two columns".into() });
        };
        match (t.parse::<f64>(), v.parse::<f64>()) {
            (Ok(t), Ok(v)) => {
                times.push((line, t));
                volts.push(v);
            }
            // a column header before the first sample
            _ if times.is_empty() && t.parse::<f64>().is_err() => continue,
            _ => return Err(DriverError::Line { line, why: format!("`{content}` is not a time, voltage pair") }),
        }
    }
    let ui = ui.ok_or(DriverError::MissingUi)?;
    if times.len() < 2 {
        return Err(DriverError::TooFewSamples);
    }
    let dt = times[1].1 - times[0].1;
    for w in times.windows(2) {
        if ((w[1].1 - w[0].1) - dt).abs() > SPACING_TOLERANCE * dt.abs() {
            return Err(DriverError::NonUniform { line: w[1].0 });
        }
    }
    let dt = (times[times.len() - 1].1 - times[0].1) / (times.len() - 1) as f64;
    Ok(DriverWaveform::new(dt, volts, ui)?)
}

pub fn read_driver(path: &Path) -> Result<DriverWaveform, DriverError> {
    let text = std::fs::read_to_string(path).map_err(|source| DriverError::Io { path: path.display().to_string(), source })?;
    parse_driver_csv(&text)
}

/// Driver file text; times and voltages read back exactly.
pub fn write_driver_csv(d: &DriverWaveform) -> String {
    let mut out = format!("# ui={}\ntime_s,volts\n", d.bit_period_s);
    for (i, v) in d.samples_v.iter().enumerate() {
        writeln!(out, "{},{}", i as f64 * d.dt_s, v).unwrap();
    }
    out
}
