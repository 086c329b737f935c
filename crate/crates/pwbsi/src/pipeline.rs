//! The batch analysis: a per-board reference pass, then a deterministic
//! parallel map over nets with an ordered reduce.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use pwbsi_core::network::NetworkData;
use pwbsi_core::outcome::{analyze_net, board_reference, AnalysisConfig, BoardReference};
use pwbsi_core::record::{NetRecord, OutcomeRow};
use rayon::prelude::*;
use thiserror::Error;

use crate::manifest::resolve;
use crate::numfmt::num;
use crate::table::{layout, OutcomeTable, TableError};
use crate::touchstone::{read_touchstone, reference_mismatch};

/// Largest tolerated share of failed nets; above it a run is a failure.
pub const FAILURE_THRESHOLD: f64 = 0.01;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("{0}")]
    Table(#[from] TableError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// A net that produced no outcome row, and why.
#[derive(Debug, Clone, PartialEq)]
pub struct NetFailure {
    pub board_serial: String,
    pub net_name: String,
    pub s4p_path: String,
    pub error: String,
}

/// Reference velocity of one board and the net it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct BoardRef {
    pub board_serial: String,
    pub reference_net: Option<String>,
    pub reference: Result<BoardReference, String>,
}

/// Everything one analysis run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRun {
    pub table: OutcomeTable,
    pub failures: Vec<NetFailure>,
    pub boards: Vec<BoardRef>,
}

impl AnalysisRun {
    pub fn attempted(&self) -> usize {
        self.table.len() + self.failures.len()
    }

    pub fn failure_fraction(&self) -> f64 {
        match self.attempted() {
            0 => 0.0,
            n => self.failures.len() as f64 / n as f64,
        }
    }

    pub fn exceeds_failure_threshold(&self) -> bool {
        self.failure_fraction() > FAILURE_THRESHOLD
    }
}

/// Loader reading each record's Touchstone file relative to `base_dir`,
/// warning when its reference impedance is not `z_ref_ohm`.
pub fn file_loader(base_dir: PathBuf, z_ref_ohm: f64) -> impl Fn(&NetRecord) -> Result<NetworkData, String> + Sync {
    move |rec: &NetRecord| {
        let net = read_touchstone(&resolve(&base_dir, rec)).map_err(|e| e.to_string())?;
        if let Some(w) = reference_mismatch(&net, z_ref_ohm) {
            log::warn!("{}/{}: {w}", rec.board_serial, rec.net_name);
        }
        Ok(net)
    }
}

fn reference_for<L>(board: &str, nets: &[&NetRecord], load: &L, cfg: &AnalysisConfig) -> BoardRef
where
    L: Fn(&NetRecord) -> Result<NetworkData, String> + Sync,
{
    if cfg.skew_freqs_hz.is_empty() {
        return BoardRef { board_serial: board.into(), reference_net: None, reference: Ok(BoardReference::constant(&[], 0.0)) };
    }
    // longest first; a net that cannot be read hands over to the next one
    let mut candidates: Vec<(&NetRecord, f64)> = nets.iter().filter_map(|r| r.mean_length_in().map(|l| (*r, l))).collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.net_name.cmp(&b.0.net_name)));
    let mut last_error = String::from("no net with known lengths");
    for (rec, _) in candidates {
        match load(rec).and_then(|net| board_reference(&net, rec, &cfg.skew_freqs_hz).map_err(|e| e.to_string())) {
            Ok(reference) => {
                return BoardRef { board_serial: board.into(), reference_net: Some(rec.net_name.clone()), reference: Ok(reference) }
            }
            Err(e) => {
                log::warn!("{board}/{}: unusable as board reference: {e}", rec.net_name);
                last_error = format!("{}: {e}", rec.net_name);
            }
        }
    }
    BoardRef { board_serial: board.into(), reference_net: None, reference: Err(last_error) }
}

/// Analyze every record on a pool of `threads` workers (all cores when
/// `None`). Output is independent of the worker count.
pub fn analyze<L>(records: &[NetRecord], load: L, cfg: &AnalysisConfig, threads: Option<usize>) -> Result<AnalysisRun, PipelineError>
where
    L: Fn(&NetRecord) -> Result<NetworkData, String> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build()?;
    let mut by_board: BTreeMap<&str, Vec<&NetRecord>> = BTreeMap::new();
    for r in records {
        by_board.entry(r.board_serial.as_str()).or_default().push(r);
    }
    let by_board: Vec<(&str, Vec<&NetRecord>)> = by_board.into_iter().collect();

    let (boards, results) = pool.install(|| {
        let boards: Vec<BoardRef> = by_board.par_iter().map(|(b, nets)| reference_for(b, nets, &load, cfg)).collect();
        let refs: BTreeMap<&str, &BoardRef> = boards.iter().map(|b| (b.board_serial.as_str(), b)).collect();
        let results: Vec<Result<OutcomeRow, String>> = records
            .par_iter()
            .map(|rec| {
                let board = refs[rec.board_serial.as_str()]
                    .reference
                    .as_ref()
                    .map_err(|e| format!("no board reference ({e})"))?;
                let net = load(rec)?;
                analyze_net(&net, rec, board, cfg).map_err(|e| e.to_string())
            })
            .collect();
        (boards, results)
    });

    let mut rows = Vec::with_capacity(records.len());
    let mut failures = Vec::new();
    for (rec, result) in records.iter().zip(results) {
        match result {
            Ok(row) => rows.push((rec.clone(), row)),
            Err(error) => {
                log::warn!("{}/{}: {error}", rec.board_serial, rec.net_name);
                failures.push(NetFailure {
                    board_serial: rec.board_serial.clone(),
                    net_name: rec.net_name.clone(),
                    s4p_path: rec.s4p_path.clone(),
                    error,
                });
            }
        }
    }
    failures.sort_by(|a, b| (&a.board_serial, &a.net_name).cmp(&(&b.board_serial, &b.net_name)));
    Ok(AnalysisRun { table: OutcomeTable::from_rows(layout(cfg), rows), failures, boards })
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

pub fn failures_csv(failures: &[NetFailure]) -> String {
    csv_text(
        &["board_serial", "net_name", "s4p_path", "error"],
        failures.iter().map(|f| vec![f.board_serial.clone(), f.net_name.clone(), f.s4p_path.clone(), f.error.clone()]),
    )
}

pub fn board_references_csv(boards: &[BoardRef]) -> String {
    let mut rows = Vec::new();
    for b in boards {
        match &b.reference {
            Ok(r) => {
                for s in &r.velocity_m_per_s {
                    rows.push(vec![
                        b.board_serial.clone(),
                        b.reference_net.clone().unwrap_or_default(),
                        num(s.freq_hz),
                        num(s.value),
                        String::new(),
                    ]);
                }
            }
            Err(e) => rows.push(vec![b.board_serial.clone(), String::new(), String::new(), String::new(), e.clone()]),
        }
    }
    csv_text(&["board_serial", "reference_net", "freq_hz [Hz]", "velocity [m/s]", "error"], rows)
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<(), PipelineError> {
    fs::write(path, text).map_err(|source| PipelineError::Io { path: path.display().to_string(), source })
}

/// Write the outcome table (CSV and JSON), the failure list and the board
/// references into `dir`.
pub fn write_run(dir: &Path, run: &AnalysisRun) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(|source| PipelineError::Io { path: dir.display().to_string(), source })?;
    write_file(&dir.join("outcomes.csv"), &run.table.to_csv()?)?;
    write_file(&dir.join("outcomes.json"), &run.table.to_json()?)?;
    write_file(&dir.join("failures.csv"), &failures_csv(&run.failures))?;
    write_file(&dir.join("board_references.csv"), &board_references_csv(&run.boards))?;
    Ok(())
}
