//! The outcome table: one row per measured net, metadata plus every scalar
//! outcome, with a unit for every column.

use std::collections::BTreeMap;

use pwbsi_core::outcome::AnalysisConfig;
use pwbsi_core::record::{NetRecord, OutcomeRow, Sampled};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::numfmt::{canonical_json, num};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("outcome column `{0}` is not in the table")]
    NoColumn(String),
    #[error("column `{0}` has no entry in the unit dictionary")]
    MissingUnit(String),
    #[error("unrecognized column `{0}`")]
    UnknownColumn(String),
    #[error("row {row}: {why}")]
    Row { row: usize, why: String },
    #[error("malformed table: {0}")]
    Malformed(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// One scalar outcome column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantity {
    RandomSkew { freq_hz: f64 },
    Loss { freq_hz: f64 },
    Scd21 { freq_hz: f64 },
    Sdd11Crossing,
    Impedance,
    ImpedanceWindowStart,
    ImpedanceWindowStop,
    EyeHeight,
    EyeWidth,
    EyeJitter,
    EyeNoise,
}

/// Frequency in GHz, shortest form: `1`, `2.5`.
fn ghz(freq_hz: f64) -> String {
    format!("{}", freq_hz / 1e9)
}

fn parse_ghz(tag: &str) -> Option<f64> {
    tag.parse::<f64>().ok().filter(|g| g.is_finite() && *g > 0.0).map(|g| g * 1e9)
}

impl Quantity {
    /// Machine key, used for CSV headers and JSON fields.
    pub fn key(&self) -> String {
        match self {
            Quantity::RandomSkew { freq_hz } => format!("random_skew_{}ghz_ps", ghz(*freq_hz)),
            Quantity::Loss { freq_hz } => format!("sdd21_loss_{}ghz_db_per_in", ghz(*freq_hz)),
            Quantity::Scd21 { freq_hz } => format!("scd21_{}ghz_db", ghz(*freq_hz)),
            Quantity::Sdd11Crossing => "f_sdd11_minus10db_hz".into(),
            Quantity::Impedance => "impedance_odd_ohm".into(),
            Quantity::ImpedanceWindowStart => "impedance_window_start_s".into(),
            Quantity::ImpedanceWindowStop => "impedance_window_stop_s".into(),
            Quantity::EyeHeight => "eye_height_v".into(),
            Quantity::EyeWidth => "eye_width_ui".into(),
            Quantity::EyeJitter => "eye_jitter_ui".into(),
            Quantity::EyeNoise => "eye_noise_v".into(),
        }
    }

    pub fn from_key(key: &str) -> Option<Quantity> {
        let between = |prefix: &str, suffix: &str| key.strip_prefix(prefix)?.strip_suffix(suffix).and_then(parse_ghz);
        if let Some(freq_hz) = between("random_skew_", "ghz_ps") {
            return Some(Quantity::RandomSkew { freq_hz });
        }
        if let Some(freq_hz) = between("sdd21_loss_", "ghz_db_per_in") {
            return Some(Quantity::Loss { freq_hz });
        }
        if let Some(freq_hz) = between("scd21_", "ghz_db") {
            return Some(Quantity::Scd21 { freq_hz });
        }
        [
            Quantity::Sdd11Crossing,
            Quantity::Impedance,
            Quantity::ImpedanceWindowStart,
            Quantity::ImpedanceWindowStop,
            Quantity::EyeHeight,
            Quantity::EyeWidth,
            Quantity::EyeJitter,
            Quantity::EyeNoise,
        ]
        .into_iter()
        .find(|q| q.key() == key)
    }

    pub fn unit(&self) -> &'static str {
        match self {
            Quantity::RandomSkew { .. } => "ps",
            Quantity::Loss { .. } => "dB/in",
            Quantity::Scd21 { .. } => "dB",
            Quantity::Sdd11Crossing => "Hz",
            Quantity::Impedance => "ohm",
            Quantity::ImpedanceWindowStart | Quantity::ImpedanceWindowStop => "s",
            Quantity::EyeHeight | Quantity::EyeNoise => "V",
            Quantity::EyeWidth | Quantity::EyeJitter => "UI",
        }
    }

    /// Row label of the global summary table.
    pub fn summary_label(&self) -> String {
        match self {
            Quantity::RandomSkew { freq_hz } => format!("Random Skew (ps): {} GHz", ghz(*freq_hz)),
            Quantity::Loss { freq_hz } => format!("SDD21 dB/In: {} GHz", ghz(*freq_hz)),
            Quantity::Scd21 { freq_hz } => format!("SCD21 (dB): {} GHz", ghz(*freq_hz)),
            Quantity::Sdd11Crossing => "Freq, SDD11 @ -10 dB".into(),
            Quantity::Impedance => "Impedance (Ω)".into(),
            Quantity::ImpedanceWindowStart => "Impedance Window Start (s)".into(),
            Quantity::ImpedanceWindowStop => "Impedance Window Stop (s)".into(),
            Quantity::EyeHeight => "Eye Height (volts)".into(),
            Quantity::EyeWidth => "Eye Width (UI)".into(),
            Quantity::EyeJitter => "Eye Jitter (UI)".into(),
            Quantity::EyeNoise => "Vertical Eye Noise (volts)".into(),
        }
    }

    /// Column label of the ANOVA table.
    pub fn anova_label(&self) -> String {
        match self {
            Quantity::RandomSkew { freq_hz } => format!("Random Skew ({} GHz)", ghz(*freq_hz)),
            Quantity::Loss { freq_hz } => format!("dB/In ({} GHz)", ghz(*freq_hz)),
            Quantity::Scd21 { freq_hz } => format!("SCD21 ({} GHz)", ghz(*freq_hz)),
            Quantity::Sdd11Crossing => "Freq, SDD11 @ -10 dB".into(),
            Quantity::Impedance => "Impedance (Ω)".into(),
            Quantity::EyeHeight => "Eye Height".into(),
            Quantity::EyeWidth => "Eye Width".into(),
            Quantity::EyeJitter => "Eye Jitter".into(),
            Quantity::EyeNoise => "Vertical Eye Noise".into(),
            other => other.summary_label(),
        }
    }

    /// Whether the column is a signal-integrity outcome (as opposed to
    /// bookkeeping about how it was measured).
    pub fn is_outcome(&self) -> bool {
        !matches!(self, Quantity::ImpedanceWindowStart | Quantity::ImpedanceWindowStop)
    }

    /// Report order: skew, eye, loss, mode conversion, return loss, impedance.
    fn rank(&self) -> u8 {
        match self {
            Quantity::RandomSkew { .. } => 0,
            Quantity::EyeHeight => 1,
            Quantity::EyeWidth => 2,
            Quantity::EyeJitter => 3,
            Quantity::EyeNoise => 4,
            Quantity::Loss { .. } => 5,
            Quantity::Sdd11Crossing => 6,
            Quantity::Scd21 { .. } => 7,
            Quantity::Impedance => 8,
            Quantity::ImpedanceWindowStart => 9,
            Quantity::ImpedanceWindowStop => 10,
        }
    }

    fn freq(&self) -> f64 {
        match self {
            Quantity::RandomSkew { freq_hz } | Quantity::Loss { freq_hz } | Quantity::Scd21 { freq_hz } => *freq_hz,
            _ => 0.0,
        }
    }

    /// The value of this quantity in an outcome row, when it was computed.
    pub fn extract(&self, row: &OutcomeRow) -> Option<f64> {
        let at = |series: &[Sampled], f: f64| series.iter().find(|s| s.freq_hz == f).map(|s| s.value);
        match self {
            Quantity::RandomSkew { freq_hz } => at(&row.random_skew_ps, *freq_hz),
            Quantity::Loss { freq_hz } => at(&row.loss_db_per_in, *freq_hz),
            Quantity::Scd21 { freq_hz } => at(&row.scd21_db, *freq_hz),
            Quantity::Sdd11Crossing => row.f_sdd11_minus10db_hz,
            Quantity::Impedance => row.impedance.map(|z| z.odd_ohm),
            Quantity::ImpedanceWindowStart => row.impedance.map(|z| z.window_start_s),
            Quantity::ImpedanceWindowStop => row.impedance.map(|z| z.window_stop_s),
            Quantity::EyeHeight => row.eye.map(|e| e.eye_height_v),
            Quantity::EyeWidth => row.eye.map(|e| e.eye_width_ui),
            Quantity::EyeJitter => row.eye.map(|e| e.jitter_ui),
            Quantity::EyeNoise => row.eye.map(|e| e.vertical_eye_noise_v),
        }
    }
}

/// Sort quantities into report order.
pub fn sort_quantities(q: &mut [Quantity]) {
    q.sort_by(|a, b| a.rank().cmp(&b.rank()).then(a.freq().total_cmp(&b.freq())));
}

/// The outcome columns an analysis configuration produces.
pub fn layout(cfg: &AnalysisConfig) -> Vec<Quantity> {
    let mut q: Vec<Quantity> = Vec::new();
    q.extend(cfg.skew_freqs_hz.iter().map(|&freq_hz| Quantity::RandomSkew { freq_hz }));
    q.extend(cfg.loss_freqs_hz.iter().map(|&freq_hz| Quantity::Loss { freq_hz }));
    q.extend(cfg.scd21_freqs_hz.iter().map(|&freq_hz| Quantity::Scd21 { freq_hz }));
    q.push(Quantity::Sdd11Crossing);
    if cfg.impedance.is_some() {
        q.extend([Quantity::Impedance, Quantity::ImpedanceWindowStart, Quantity::ImpedanceWindowStop]);
    }
    if cfg.link.is_some() {
        q.extend([Quantity::EyeHeight, Quantity::EyeWidth, Quantity::EyeJitter, Quantity::EyeNoise]);
    }
    sort_quantities(&mut q);
    q
}

/// Metadata columns and their units (empty for text and labels).
pub const RECORD_COLUMNS: [(&str, &str); 7] = [
    ("net_name", ""),
    ("board_serial", ""),
    ("routing_core", ""),
    ("len_p_in", "in"),
    ("len_n_in", "in"),
    ("tester_id", ""),
    ("s4p_path", ""),
];

/// Values of one net gathered across boards.
#[derive(Debug, Clone, PartialEq)]
pub struct NetGroup {
    pub net_name: String,
    pub values: Vec<f64>,
}

/// Rows of net metadata and outcomes in canonical (board, net) order.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeTable {
    pub records: Vec<NetRecord>,
    pub columns: Vec<Quantity>,
    /// `values[row][column]`; `None` where the outcome does not exist,
    /// such as a return loss that never crosses the threshold.
    pub values: Vec<Vec<Option<f64>>>,
    /// Unit of every column, metadata included.
    pub units: BTreeMap<String, String>,
}

impl OutcomeTable {
    /// An empty table with the given outcome columns.
    pub fn new(columns: Vec<Quantity>) -> Self {
        let mut units: BTreeMap<String, String> =
            RECORD_COLUMNS.iter().map(|(k, u)| (k.to_string(), u.to_string())).collect();
        units.extend(columns.iter().map(|q| (q.key(), q.unit().to_string())));
        OutcomeTable { records: Vec::new(), columns, values: Vec::new(), units }
    }

    /// Assemble analyzed nets into canonical order.
    pub fn from_rows(columns: Vec<Quantity>, rows: Vec<(NetRecord, OutcomeRow)>) -> Self {
        let mut table = OutcomeTable::new(columns);
        let mut rows = rows;
        rows.sort_by(|a, b| (&a.0.board_serial, &a.0.net_name).cmp(&(&b.0.board_serial, &b.0.net_name)));
        for (rec, row) in rows {
            table.values.push(table.columns.iter().map(|q| q.extract(&row)).collect());
            table.records.push(rec);
        }
        table
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Put rows back into canonical order.
    pub fn sort(&mut self) {
        let mut order: Vec<usize> = (0..self.records.len()).collect();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (&self.records[a], &self.records[b]);
            (&ra.board_serial, &ra.net_name).cmp(&(&rb.board_serial, &rb.net_name))
        });
        self.records = order.iter().map(|&i| self.records[i].clone()).collect();
        self.values = order.iter().map(|&i| self.values[i].clone()).collect();
    }

    pub fn column_index(&self, key: &str) -> Result<usize, TableError> {
        self.columns.iter().position(|q| q.key() == key).ok_or_else(|| TableError::NoColumn(key.to_string()))
    }

    /// Every row's value of column `key`.
    pub fn column(&self, key: &str) -> Result<Vec<Option<f64>>, TableError> {
        let c = self.column_index(key)?;
        Ok(self.values.iter().map(|row| row[c]).collect())
    }

    /// Present values of column `key` with the records they belong to.
    pub fn present(&self, key: &str) -> Result<Vec<(&NetRecord, f64)>, TableError> {
        let c = self.column_index(key)?;
        Ok(self.records.iter().zip(&self.values).filter_map(|(r, v)| v[c].map(|x| (r, x))).collect())
    }

    /// Values of column `key` grouped by net name across boards, in net
    /// name order. Boards on which a net is missing or has no value simply
    /// shorten its group.
    pub fn same_net_grouping(&self, key: &str) -> Result<Vec<NetGroup>, TableError> {
        let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for (rec, x) in self.present(key)? {
            groups.entry(rec.net_name.as_str()).or_default().push(x);
        }
        Ok(groups.into_iter().map(|(n, values)| NetGroup { net_name: n.to_string(), values }).collect())
    }

    fn check_units(&self) -> Result<(), TableError> {
        let keys = RECORD_COLUMNS.iter().map(|(k, _)| k.to_string()).chain(self.columns.iter().map(Quantity::key));
        for k in keys {
            if !self.units.contains_key(&k) {
                return Err(TableError::MissingUnit(k));
            }
        }
        Ok(())
    }

    fn header_cell(&self, key: &str) -> String {
        match self.units.get(key).map(String::as_str) {
            Some("") | None => key.to_string(),
            Some(u) => format!("{key} [{u}]"),
        }
    }

    /// CSV with unit-annotated headers (`eye_height_v [V]`); absent values
    /// are empty cells.
    pub fn to_csv(&self) -> Result<String, TableError> {
        self.check_units()?;
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<String> = RECORD_COLUMNS
            .iter()
            .map(|(k, _)| self.header_cell(k))
            .chain(self.columns.iter().map(|q| self.header_cell(&q.key())))
            .collect();
        w.write_record(&header)?;
        for (rec, vals) in self.records.iter().zip(&self.values) {
            let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
            let mut row = vec![
                rec.net_name.clone(),
                rec.board_serial.clone(),
                rec.routing_core.to_string(),
                opt(rec.len_p_in),
                opt(rec.len_n_in),
                rec.tester_id.clone(),
                rec.s4p_path.clone(),
            ];
            row.extend(vals.iter().map(|v| opt(*v)));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| TableError::Malformed(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// JSON with the column dictionary (key, label, unit) and one object
    /// per row; keys sorted, absent values `null`.
    pub fn to_json(&self) -> Result<String, TableError> {
        self.check_units()?;
        let columns: Vec<Value> = RECORD_COLUMNS
            .iter()
            .map(|(k, _)| json!({"key": k, "label": k, "unit": self.units[*k]}))
            .chain(self.columns.iter().map(|q| json!({"key": q.key(), "label": q.summary_label(), "unit": self.units[&q.key()]})))
            .collect();
        let rows: Vec<Value> = self
            .records
            .iter()
            .zip(&self.values)
            .map(|(rec, vals)| {
                let mut m = Map::new();
                m.insert("net_name".into(), json!(rec.net_name));
                m.insert("board_serial".into(), json!(rec.board_serial));
                m.insert("routing_core".into(), json!(rec.routing_core));
                m.insert("len_p_in".into(), json!(rec.len_p_in));
                m.insert("len_n_in".into(), json!(rec.len_n_in));
                m.insert("tester_id".into(), json!(rec.tester_id));
                m.insert("s4p_path".into(), json!(rec.s4p_path));
                for (q, v) in self.columns.iter().zip(vals) {
                    m.insert(q.key(), json!(v));
                }
                Value::Object(m)
            })
            .collect();
        let units: Map<String, Value> = self.units.iter().map(|(k, u)| (k.clone(), json!(u))).collect();
        Ok(canonical_json(&json!({"columns": columns, "rows": rows, "units": units})))
    }

    /// Read back [`OutcomeTable::to_csv`] output.
    pub fn from_csv(text: &str) -> Result<Self, TableError> {
        let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let headers = rdr.headers()?.clone();
        let mut units = BTreeMap::new();
        let mut keys = Vec::new();
        for h in headers.iter() {
            let (key, unit) = match h.split_once(" [") {
                Some((k, rest)) => (k, rest.strip_suffix(']').ok_or_else(|| TableError::Malformed(format!("header `{h}`")))?),
                None => (h, ""),
            };
            units.insert(key.to_string(), unit.to_string());
            keys.push(key.to_string());
        }
        if keys.len() < RECORD_COLUMNS.len() || keys.iter().zip(RECORD_COLUMNS).any(|(k, (want, _))| k != want) {
            return Err(TableError::Malformed("header must start with the net metadata columns".into()));
        }
        let columns = keys[RECORD_COLUMNS.len()..]
            .iter()
            .map(|k| Quantity::from_key(k).ok_or_else(|| TableError::UnknownColumn(k.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let mut table = OutcomeTable { records: Vec::new(), columns, values: Vec::new(), units };
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = i + 1;
            let number = |cell: &str| -> Result<Option<f64>, TableError> {
                if cell.is_empty() {
                    return Ok(None);
                }
                cell.parse().map(Some).map_err(|_| TableError::Row { row, why: format!("`{cell}` is not a number") })
            };
            let record = NetRecord {
                net_name: rec[0].to_string(),
                board_serial: rec[1].to_string(),
                routing_core: rec[2].parse().map_err(|_| TableError::Row { row, why: format!("routing core `{}`", &rec[2]) })?,
                len_p_in: number(&rec[3])?,
                len_n_in: number(&rec[4])?,
                tester_id: rec[5].to_string(),
                s4p_path: rec[6].to_string(),
                port_map: Default::default(),
            };
            let vals = (RECORD_COLUMNS.len()..keys.len()).map(|c| number(rec.get(c).unwrap_or(""))).collect::<Result<_, _>>()?;
            table.records.push(record);
            table.values.push(vals);
        }
        Ok(table)
    }

    /// Read back [`OutcomeTable::to_json`] output.
    pub fn from_json(text: &str) -> Result<Self, TableError> {
        let v: Value = serde_json::from_str(text)?;
        let bad = |what: &str| TableError::Malformed(what.to_string());
        let units: BTreeMap<String, String> = v["units"]
            .as_object()
            .ok_or_else(|| bad("missing `units`"))?
            .iter()
            .map(|(k, u)| Ok((k.clone(), u.as_str().ok_or_else(|| bad("unit is not a string"))?.to_string())))
            .collect::<Result<_, TableError>>()?;
        let columns = v["columns"]
            .as_array()
            .ok_or_else(|| bad("missing `columns`"))?
            .iter()
            .filter_map(|c| c["key"].as_str())
            .filter(|k| !RECORD_COLUMNS.iter().any(|(r, _)| r == k))
            .map(|k| Quantity::from_key(k).ok_or_else(|| TableError::UnknownColumn(k.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let mut table = OutcomeTable { records: Vec::new(), columns, values: Vec::new(), units };
        for (i, r) in v["rows"].as_array().ok_or_else(|| bad("missing `rows`"))?.iter().enumerate() {
            let row = i + 1;
            let text = |k: &str| {
                r[k].as_str().map(str::to_string).ok_or_else(|| TableError::Row { row, why: format!("`{k}` is not a string") })
            };
            let record = NetRecord {
                net_name: text("net_name")?,
                board_serial: text("board_serial")?,
                routing_core: r["routing_core"]
                    .as_u64()
                    .and_then(|c| u32::try_from(c).ok())
                    .ok_or_else(|| TableError::Row { row, why: "bad `routing_core`".into() })?,
                len_p_in: r["len_p_in"].as_f64(),
                len_n_in: r["len_n_in"].as_f64(),
                tester_id: text("tester_id")?,
                s4p_path: text("s4p_path")?,
                port_map: Default::default(),
            };
            table.values.push(table.columns.iter().map(|q| r[q.key()].as_f64()).collect());
            table.records.push(record);
        }
        Ok(table)
    }
}
