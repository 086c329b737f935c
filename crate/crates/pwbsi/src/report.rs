//! The three report tables: global summary, same-net variation with tester
//! deflation, and one ANOVA per outcome column.

use std::collections::{BTreeMap, BTreeSet};

use pwbsi_core::record::NetRecord;
use pwbsi_core::stats::{
    anova, deflate_tester, k_sigma_interval, pooled_snv, summarize, AnovaResult, PredictorSpec, PooledVariance, SizeEnvelope,
    StatSummary,
};
use serde_json::{json, Value};

use crate::numfmt::{canonical_json, num};
use crate::table::{OutcomeTable, Quantity, TableError};

pub const NET_LENGTH: &str = "Net Length";
pub const ROUTING_CORE: &str = "Routing Core";
pub const SERIAL_NUMBER: &str = "Serial Number";

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// Tester repeatability σ of a column, looked up by key, then by label.
fn tester_sigma(tester: &BTreeMap<String, f64>, q: &Quantity) -> Option<f64> {
    tester.get(&q.key()).or_else(|| tester.get(&q.summary_label())).copied()
}

fn outcome_columns(table: &OutcomeTable) -> Vec<Quantity> {
    table.columns.iter().copied().filter(Quantity::is_outcome).collect()
}

// ---------------------------------------------------------------------------
// global summary

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub quantity: Quantity,
    pub summary: Result<StatSummary, String>,
    pub tester_sigma: Option<f64>,
}

pub const SUMMARY_COLUMNS: [&str; 8] =
    ["Mean", "Std Dev", "Min", "Max", "Tester Repeatability (Std Dev)", "Skewness", "Kurtosis", "N"];

/// Global summary statistics of every outcome column.
pub fn global_summary(table: &OutcomeTable, tester: &BTreeMap<String, f64>) -> Vec<SummaryRow> {
    outcome_columns(table)
        .into_iter()
        .map(|q| {
            let values: Vec<f64> = table.column(&q.key()).expect("own column").into_iter().flatten().collect();
            SummaryRow { quantity: q, summary: summarize(&values).map_err(|e| e.to_string()), tester_sigma: tester_sigma(tester, &q) }
        })
        .collect()
}

pub fn global_summary_csv(rows: &[SummaryRow]) -> String {
    let header: Vec<String> = std::iter::once("Outcome").chain(SUMMARY_COLUMNS).map(String::from).collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut cells = vec![r.quantity.summary_label()];
            match &r.summary {
                Ok(s) => cells.extend([
                    num(s.mean),
                    num(s.std),
                    num(s.min),
                    num(s.max),
                    opt_num(r.tester_sigma),
                    opt_num(s.skewness),
                    opt_num(s.kurtosis),
                    s.n.to_string(),
                ]),
                Err(_) => cells.extend(["", "", "", "", &opt_num(r.tester_sigma), "", "", "0"].map(String::from)),
            }
            cells
        })
        .collect();
    csv_text(&header, &body)
}

pub fn global_summary_json(rows: &[SummaryRow]) -> String {
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            let s = r.summary.as_ref().ok();
            json!({
                "label": r.quantity.summary_label(),
                "key": r.quantity.key(),
                "unit": r.quantity.unit(),
                "mean": s.map(|s| s.mean),
                "std_dev": s.map(|s| s.std),
                "min": s.map(|s| s.min),
                "max": s.map(|s| s.max),
                "tester_repeatability_std_dev": r.tester_sigma,
                "skewness": s.and_then(|s| s.skewness),
                "kurtosis": s.and_then(|s| s.kurtosis),
                "n": s.map_or(0, |s| s.n),
                "error": r.summary.as_ref().err(),
            })
        })
        .collect();
    canonical_json(&json!({"columns": SUMMARY_COLUMNS, "rows": rows}))
}

// ---------------------------------------------------------------------------
// same-net variation

/// How the same-net σ relates to the tester's own repeatability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deflation {
    /// Tester variance removed.
    Deflated,
    /// Tester σ at or above the measured σ; the deflated value is zero.
    TesterDominated,
    /// No tester σ entry for this outcome; reported as measured.
    Undeflated,
}

impl Deflation {
    pub fn label(&self) -> &'static str {
        match self {
            Deflation::Deflated => "deflated",
            Deflation::TesterDominated => "tester-dominated",
            Deflation::Undeflated => "undeflated: no tester sigma",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnvRow {
    pub quantity: Quantity,
    pub mean: Option<f64>,
    pub pooled: Result<PooledVariance, String>,
    pub tester_sigma: Option<f64>,
    /// Same-net σ after removing tester variance (the measured σ when
    /// undeflated).
    pub sigma: Option<f64>,
    pub deflation: Deflation,
    /// Half-width of the k·σ interval, and that as a percentage of |mean|.
    pub half_width: Option<f64>,
    pub percent_of_mean: Option<f64>,
}

/// Pooled same-net σ of every outcome, deflated by the tester σ where one
/// is given, with the k·σ extrapolation about the global mean.
pub fn same_net_variation(table: &OutcomeTable, tester: &BTreeMap<String, f64>, k: f64) -> Result<Vec<SnvRow>, TableError> {
    let mut out = Vec::new();
    for q in outcome_columns(table) {
        let key = q.key();
        let groups: Vec<Vec<f64>> = table.same_net_grouping(&key)?.into_iter().map(|g| g.values).collect();
        let all: Vec<f64> = groups.iter().flatten().copied().collect();
        let mean = (!all.is_empty()).then(|| all.iter().sum::<f64>() / all.len() as f64);
        let pooled = pooled_snv(&groups).map_err(|e| e.to_string());
        let t = tester_sigma(tester, &q);
        let (sigma, deflation) = match (&pooled, t) {
            (Ok(p), Some(ts)) => {
                let d = deflate_tester(p.sigma, ts).expect("non-negative sigmas");
                (Some(d.sigma), if d.tester_dominated { Deflation::TesterDominated } else { Deflation::Deflated })
            }
            (Ok(p), None) => (Some(p.sigma), Deflation::Undeflated),
            (Err(_), _) => (None, if t.is_some() { Deflation::Deflated } else { Deflation::Undeflated }),
        };
        let half_width = match (mean, sigma) {
            (Some(m), Some(s)) => k_sigma_interval(m, s, k).ok().map(|(lo, hi)| 0.5 * (hi - lo)),
            _ => None,
        };
        let percent_of_mean = match (half_width, mean) {
            (Some(h), Some(m)) if m != 0.0 => Some(100.0 * h / m.abs()),
            _ => None,
        };
        out.push(SnvRow { quantity: q, mean, pooled, tester_sigma: t, sigma, deflation, half_width, percent_of_mean });
    }
    Ok(out)
}

fn snv_header(k: f64) -> Vec<String> {
    let k = num(k);
    vec![
        "Outcome".into(),
        "SNV σ".into(),
        "Tester Repeatability (Std Dev)".into(),
        "SNV σ, Tester Removed".into(),
        "Deflation".into(),
        "Mean".into(),
        format!("{k}σ Half-Width"),
        format!("{k}σ % of Mean"),
        "Nets Pooled".into(),
        "Nets Dropped".into(),
        "Degrees of Freedom".into(),
    ]
}

pub fn same_net_variation_csv(rows: &[SnvRow], k: f64) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let p = r.pooled.as_ref().ok();
            vec![
                r.quantity.summary_label(),
                opt_num(p.map(|p| p.sigma)),
                opt_num(r.tester_sigma),
                opt_num(r.sigma),
                match &r.pooled {
                    Ok(_) => r.deflation.label().to_string(),
                    Err(e) => format!("error: {e}"),
                },
                opt_num(r.mean),
                opt_num(r.half_width),
                opt_num(r.percent_of_mean),
                p.map(|p| p.groups_used.to_string()).unwrap_or_default(),
                p.map(|p| p.groups_dropped.to_string()).unwrap_or_default(),
                p.map(|p| p.dof.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    csv_text(&snv_header(k), &body)
}

pub fn same_net_variation_json(rows: &[SnvRow], k: f64) -> String {
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            let p = r.pooled.as_ref().ok();
            json!({
                "label": r.quantity.summary_label(),
                "key": r.quantity.key(),
                "unit": r.quantity.unit(),
                "snv_sigma": p.map(|p| p.sigma),
                "tester_sigma": r.tester_sigma,
                "sigma_tester_removed": r.sigma,
                "deflation": r.deflation.label(),
                "mean": r.mean,
                "half_width": r.half_width,
                "percent_of_mean": r.percent_of_mean,
                "groups_used": p.map(|p| p.groups_used),
                "groups_dropped": p.map(|p| p.groups_dropped),
                "dof": p.map(|p| p.dof),
                "error": r.pooled.as_ref().err(),
            })
        })
        .collect();
    canonical_json(&json!({"columns": snv_header(k), "sigma_k": k, "rows": rows}))
}

// ---------------------------------------------------------------------------
// ANOVA

/// One ANOVA: an outcome column against the predictors that vary in it.
#[derive(Debug, Clone, PartialEq)]
pub struct AnovaColumn {
    pub quantity: Quantity,
    pub result: Result<AnovaResult, String>,
    /// Predictors left out of this model and why.
    pub skipped: Vec<(String, String)>,
}

/// Label of the skew-magnitude predictor used for mode-conversion columns.
pub fn skew_predictor_label(skew: &Quantity) -> String {
    match skew {
        Quantity::RandomSkew { freq_hz } => format!("Random Skew, ({} GHz)", freq_hz / 1e9),
        other => other.anova_label(),
    }
}

fn skew_predictor(table: &OutcomeTable) -> Option<Quantity> {
    table
        .columns
        .iter()
        .filter_map(|q| match q {
            Quantity::RandomSkew { freq_hz } => Some((*freq_hz, *q)),
            _ => None,
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, q)| q)
}

fn categorical(name: &str, rows: &[&NetRecord], f: impl Fn(&NetRecord) -> String, skipped: &mut Vec<(String, String)>) -> Option<PredictorSpec> {
    let values: Vec<String> = rows.iter().map(|r| f(r)).collect();
    if values.iter().collect::<BTreeSet<_>>().len() < 2 {
        skipped.push((name.into(), "single level".into()));
        return None;
    }
    Some(PredictorSpec::categorical(name, values))
}

fn continuous(name: &str, values: Vec<f64>, skipped: &mut Vec<(String, String)>) -> Option<PredictorSpec> {
    if values.windows(2).all(|w| w[0] == w[1]) {
        skipped.push((name.into(), "constant".into()));
        return None;
    }
    Some(PredictorSpec::continuous(name, values))
}

/// One ANOVA per outcome column with net length, routing core and serial
/// number as predictors; mode-conversion columns also take the magnitude
/// of the lowest-frequency random skew.
pub fn anova_table(table: &OutcomeTable) -> Vec<AnovaColumn> {
    let skew = skew_predictor(table);
    let skew_col = skew.map(|q| table.column_index(&q.key()).expect("own column"));
    outcome_columns(table)
        .into_iter()
        .map(|q| {
            let c = table.column_index(&q.key()).expect("own column");
            let with_skew = matches!(q, Quantity::Scd21 { .. }) && skew_col.is_some();
            let mut y = Vec::new();
            let mut rows: Vec<&NetRecord> = Vec::new();
            let mut lengths = Vec::new();
            let mut skews = Vec::new();
            for (rec, vals) in table.records.iter().zip(&table.values) {
                let (Some(v), Some(len)) = (vals[c], rec.mean_length_in()) else { continue };
                let s = if with_skew {
                    match vals[skew_col.unwrap()] {
                        Some(s) => s.abs(),
                        None => continue,
                    }
                } else {
                    0.0
                };
                y.push(v);
                rows.push(rec);
                lengths.push(len);
                skews.push(s);
            }
            let mut skipped = Vec::new();
            let mut preds: Vec<PredictorSpec> = [
                continuous(NET_LENGTH, lengths, &mut skipped),
                categorical(ROUTING_CORE, &rows, |r| r.routing_core.to_string(), &mut skipped),
                categorical(SERIAL_NUMBER, &rows, |r| r.board_serial.clone(), &mut skipped),
            ]
            .into_iter()
            .flatten()
            .collect();
            if with_skew {
                if let Some(p) = continuous(&skew_predictor_label(&skew.unwrap()), skews, &mut skipped) {
                    preds.push(p);
                }
            }
            let result = if preds.is_empty() {
                Err("no predictor varies".to_string())
            } else {
                anova(&y, &preds).map_err(|e| e.to_string())
            };
            AnovaColumn { quantity: q, result, skipped }
        })
        .collect()
}

fn predictor_rows(columns: &[AnovaColumn]) -> Vec<String> {
    let mut names: Vec<String> = vec![NET_LENGTH.into(), ROUTING_CORE.into(), SERIAL_NUMBER.into()];
    for c in columns {
        if let Ok(r) = &c.result {
            for t in &r.terms {
                if !names.contains(&t.name) {
                    names.push(t.name.clone());
                }
            }
        }
    }
    names
}

pub fn anova_table_csv(columns: &[AnovaColumn]) -> String {
    let mut header: Vec<String> = vec!["Predictor".into(), "Statistic".into()];
    header.extend(columns.iter().map(|c| c.quantity.anova_label()));
    let mut body = Vec::new();
    for name in predictor_rows(columns) {
        for stat in ["F-Ratio", "Partial F", "p-value"] {
            let mut row = vec![name.clone(), stat.to_string()];
            for c in columns {
                let term = c.result.as_ref().ok().and_then(|r| r.terms.iter().find(|t| t.name == name));
                row.push(term.map_or(String::new(), |t| match stat {
                    "F-Ratio" => num(t.mse_ratio),
                    "Partial F" => num(t.f_stat),
                    _ => num(t.p_value),
                }));
            }
            body.push(row);
        }
    }
    for stat in ["Residual MSE", "Residual DoF", "N"] {
        let mut row = vec!["Model".to_string(), stat.to_string()];
        for c in columns {
            row.push(match &c.result {
                Ok(r) => match stat {
                    "Residual MSE" => num(r.residual_mse),
                    "Residual DoF" => r.residual_df.to_string(),
                    _ => r.n.to_string(),
                },
                Err(_) => String::new(),
            });
        }
        body.push(row);
    }
    csv_text(&header, &body)
}

pub fn anova_table_json(columns: &[AnovaColumn]) -> String {
    let cols: Vec<Value> = columns
        .iter()
        .map(|c| {
            let terms: Vec<Value> = c.result.as_ref().map_or(Vec::new(), |r| {
                r.terms
                    .iter()
                    .map(|t| {
                        json!({
                            "predictor": t.name,
                            "f_ratio": t.mse_ratio,
                            "partial_f": t.f_stat,
                            "f_infinite": t.f_stat.is_infinite(),
                            "df": t.df_num,
                            "p_value": t.p_value,
                        })
                    })
                    .collect()
            });
            let r = c.result.as_ref().ok();
            json!({
                "label": c.quantity.anova_label(),
                "key": c.quantity.key(),
                "terms": terms,
                "residual_mse": r.map(|r| r.residual_mse),
                "residual_df": r.map(|r| r.residual_df),
                "n": r.map(|r| r.n),
                "skipped": c.skipped.iter().map(|(p, why)| json!({"predictor": p, "reason": why})).collect::<Vec<_>>(),
                "error": c.result.as_ref().err(),
            })
        })
        .collect();
    canonical_json(&json!({"predictors": predictor_rows(columns), "columns": cols}))
}

// ---------------------------------------------------------------------------
// sample size

pub const SAMPLE_SIZE_COLUMNS: [&str; 8] = ["n", "trials", "min σ/σ_pool", "q05", "median", "q95", "max σ/σ_pool", "max |rel. error|"];

pub fn sample_size_csv(env: &[SizeEnvelope]) -> String {
    let header: Vec<String> = SAMPLE_SIZE_COLUMNS.iter().map(|s| s.to_string()).collect();
    let body: Vec<Vec<String>> = env
        .iter()
        .map(|e| {
            vec![
                e.n.to_string(),
                e.trials.to_string(),
                num(e.min_ratio),
                num(e.q05_ratio),
                num(e.median_ratio),
                num(e.q95_ratio),
                num(e.max_ratio),
                num(e.max_abs_rel_error),
            ]
        })
        .collect();
    csv_text(&header, &body)
}

pub fn sample_size_json(env: &[SizeEnvelope], pool_size: usize, seed: u64) -> String {
    canonical_json(&json!({"pool_size": pool_size, "seed": seed, "envelopes": serde_json::to_value(env).expect("plain data")}))
}
