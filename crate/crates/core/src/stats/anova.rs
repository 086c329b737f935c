use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::special::f_upper_tail;
use super::StatsError;

/// Values of one predictor across the observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PredictorValues {
    Continuous(Vec<f64>),
    Categorical(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorSpec {
    pub name: String,
    pub values: PredictorValues,
}

impl PredictorSpec {
    pub fn continuous(name: &str, values: Vec<f64>) -> Self {
        PredictorSpec { name: String::from(name), values: PredictorValues::Continuous(values) }
    }

    pub fn categorical(name: &str, values: Vec<String>) -> Self {
        PredictorSpec { name: String::from(name), values: PredictorValues::Categorical(values) }
    }

    fn len(&self) -> usize {
        match &self.values {
            PredictorValues::Continuous(v) => v.len(),
            PredictorValues::Categorical(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub value: f64,
}

/// Effect of removing one predictor from the full model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermResult {
    pub name: String,
    /// Reduced-model MSE over full-model MSE.
    pub mse_ratio: f64,
    /// Classical partial F statistic.
    pub f_stat: f64,
    pub df_num: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub n: usize,
    pub coefficients: Vec<Coefficient>,
    pub sse: f64,
    pub residual_mse: f64,
    pub residual_df: usize,
    pub terms: Vec<TermResult>,
}

struct Column {
    term: usize,
    name: String,
    data: Vec<f64>,
}

fn encode(n: usize, predictors: &[PredictorSpec]) -> Result<Vec<Column>, StatsError> {
    let mut cols = alloc::vec![Column { term: usize::MAX, name: String::from("intercept"), data: alloc::vec![1.0; n] }];
    for (t, p) in predictors.iter().enumerate() {
        if p.len() != n {
            return Err(StatsError::LengthMismatch(p.name.clone()));
        }
        match &p.values {
            PredictorValues::Continuous(v) => {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(StatsError::NonFinite(p.name.clone()));
                }
                cols.push(Column { term: t, name: p.name.clone(), data: v.clone() });
            }
            PredictorValues::Categorical(v) => {
                let levels: BTreeSet<&str> = v.iter().map(String::as_str).collect();
                if levels.len() < 2 {
                    return Err(StatsError::SingleLevel(p.name.clone()));
                }
                // the lexicographically smallest level is the reference
                for level in levels.iter().skip(1) {
                    let data = v.iter().map(|x| if x == level { 1.0 } else { 0.0 }).collect();
                    cols.push(Column { term: t, name: format!("{}[{}]", p.name, level), data });
                }
            }
        }
    }
    Ok(cols)
}

struct Fit {
    beta: Vec<f64>,
    sse: f64,
}

/// Least squares by Householder QR. A column whose diagonal of R is tiny
/// relative to the column's own norm lies in the span of earlier columns.
fn fit(cols: &[&Column], y: &DVector<f64>) -> Result<Fit, usize> {
    let n = y.len();
    let p = cols.len();
    let x = DMatrix::from_fn(n, p, |i, j| cols[j].data[i]);
    let qr = x.clone().qr();
    let r = qr.r();
    for j in 0..p {
        let norm = x.column(j).norm();
        if r[(j, j)].abs() <= 1e-10 * norm.max(f64::MIN_POSITIVE) {
            return Err(j);
        }
    }
    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let rhs = qty.rows(0, p).into_owned();
    let beta = r.solve_upper_triangular(&rhs).ok_or(0usize)?;
    let resid = y - &x * &beta;
    Ok(Fit { beta: beta.iter().cloned().collect(), sse: resid.norm_squared() })
}

/// n-way ANOVA of `outcome` on the predictors, main effects only.
///
/// Each predictor is tested by refitting without its columns. Both the
/// ratio of residual MSEs and the classical partial F are reported; the
/// p-value comes from the partial F.
pub fn anova(outcome: &[f64], predictors: &[PredictorSpec]) -> Result<AnovaResult, StatsError> {
    let n = outcome.len();
    if outcome.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(String::from("outcome")));
    }
    let cols = encode(n, predictors)?;
    let p = cols.len();
    if n <= p {
        return Err(StatsError::TooFewObservations { n, params: p });
    }
    let y = DVector::from_column_slice(outcome);
    let all: Vec<&Column> = cols.iter().collect();
    let full = fit(&all, &y).map_err(|j| {
        let name = match cols[j].term {
            usize::MAX => String::from("intercept"),
            t => predictors[t].name.clone(),
        };
        StatsError::RankDeficient(name)
    })?;
    let df_full = n - p;
    // sums of squares below this are round-off of an exact fit
    let scale: f64 = outcome.iter().map(|v| v * v).sum();
    let zero_tol = 1e-18 * scale.max(f64::MIN_POSITIVE);
    let sse_full = if full.sse <= zero_tol { 0.0 } else { full.sse };
    let mse_full = sse_full / df_full as f64;

    let mut terms = Vec::with_capacity(predictors.len());
    for (t, pred) in predictors.iter().enumerate() {
        let kept: Vec<&Column> = cols.iter().filter(|c| c.term != t).collect();
        let df_num = p - kept.len();
        let reduced = fit(&kept, &y).map_err(|_| StatsError::RankDeficient(pred.name.clone()))?;
        let sse_red = if reduced.sse <= zero_tol { 0.0 } else { reduced.sse.max(sse_full) };
        let df_red = n - kept.len();
        let mse_red = sse_red / df_red as f64;
        let extra = sse_red - sse_full;
        let (mse_ratio, f_stat) = if sse_full == 0.0 {
            if extra > 0.0 {
                (f64::INFINITY, f64::INFINITY)
            } else {
                (1.0, 0.0)
            }
        } else {
            (mse_red / mse_full, (extra / df_num as f64) / mse_full)
        };
        let p_value = f_upper_tail(f_stat, df_num as f64, df_full as f64);
        terms.push(TermResult { name: pred.name.clone(), mse_ratio, f_stat, df_num, p_value });
    }
    let coefficients =
        cols.iter().zip(&full.beta).map(|(c, b)| Coefficient { name: c.name.clone(), value: *b }).collect();
    Ok(AnovaResult { n, coefficients, sse: sse_full, residual_mse: mse_full, residual_df: df_full, terms })
}
