//! Statistics for variability studies: descriptive summaries, same-net
//! pooled variance, tester deflation, n-way ANOVA, k-sigma extrapolation and
//! the sample-size resampling experiment.

mod anova;
mod sampling;
pub mod special;
mod summary;

use alloc::string::String;
use core::fmt;

pub use anova::{anova, AnovaResult, Coefficient, PredictorSpec, PredictorValues, TermResult};
pub use sampling::{sample_size_experiment, trial_sigma, SizeEnvelope};
pub use summary::{
    deflate_tester, five_sigma_interval, gaussian_compliance, gaussian_compliance_one_sided, k_sigma_interval, pooled_snv, summarize, Deflated,
    PooledVariance, StatSummary,
};

#[derive(Debug, Clone, PartialEq)]
pub enum StatsError {
    TooFewValues { needed: usize, got: usize },
    NoUsableGroups,
    NegativeSigma,
    NonFinite(String),
    LengthMismatch(String),
    SingleLevel(String),
    RankDeficient(String),
    TooFewObservations { n: usize, params: usize },
    SizeExceedsPool { size: usize, pool: usize },
    NoTrials,
}

impl fmt::Display for StatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsError::TooFewValues { needed, got } => write!(f, "need at least {needed} values, got {got}"),
            StatsError::NoUsableGroups => write!(f, "no group has two or more observations"),
            StatsError::NegativeSigma => write!(f, "standard deviations must be non-negative"),
            StatsError::NonFinite(name) => write!(f, "non-finite value in `{name}`"),
            StatsError::LengthMismatch(name) => write!(f, "predictor `{name}` has a different length than the outcome"),
            StatsError::SingleLevel(name) => write!(f, "categorical predictor `{name}` has fewer than two levels"),
            StatsError::RankDeficient(name) => write!(f, "design matrix is rank deficient: term `{name}` is aliased"),
            StatsError::TooFewObservations { n, params } => {
                write!(f, "{n} observations cannot fit a model with {params} parameters")
            }
            StatsError::SizeExceedsPool { size, pool } => write!(f, "sample size {size} exceeds pool of {pool}"),
            StatsError::NoTrials => write!(f, "at least one trial is required"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for StatsError {}
