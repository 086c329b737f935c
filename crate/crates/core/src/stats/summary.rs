use serde::{Deserialize, Serialize};

use super::StatsError;

/// Descriptive statistics of one outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n−1 denominator).
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// `m3/m2^1.5` from population moments; `None` for constant data.
    pub skewness: Option<f64>,
    /// Non-excess `m4/m2²` from population moments; `None` for constant data.
    pub kurtosis: Option<f64>,
}

pub fn summarize(values: &[f64]) -> Result<StatSummary, StatsError> {
    let n = values.len();
    if n < 2 {
        return Err(StatsError::TooFewValues { needed: 2, got: n });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(alloc::string::String::from("values")));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let std = libm::sqrt(m2 / (nf - 1.0));
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let constant = min == max;
    Ok(StatSummary {
        n,
        // the mean of identical values must equal them exactly
        mean: if constant { min } else { mean },
        std: if constant { 0.0 } else { std },
        min,
        max,
        skewness: (!constant).then(|| m3 / libm::pow(m2, 1.5)),
        kurtosis: (!constant).then(|| m4 / (m2 * m2)),
    })
}

/// Pooled same-net standard deviation and the bookkeeping behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledVariance {
    pub sigma: f64,
    pub groups_used: usize,
    pub groups_dropped: usize,
    /// `Σ (nᵢ − 1)` over the groups used.
    pub dof: usize,
}

/// `σ = sqrt(Σ (nᵢ−1)·sᵢ² / Σ (nᵢ−1))` over groups with at least two
/// observations; smaller groups are dropped and counted.
pub fn pooled_snv<G: AsRef<[f64]>>(groups: &[G]) -> Result<PooledVariance, StatsError> {
    let (mut ss, mut dof, mut used, mut dropped) = (0.0, 0usize, 0usize, 0usize);
    for g in groups {
        let g = g.as_ref();
        if g.len() < 2 {
            dropped += 1;
            continue;
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(alloc::string::String::from("group values")));
        }
        // shifted sums: identical values give exactly zero
        let shift = g[0];
        let (s1, s2) = g.iter().fold((0.0, 0.0), |(s1, s2), v| (s1 + (v - shift), s2 + (v - shift) * (v - shift)));
        ss += (s2 - s1 * s1 / g.len() as f64).max(0.0);
        dof += g.len() - 1;
        used += 1;
    }
    if used == 0 {
        return Err(StatsError::NoUsableGroups);
    }
    Ok(PooledVariance { sigma: libm::sqrt(ss / dof as f64), groups_used: used, groups_dropped: dropped, dof })
}

/// Standard deviation with the tester's share removed in quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deflated {
    pub sigma: f64,
    /// Tester repeatability is at least as large as the measured spread.
    pub tester_dominated: bool,
}

pub fn deflate_tester(sigma_meas: f64, sigma_tester: f64) -> Result<Deflated, StatsError> {
    if !(sigma_meas >= 0.0 && sigma_tester >= 0.0) {
        return Err(StatsError::NegativeSigma);
    }
    let var = sigma_meas * sigma_meas - sigma_tester * sigma_tester;
    Ok(Deflated { sigma: libm::sqrt(var.max(0.0)), tester_dominated: sigma_tester >= sigma_meas && sigma_tester > 0.0 })
}

pub fn k_sigma_interval(mu: f64, sigma: f64, k: f64) -> Result<(f64, f64), StatsError> {
    if !(sigma >= 0.0) {
        return Err(StatsError::NegativeSigma);
    }
    Ok((mu - k * sigma, mu + k * sigma))
}

pub fn five_sigma_interval(mu: f64, sigma: f64) -> Result<(f64, f64), StatsError> {
    k_sigma_interval(mu, sigma, 5.0)
}

/// Two-sided fraction of a Gaussian population inside `μ ± kσ`.
pub fn gaussian_compliance(k: f64) -> f64 {
    libm::erf(k / core::f64::consts::SQRT_2)
}

/// Fraction of a Gaussian population below `μ + kσ` (one-sided limit).
pub fn gaussian_compliance_one_sided(k: f64) -> f64 {
    0.5 * libm::erfc(-k / core::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    #[test]
    fn symmetric_triple() {
        let s = summarize(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.n, s.mean, s.std, s.min, s.max), (3, 2.0, 1.0, 1.0, 3.0));
        assert!(s.skewness.unwrap().abs() < 1e-15);
        assert!((s.kurtosis.unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn constant_data_flags_shape() {
        let s = summarize(&[0.1; 5]).unwrap();
        assert_eq!(s.std, 0.0);
        assert_eq!(s.mean, 0.1);
        assert_eq!(s.skewness, None);
        assert_eq!(s.kurtosis, None);
        assert_eq!(summarize(&[1.0]), Err(StatsError::TooFewValues { needed: 2, got: 1 }));
    }

    #[test]
    fn pooled_weighting() {
        // variances 1 and 3 with three observations each
        let groups = vec![vec![-1.0, 0.0, 1.0], vec![-(3.0f64).sqrt(), 0.0, (3.0f64).sqrt()], vec![5.0]];
        let p = pooled_snv(&groups).unwrap();
        assert!((p.sigma - 2.0f64.sqrt()).abs() < 1e-12);
        assert_eq!((p.groups_used, p.groups_dropped, p.dof), (2, 1, 4));
        let empty: Vec<Vec<f64>> = vec![vec![1.0]];
        assert_eq!(pooled_snv(&empty), Err(StatsError::NoUsableGroups));
    }

    #[test]
    fn deflation_cases() {
        let d = deflate_tester(0.024, 0.010).unwrap();
        assert!((d.sigma - 0.021817).abs() < 1e-6 && !d.tester_dominated);
        assert_eq!(deflate_tester(0.3, 0.0).unwrap().sigma, 0.3);
        let e = deflate_tester(0.05, 0.05).unwrap();
        assert_eq!(e.sigma, 0.0);
        assert!(e.tester_dominated);
        assert!(deflate_tester(-1.0, 0.0).is_err());
    }

    #[test]
    fn sigma_intervals() {
        assert_eq!(five_sigma_interval(1.0, 0.0).unwrap(), (1.0, 1.0));
        let (lo, hi) = five_sigma_interval(0.783, 0.022).unwrap();
        assert!(((hi - lo) / 2.0 - 0.110).abs() < 1e-12);
        assert!((gaussian_compliance(4.0) - 0.9999367).abs() < 1e-7);
        // one failure in about 31,600 nets beyond a one-sided 4σ limit
        assert!((gaussian_compliance_one_sided(4.0) - 0.9999683).abs() < 1e-7);
    }
}
