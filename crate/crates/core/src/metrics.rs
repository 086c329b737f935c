//! Scalar outcomes from S-parameters: flight time and random skew, loss per
//! inch, mode conversion, and the differential return-loss crossing.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::network::{MixedModeNetwork, NetworkData};
use crate::record::NetRecord;

/// Meters per inch.
pub const METERS_PER_INCH: f64 = 0.0254;

/// Floor reported for a mode-conversion term of exactly zero.
pub const DB_FLOOR: f64 = -200.0;

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    ZeroMagnitude { index: usize },
    OffGrid { freq_hz: f64 },
    MetadataIncomplete,
    NonPositiveLength,
    InvalidVelocity(f64),
    NoThroughPath { freq_hz: f64 },
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::ZeroMagnitude { index } => write!(f, "zero magnitude at frequency index {index}"),
            MetricsError::OffGrid { freq_hz } => {
                write!(f, "sample frequency {freq_hz} Hz is more than half a grid step from the measured grid")
            }
            MetricsError::MetadataIncomplete => write!(f, "metadata incomplete"),
            MetricsError::NonPositiveLength => write!(f, "net length must be > 0"),
            MetricsError::InvalidVelocity(v) => write!(f, "propagation velocity must be > 0, got {v}"),
            MetricsError::NoThroughPath { freq_hz } => write!(f, "no through path at {freq_hz} Hz"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MetricsError {}

/// Index of the grid point nearest `f_hz`, provided it lies within half a
/// local grid step.
pub fn snap_index(freqs_hz: &[f64], f_hz: f64) -> Result<usize, MetricsError> {
    let n = freqs_hz.len();
    if n < 2 || !f_hz.is_finite() {
        return Err(MetricsError::OffGrid { freq_hz: f_hz });
    }
    let pos = freqs_hz.partition_point(|&x| x < f_hz);
    let i = if pos == 0 {
        0
    } else if pos == n {
        n - 1
    } else if f_hz - freqs_hz[pos - 1] <= freqs_hz[pos] - f_hz {
        pos - 1
    } else {
        pos
    };
    let step = if f_hz >= freqs_hz[i] {
        if i + 1 < n { freqs_hz[i + 1] - freqs_hz[i] } else { freqs_hz[i] - freqs_hz[i - 1] }
    } else if i > 0 {
        freqs_hz[i] - freqs_hz[i - 1]
    } else {
        freqs_hz[1] - freqs_hz[0]
    };
    if (f_hz - freqs_hz[i]).abs() <= 0.5 * step * (1.0 + 1e-9) {
        Ok(i)
    } else {
        Err(MetricsError::OffGrid { freq_hz: f_hz })
    }
}

/// Continuous phase in degrees. The first sample lies in (−180°, 180°];
/// every later step is folded into (−180°, 180°].
pub fn unwrap_phase(series: &[Complex64]) -> Result<Vec<f64>, MetricsError> {
    let mut out = Vec::with_capacity(series.len());
    let mut prev_wrapped = 0.0;
    let mut acc = 0.0;
    for (index, z) in series.iter().enumerate() {
        if z.norm() == 0.0 || !z.norm().is_finite() {
            return Err(MetricsError::ZeroMagnitude { index });
        }
        let wrapped = libm::atan2(z.im, z.re).to_degrees();
        if index == 0 {
            acc = if wrapped <= -180.0 { 180.0 } else { wrapped };
        } else {
            let mut d = wrapped - prev_wrapped;
            while d > 180.0 {
                d -= 360.0;
            }
            while d <= -180.0 {
                d += 360.0;
            }
            acc += d;
        }
        prev_wrapped = wrapped;
        out.push(acc);
    }
    Ok(out)
}

/// Flight time from the unwrapped through phase: `−φ/360 · (1/f)`.
pub fn flight_time(s_through: &[Complex64], freqs_hz: &[f64], f_sample_hz: f64) -> Result<f64, MetricsError> {
    let i = snap_index(freqs_hz, f_sample_hz)?;
    let phase = unwrap_phase(&s_through[..=i])?;
    Ok(-phase[i] / (360.0 * freqs_hz[i]))
}

/// P minus N flight time (S21 vs S43), seconds.
pub fn total_skew(net: &NetworkData, f_sample_hz: f64) -> Result<f64, MetricsError> {
    let tp = flight_time(&net.through_p(), net.freqs_hz(), f_sample_hz)?;
    let tn = flight_time(&net.through_n(), net.freqs_hz(), f_sample_hz)?;
    Ok(tp - tn)
}

/// Skew implied by the P−N length mismatch at velocity `v_ref`, seconds.
pub fn designed_in_skew(rec: &NetRecord, v_ref_m_per_s: f64) -> Result<f64, MetricsError> {
    if !(v_ref_m_per_s > 0.0) || !v_ref_m_per_s.is_finite() {
        return Err(MetricsError::InvalidVelocity(v_ref_m_per_s));
    }
    let (lp, ln) = match (rec.len_p_in, rec.len_n_in) {
        (Some(p), Some(n)) => (p, n),
        _ => return Err(MetricsError::MetadataIncomplete),
    };
    Ok((lp - ln) * METERS_PER_INCH / v_ref_m_per_s)
}

/// Total minus designed-in skew, in picoseconds. Sign is preserved.
pub fn random_skew(net: &NetworkData, rec: &NetRecord, v_ref_m_per_s: f64, f_sample_hz: f64) -> Result<f64, MetricsError> {
    let designed = designed_in_skew(rec, v_ref_m_per_s)?;
    let total = total_skew(net, f_sample_hz)?;
    Ok((total - designed) * 1e12)
}

/// Average propagation velocity of one net: mean P/N length over mean
/// P/N flight time. Applied to a board's longest net this gives the board's
/// reference velocity for designed-in skew.
pub fn propagation_velocity(net: &NetworkData, rec: &NetRecord, f_sample_hz: f64) -> Result<f64, MetricsError> {
    let len = rec.mean_length_in().ok_or(MetricsError::MetadataIncomplete)?;
    if !(len > 0.0) {
        return Err(MetricsError::NonPositiveLength);
    }
    let tp = flight_time(&net.through_p(), net.freqs_hz(), f_sample_hz)?;
    let tn = flight_time(&net.through_n(), net.freqs_hz(), f_sample_hz)?;
    let t = 0.5 * (tp + tn);
    let v = len * METERS_PER_INCH / t;
    if !(v > 0.0) || !v.is_finite() {
        return Err(MetricsError::InvalidVelocity(v));
    }
    Ok(v)
}

/// Index of the record with the greatest mean length (first on ties).
pub fn longest_net<'a, I>(records: I) -> Option<usize>
where
    I: IntoIterator<Item = &'a NetRecord>,
{
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in records.into_iter().enumerate() {
        if let Some(l) = r.mean_length_in() {
            if best.is_none_or(|(_, b)| l > b) {
                best = Some((i, l));
            }
        }
    }
    best.map(|(i, _)| i)
}

fn db(z: Complex64) -> f64 {
    let m = z.norm();
    if m == 0.0 {
        f64::NEG_INFINITY
    } else {
        20.0 * libm::log10(m)
    }
}

/// Differential insertion loss per inch of mean P/N length; positive = loss.
pub fn loss_per_inch(mm: &MixedModeNetwork, rec: &NetRecord, f_sample_hz: f64) -> Result<f64, MetricsError> {
    let len = rec.mean_length_in().ok_or(MetricsError::MetadataIncomplete)?;
    if !(len > 0.0) {
        return Err(MetricsError::NonPositiveLength);
    }
    let i = snap_index(&mm.freqs_hz, f_sample_hz)?;
    let sdd21 = mm.sdd[i][1][0];
    if sdd21.norm() == 0.0 {
        return Err(MetricsError::NoThroughPath { freq_hz: mm.freqs_hz[i] });
    }
    Ok(-db(sdd21) / len)
}

/// Differential-to-common conversion |SCD21| in dB, floored at −200 dB.
pub fn scd21_db(mm: &MixedModeNetwork, f_sample_hz: f64) -> Result<f64, MetricsError> {
    let i = snap_index(&mm.freqs_hz, f_sample_hz)?;
    Ok(db(mm.scd[i][1][0]).max(DB_FLOOR))
}

/// Lowest frequency where |SDD11| rises above `threshold_db`, linearly
/// interpolated in dB between grid points. `None` when never crossed.
pub fn sdd11_crossing(mm: &MixedModeNetwork, threshold_db: f64) -> Option<f64> {
    let levels: Vec<f64> = mm.sdd.iter().map(|m| db(m[0][0]).max(DB_FLOOR)).collect();
    if levels.first().is_some_and(|&l| l > threshold_db) {
        return Some(mm.freqs_hz[0]);
    }
    for i in 1..levels.len() {
        let (a, b) = (levels[i - 1], levels[i]);
        if a <= threshold_db && b > threshold_db {
            let t = (threshold_db - a) / (b - a);
            return Some(mm.freqs_hz[i - 1] + t * (mm.freqs_hz[i] - mm.freqs_hz[i - 1]));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;
    use alloc::vec;
    use core::f64::consts::PI;

    fn grid() -> Vec<f64> {
        (1..=600).map(|k| k as f64 * 1e7).collect()
    }

    fn delay(freqs: &[f64], tau: f64) -> Vec<Complex64> {
        freqs.iter().map(|&f| Complex64::from_polar(1.0, -2.0 * PI * f * tau)).collect()
    }

    fn rec(lp: f64, ln: f64) -> NetRecord {
        NetRecord {
            net_name: String::from("N1"),
            board_serial: String::from("B1"),
            routing_core: 1,
            len_p_in: Some(lp),
            len_n_in: Some(ln),
            tester_id: String::from("T"),
            s4p_path: String::new(),
            port_map: Default::default(),
        }
    }

    #[test]
    fn constant_series_has_zero_phase() {
        let p = unwrap_phase(&vec![Complex64::new(2.0, 0.0); 10]).unwrap();
        assert!(p.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn delay_line_phase_at_one_ghz() {
        let f = grid();
        let p = unwrap_phase(&delay(&f, 1.562e-9)).unwrap();
        let i = snap_index(&f, 1e9).unwrap();
        // −360·f·τ
        assert!((p[i] - (-562.32)).abs() < 1e-9);
    }

    #[test]
    fn wraps_through_minus_180_twice_without_jumps() {
        let f: Vec<f64> = (0..200).map(|k| k as f64).collect();
        // −2° per step, from +10°: passes −180° and −540°
        let series: Vec<Complex64> = f.iter().map(|&k| Complex64::from_polar(1.0, (10.0 - 4.0 * k).to_radians())).collect();
        let p = unwrap_phase(&series).unwrap();
        for (k, w) in p.windows(2).enumerate() {
            assert!((w[1] - w[0] + 4.0).abs() < 1e-9, "step {k}");
        }
        assert!((p[199] - (10.0 - 4.0 * 199.0)).abs() < 1e-9);
    }

    #[test]
    fn zero_magnitude_is_reported() {
        let s = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        assert_eq!(unwrap_phase(&s), Err(MetricsError::ZeroMagnitude { index: 1 }));
    }

    #[test]
    fn first_sample_anchor_excludes_minus_180() {
        let p = unwrap_phase(&[Complex64::new(-1.0, -0.0)]).unwrap();
        assert_eq!(p[0], 180.0);
    }

    #[test]
    fn flight_time_of_pure_delay_is_frequency_independent() {
        let f = grid();
        let s = delay(&f, 1.562e-9);
        for fs in [1e9, 2e9, 4e9] {
            assert!((flight_time(&s, &f, fs).unwrap() - 1.562e-9).abs() < 1e-15);
        }
        let thru = vec![Complex64::new(1.0, 0.0); f.len()];
        assert_eq!(flight_time(&thru, &f, 1e9).unwrap(), 0.0);
    }

    #[test]
    fn snapping_rules() {
        let f = grid();
        assert_eq!(snap_index(&f, 1.004e9).unwrap(), 99);
        assert_eq!(snap_index(&f, 1.006e9).unwrap(), 100);
        assert!(snap_index(&f, 6.006e9).is_err());
        assert!(snap_index(&f, 1e6).is_err());
        assert_eq!(snap_index(&f, 6.004e9).unwrap(), 599);
    }

    #[test]
    fn designed_in_needs_lengths() {
        let mut r = rec(10.0, 10.0);
        r.len_n_in = None;
        assert_eq!(designed_in_skew(&r, 1.6e8), Err(MetricsError::MetadataIncomplete));
        assert!(matches!(designed_in_skew(&rec(1.0, 1.0), 0.0), Err(MetricsError::InvalidVelocity(_))));
    }

    #[test]
    fn crossing_interpolates_in_db() {
        let f = vec![1e9, 2e9, 3e9];
        let mk = |m: f64| [[Complex64::new(m, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0); 2]];
        let lv = |d: f64| libm::pow(10.0, d / 20.0);
        let mm = MixedModeNetwork {
            freqs_hz: f.clone(),
            sdd: vec![mk(lv(-20.0)), mk(lv(-12.0)), mk(lv(-8.0))],
            sdc: vec![mk(0.0); 3],
            scd: vec![mk(0.0); 3],
            scc: vec![mk(0.0); 3],
            z_ref_diff_ohm: 100.0,
            z_ref_comm_ohm: 25.0,
        };
        let x = sdd11_crossing(&mm, -10.0).unwrap();
        assert!((x - 2.5e9).abs() < 1.0);
        assert_eq!(scd21_db(&mm, 1e9).unwrap(), DB_FLOOR);
    }
}
