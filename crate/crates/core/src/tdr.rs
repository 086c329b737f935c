//! Time-domain reflectometry from differential return loss.
//!
//! SDD11 is placed on a uniform grid that reaches DC, tapered at the band
//! edge, inverse transformed to an impulse response and integrated to a
//! reflection step. Impedance follows from `Z = Z_ref·(1+ρ)/(1−ρ)`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::fft;
use crate::spectrum;

#[derive(Debug, Clone, PartialEq)]
pub enum TdrError {
    TooFewPoints,
    LengthMismatch,
    WindowOutsideTrace { start_s: f64, stop_s: f64, span_s: f64 },
    NeverSettles,
}

impl fmt::Display for TdrError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TdrError::TooFewPoints => write!(f, "at least two frequency points are required"),
            TdrError::LengthMismatch => write!(f, "frequency and value arrays differ in length"),
            TdrError::WindowOutsideTrace { start_s, stop_s, span_s } => write!(
                f,
                "window [{start_s:.3e}, {stop_s:.3e}] s exceeds trace span {span_s:.3e} s"
            ),
            TdrError::NeverSettles => write!(f, "impedance never settles; give an explicit window start"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TdrError {}

/// Knobs of the step-response transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdrOptions {
    /// Fraction of the band, measured down from the top, covered by the
    /// raised-cosine taper.
    pub taper_fraction: f64,
    /// Largest allowed time step.
    pub max_time_step_s: f64,
    /// Smallest allowed span of the returned trace.
    pub min_span_s: f64,
}

impl Default for TdrOptions {
    fn default() -> Self {
        TdrOptions { taper_fraction: 0.1, max_time_step_s: 10e-12, min_span_s: 10e-9 }
    }
}

/// Settling rule for the automatic window start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettleRule {
    /// Largest tolerated `|dZ/dt|` in ohm per second.
    pub max_slope_ohm_per_s: f64,
    /// How long the slope must stay below the limit.
    pub hold_s: f64,
}

impl Default for SettleRule {
    fn default() -> Self {
        SettleRule { max_slope_ohm_per_s: 5.0e9, hold_s: 100e-12 }
    }
}

pub const DEFAULT_WINDOW_S: f64 = 2e-9;

/// Reflection step response on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TdrTrace {
    pub time_s: Vec<f64>,
    pub rho: Vec<f64>,
    /// Differential impedance.
    pub z_ohm: Vec<f64>,
    pub z_ref_diff_ohm: f64,
}

impl TdrTrace {
    pub fn dt(&self) -> f64 {
        if self.time_s.len() > 1 {
            self.time_s[1] - self.time_s[0]
        } else {
            0.0
        }
    }

    pub fn span_s(&self) -> f64 {
        self.time_s.last().copied().unwrap_or(0.0)
    }
}

pub fn impedance_from_rho(rho: f64, z_ref: f64) -> f64 {
    z_ref * (1.0 + rho) / (1.0 - rho)
}

/// Step response of the differential return loss `sdd11` sampled at
/// `freqs_hz`, referenced to `z_ref_diff_ohm`.
pub fn step_response(
    sdd11: &[Complex64],
    freqs_hz: &[f64],
    z_ref_diff_ohm: f64,
    opts: &TdrOptions,
) -> Result<TdrTrace, TdrError> {
    if sdd11.len() != freqs_hz.len() {
        return Err(TdrError::LengthMismatch);
    }
    if freqs_hz.len() < 2 {
        return Err(TdrError::TooFewPoints);
    }
    let f_first = freqs_hz[0];
    let f_last = *freqs_hz.last().unwrap();
    if f_first > 50e6 {
        log::warn!("grid starts at {f_first:.4e} Hz; DC extrapolation of the TDR step is unreliable above 50 MHz");
    }
    let (step_lo, _) = spectrum::step_range(freqs_hz);
    if !spectrum::is_uniform(freqs_hz) {
        log::warn!("non-uniform frequency grid; resampling by linear interpolation");
    }
    // half the period must cover the requested span
    let df = step_lo.min(0.5 / opts.min_span_s);
    let m_max = (f_last / df + 1e-9) as usize;
    let mut half = spectrum::uniform_rect(freqs_hz, sdd11, df, m_max);
    for (m, h) in half.iter_mut().enumerate() {
        *h *= spectrum::band_edge_weight(m as f64 * df, f_last, opts.taper_fraction);
    }
    let n_time = libm::ceil(1.0 / (df * opts.max_time_step_s)) as usize;
    let n = fft::next_power_of_two(n_time.max(2 * (m_max + 1)));
    half.resize(n / 2 + 1, Complex64::new(0.0, 0.0));
    let impulse = fft::irfft(&half, n);
    let dt = 1.0 / (n as f64 * df);

    // Integrate over one full period starting at the most negative time,
    // then remove the baseline drift that the causal quiet interval before
    // the incident edge reveals (it comes from the extrapolated DC bin).
    let mut acc = 0.0;
    let mut integral = vec![0.0; n];
    for k in 0..n {
        acc += impulse[(k + n / 2) % n];
        integral[k] = acc;
    }
    let quiet: Vec<usize> = (n / 20..n / 2 - n / 20).collect();
    let xs: Vec<f64> = quiet.iter().map(|&k| k as f64).collect();
    let ys: Vec<f64> = quiet.iter().map(|&k| integral[k]).collect();
    let (slope, icpt) = spectrum::linear_fit(&xs, &ys);
    let rho: Vec<f64> = (0..n / 2)
        .map(|i| {
            let k = i + n / 2;
            integral[k] - (icpt + slope * k as f64)
        })
        .collect();
    let time_s: Vec<f64> = (0..n / 2).map(|i| i as f64 * dt).collect();
    let z_ohm = rho.iter().map(|&r| impedance_from_rho(r, z_ref_diff_ohm)).collect();
    Ok(TdrTrace { time_s, rho, z_ohm, z_ref_diff_ohm })
}

/// Mean odd-mode impedance (half the differential value) over
/// `[t_start_s, t_start_s + window_s]`.
pub fn windowed_impedance(trace: &TdrTrace, t_start_s: f64, window_s: f64) -> Result<f64, TdrError> {
    let stop = t_start_s + window_s;
    let span = trace.span_s();
    let dt = trace.dt();
    if t_start_s < 0.0 || stop > span + 1e-6 * dt || dt <= 0.0 {
        return Err(TdrError::WindowOutsideTrace { start_s: t_start_s, stop_s: stop, span_s: span });
    }
    let i0 = libm::ceil(t_start_s / dt - 1e-9) as usize;
    let i1 = (libm::floor(stop / dt + 1e-9) as usize).min(trace.z_ohm.len() - 1);
    let slice = &trace.z_ohm[i0..=i1];
    Ok(slice.iter().sum::<f64>() / slice.len() as f64 / 2.0)
}

/// First time at which `|dZ/dt|` stays below the rule's limit for the rule's
/// hold time.
pub fn settle_time(trace: &TdrTrace, rule: &SettleRule) -> Option<f64> {
    let dt = trace.dt();
    if dt <= 0.0 {
        return None;
    }
    let hold = (libm::ceil(rule.hold_s / dt - 1e-9) as usize).max(1);
    let z = &trace.z_ohm;
    let mut run = 0usize;
    for i in 0..z.len().saturating_sub(1) {
        let slope = (z[i + 1] - z[i]).abs() / dt;
        if slope < rule.max_slope_ohm_per_s {
            run += 1;
            if run >= hold {
                return Some(trace.time_s[i + 1 - run]);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// Windowed odd-mode impedance with the window starting at the automatic
/// settle time, or at `t_start_s` when given. Returns `(ohm, start, stop)`.
pub fn impedance_reading(
    trace: &TdrTrace,
    t_start_s: Option<f64>,
    window_s: f64,
    rule: &SettleRule,
) -> Result<(f64, f64, f64), TdrError> {
    let start = match t_start_s {
        Some(t) => t,
        None => settle_time(trace, rule).ok_or(TdrError::NeverSettles)?,
    };
    let z = windowed_impedance(trace, start, window_s)?;
    Ok((z, start, start + window_s))
}
