//! Frequency-grid helpers shared by the time-domain transforms.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

/// Smallest and largest adjacent step of a grid.
pub fn step_range(freqs_hz: &[f64]) -> (f64, f64) {
    freqs_hz.windows(2).map(|w| w[1] - w[0]).fold((f64::INFINITY, 0.0), |(lo, hi), d| (lo.min(d), hi.max(d)))
}

pub fn is_uniform(freqs_hz: &[f64]) -> bool {
    let (lo, hi) = step_range(freqs_hz);
    hi - lo <= 1e-6 * hi
}

fn bracket(freqs_hz: &[f64], f: f64) -> (usize, f64) {
    let n = freqs_hz.len();
    let pos = freqs_hz.partition_point(|&x| x < f).clamp(1, n - 1);
    let (a, b) = (freqs_hz[pos - 1], freqs_hz[pos]);
    (pos - 1, (f - a) / (b - a))
}

/// Linear interpolation of real and imaginary parts at `f` (inside the grid).
pub fn interp_rect(freqs_hz: &[f64], values: &[Complex64], f: f64) -> Complex64 {
    let (i, t) = bracket(freqs_hz, f);
    values[i] + (values[i + 1] - values[i]) * t
}

/// Linear interpolation of a real series.
pub fn interp_real(freqs_hz: &[f64], values: &[f64], f: f64) -> f64 {
    let (i, t) = bracket(freqs_hz, f);
    values[i] + (values[i + 1] - values[i]) * t
}

/// Raised-cosine weight: 1 below `(1 - fraction)·f_edge`, falling to 0 at
/// `f_edge`.
pub fn band_edge_weight(f: f64, f_edge: f64, fraction: f64) -> f64 {
    if fraction <= 0.0 {
        return if f <= f_edge { 1.0 } else { 0.0 };
    }
    let start = (1.0 - fraction) * f_edge;
    if f <= start {
        1.0
    } else if f >= f_edge {
        0.0
    } else {
        0.5 * (1.0 + libm::cos(PI * (f - start) / (f_edge - start)))
    }
}

/// Rectangular DC extrapolation below the first grid point: real part
/// linear through the first two points, imaginary part proportional to `f`.
pub fn extrapolate_to_dc_rect(freqs_hz: &[f64], values: &[Complex64], f: f64) -> Complex64 {
    let (f0, f1) = (freqs_hz[0], freqs_hz[1]);
    let (h0, h1) = (values[0], values[1]);
    let slope = (h1.re - h0.re) / (f1 - f0);
    Complex64::new(h0.re + slope * (f - f0), h0.im * f / f0)
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Values on the uniform grid `m·df` for `m = 0..=m_max`, filled from the
/// measured grid by interpolation and rectangular DC extrapolation.
pub fn uniform_rect(freqs_hz: &[f64], values: &[Complex64], df: f64, m_max: usize) -> Vec<Complex64> {
    let f_first = freqs_hz[0];
    let f_last = *freqs_hz.last().unwrap();
    (0..=m_max)
        .map(|m| {
            let f = m as f64 * df;
            if f < f_first {
                extrapolate_to_dc_rect(freqs_hz, values, f)
            } else if f >= f_last {
                *values.last().unwrap()
            } else {
                interp_rect(freqs_hz, values, f)
            }
        })
        .collect()
}
