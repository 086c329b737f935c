//! Eye-diagram synthesis by superposition of single-bit responses.
//!
//! The channel's differential through response is turned into a causal
//! impulse response, convolved with the stored single-bit driver response,
//! and the resulting pulse is placed at every 1-bit of a periodic pattern.
//! The periodic far-end waveform is folded into a 2-UI eye.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use num_complex::Complex64;

use crate::fft;
use crate::network::{cascade_chain, DiffBlock, MixedModeNetwork, NetworkError};
use crate::spectrum;

#[derive(Debug, Clone, PartialEq)]
pub enum LinkError {
    TooFewPoints,
    LengthMismatch,
    /// Fewer than the required grid points per `1/UI` of bandwidth.
    GridTooSparse { points_per_baud: f64 },
    InvalidDriver(&'static str),
    PatternTooShort { len: usize },
    MissingRail,
    EyeCollapsed,
    Network(NetworkError),
}

impl fmt::Display for LinkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkError::TooFewPoints => write!(f, "at least two frequency points are required"),
            LinkError::LengthMismatch => write!(f, "frequency and value arrays differ in length"),
            LinkError::GridTooSparse { points_per_baud } => write!(
                f,
                "grid too sparse to resolve the unit interval ({points_per_baud:.1} points per 1/UI, need {MIN_POINTS_PER_BAUD})"
            ),
            LinkError::InvalidDriver(why) => write!(f, "invalid driver waveform: {why}"),
            LinkError::PatternTooShort { len } => {
                write!(f, "pattern has {len} bits; at least {MIN_PATTERN_BITS} are required")
            }
            LinkError::MissingRail => write!(f, "eye needs both a 1-rail and a 0-rail"),
            LinkError::EyeCollapsed => write!(f, "eye collapsed: no threshold crossings"),
            LinkError::Network(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LinkError {}

impl From<NetworkError> for LinkError {
    fn from(e: NetworkError) -> Self {
        LinkError::Network(e)
    }
}

pub const MIN_POINTS_PER_BAUD: usize = 8;
pub const MIN_PATTERN_BITS: usize = 127;
const EXTENSION_FRACTION: f64 = 0.1;
/// Fraction of the peak that marks the onset of the direct response.
const ONSET_FRACTION: f64 = 0.01;
/// Distance in UI between the causal fold and the response onset.
const FOLD_MARGIN_UI: f64 = 1.0;

/// PRBS-7 (`x^7 + x^6 + 1`), one full period of 127 bits from the all-ones
/// seed.
pub fn prbs7() -> Vec<bool> {
    prbs(7, 6)
}

/// Fibonacci LFSR sequence for the polynomial `x^order + x^tap + 1`, one
/// full period from the all-ones seed.
pub fn prbs(order: u32, tap: u32) -> Vec<bool> {
    let mask = (1u32 << order) - 1;
    let mut state = mask;
    let len = mask as usize;
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let bit = ((state >> (order - 1)) ^ (state >> (tap - 1))) & 1;
        out.push(bit == 1);
        state = ((state << 1) | bit) & mask;
    }
    out
}

/// Far-end-independent driver response to a single isolated 1-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverWaveform {
    pub dt_s: f64,
    pub samples_v: Vec<f64>,
    pub bit_period_s: f64,
}

impl DriverWaveform {
    pub fn new(dt_s: f64, samples_v: Vec<f64>, bit_period_s: f64) -> Result<Self, LinkError> {
        let d = DriverWaveform { dt_s, samples_v, bit_period_s };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        if !(self.dt_s > 0.0) || !(self.bit_period_s > 0.0) {
            return Err(LinkError::InvalidDriver("time step and unit interval must be positive"));
        }
        let ratio = self.bit_period_s / self.dt_s;
        if (ratio - libm::round(ratio)).abs() > 1e-12 * ratio.max(1.0) || libm::round(ratio) < 1.0 {
            return Err(LinkError::InvalidDriver("time step does not divide the unit interval"));
        }
        match self.samples_v.last() {
            None => return Err(LinkError::InvalidDriver("no samples")),
            Some(v) if v.abs() > 1e-3 => {
                return Err(LinkError::InvalidDriver("waveform does not settle back to the 0-level"))
            }
            _ => {}
        }
        if self.samples_v.iter().any(|v| !v.is_finite()) {
            return Err(LinkError::InvalidDriver("non-finite sample"));
        }
        Ok(())
    }

    pub fn samples_per_ui(&self) -> usize {
        libm::round(self.bit_period_s / self.dt_s) as usize
    }

    /// Single-bit response of an ideal trapezoid: linear rise over `edge_s`,
    /// flat top, linear fall over `edge_s` starting one UI after the rise.
    /// Adjacent bits superpose to a flat level.
    pub fn trapezoid(amplitude_v: f64, bit_period_s: f64, edge_s: f64, samples_per_ui: usize) -> Self {
        let dt = bit_period_s / samples_per_ui as f64;
        let n = libm::ceil((bit_period_s + edge_s) / dt) as usize + 2;
        let samples_v = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                let ramp = |x: f64| {
                    if edge_s <= 0.0 {
                        if x >= 0.0 {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        (x / edge_s).clamp(0.0, 1.0)
                    }
                };
                amplitude_v * (ramp(t) - ramp(t - bit_period_s))
            })
            .collect();
        DriverWaveform { dt_s: dt, samples_v, bit_period_s }
    }

    pub fn peak_to_peak_v(&self) -> f64 {
        let max = self.samples_v.iter().cloned().fold(0.0, f64::max);
        let min = self.samples_v.iter().cloned().fold(0.0, f64::min);
        max - min
    }

    pub fn inverted(&self) -> Self {
        DriverWaveform {
            dt_s: self.dt_s,
            samples_v: self.samples_v.iter().map(|v| -v).collect(),
            bit_period_s: self.bit_period_s,
        }
    }
}

/// Causal impulse response sampled at `dt_s`; `taps[k]` multiplies the input
/// sample `k` steps in the past.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    pub dt_s: f64,
    pub taps: Vec<f64>,
    /// Energy of the unconstrained inverse transform at negative time,
    /// relative to its total energy.
    pub acausal_energy_fraction: f64,
}

impl ImpulseResponse {
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|v| v * v).sum()
    }
}

struct PolarSeries {
    mag: Vec<f64>,
    phase: Vec<f64>,
}

fn polar(values: &[Complex64]) -> PolarSeries {
    let mag: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    let mut phase = Vec::with_capacity(values.len());
    let mut prev = 0.0;
    for (i, v) in values.iter().enumerate() {
        let raw = if v.norm() > 0.0 { v.arg() } else { prev };
        let p = if i == 0 {
            raw
        } else {
            let mut d = raw - libm::remainder(prev, 2.0 * PI);
            d = libm::remainder(d, 2.0 * PI);
            prev + d
        };
        phase.push(p);
        prev = p;
    }
    PolarSeries { mag, phase }
}

/// Extension model for frequencies beyond the measured band: magnitude in dB
/// and phase both linear in frequency, fitted over the top of the band. The
/// magnitude slope is clamped so the model never grows.
struct Extension {
    f_edge: f64,
    db_at_edge: f64,
    db_slope: f64,
    phase_at_edge: f64,
    phase_slope: f64,
}

impl Extension {
    fn fit(freqs_hz: &[f64], p: &PolarSeries) -> Self {
        let f_edge = *freqs_hz.last().unwrap();
        let lo = (1.0 - EXTENSION_FRACTION) * f_edge;
        let start = freqs_hz.partition_point(|&f| f < lo).min(freqs_hz.len() - 2);
        let fs = &freqs_hz[start..];
        let db: Vec<f64> = p.mag[start..].iter().map(|m| 20.0 * libm::log10(m.max(1e-30))).collect();
        let (db_slope, db_icpt) = spectrum::linear_fit(fs, &db);
        let (phase_slope, ph_icpt) = spectrum::linear_fit(fs, &p.phase[start..]);
        let db_slope = db_slope.min(0.0);
        let db_at_edge = if db_slope == 0.0 {
            db.iter().sum::<f64>() / db.len() as f64
        } else {
            db_icpt + db_slope * f_edge
        };
        Extension { f_edge, db_at_edge, db_slope, phase_at_edge: ph_icpt + phase_slope * f_edge, phase_slope }
    }

    fn at(&self, f: f64) -> (f64, f64) {
        let db = self.db_at_edge + self.db_slope * (f - self.f_edge);
        (libm::pow(10.0, db / 20.0), self.phase_at_edge + self.phase_slope * (f - self.f_edge))
    }
}

/// Causal impulse response of `sdd21` sampled at `dt_s`.
///
/// Magnitude and unwrapped phase are interpolated onto the FFT bin grid.
/// Below the first measured point the magnitude is extended linearly and the
/// phase proportionally to frequency. Over the top tenth of the band the
/// data blend with a raised-cosine weight into a fitted extension model that
/// continues past the measured band. The causal response is rebuilt from the
/// real part of the spectrum, taken about the sample one UI ahead of the
/// response onset: a bulk delay on the sample grid then moves the response
/// without reshaping it.
pub fn impulse_response(sdd21: &[Complex64], freqs_hz: &[f64], dt_s: f64, ui_s: f64) -> Result<ImpulseResponse, LinkError> {
    if sdd21.len() != freqs_hz.len() {
        return Err(LinkError::LengthMismatch);
    }
    if freqs_hz.len() < 2 {
        return Err(LinkError::TooFewPoints);
    }
    let f_first = freqs_hz[0];
    let f_last = *freqs_hz.last().unwrap();
    let span = f_last - f_first;
    let points_per_baud = (freqs_hz.len() - 1) as f64 / (span * ui_s);
    if points_per_baud < MIN_POINTS_PER_BAUD as f64 {
        return Err(LinkError::GridTooSparse { points_per_baud });
    }
    if f_last * ui_s < 2.0 {
        log::warn!("grid stops at {f_last:.4e} Hz, below 2/UI; eye is band-limited");
    }

    let (step_lo, _) = spectrum::step_range(freqs_hz);
    let n = fft::next_power_of_two(libm::ceil(1.0 / (dt_s * step_lo)) as usize).max(16);
    let df = 1.0 / (n as f64 * dt_s);
    let p = polar(sdd21);
    let ext = Extension::fit(freqs_hz, &p);
    let (f0, f1) = (freqs_hz[0], freqs_hz[1]);

    let mut half = Vec::with_capacity(n / 2 + 1);
    for m in 0..=n / 2 {
        let f = m as f64 * df;
        let (mag, phase) = if f < f0 {
            let slope = (p.mag[1] - p.mag[0]) / (f1 - f0);
            ((p.mag[0] + slope * (f - f0)).max(0.0), p.phase[0] * f / f0)
        } else if f <= f_last {
            let meas = (spectrum::interp_real(freqs_hz, &p.mag, f), spectrum::interp_real(freqs_hz, &p.phase, f));
            let w = spectrum::band_edge_weight(f, f_last, EXTENSION_FRACTION);
            if w < 1.0 {
                let model = ext.at(f);
                (w * meas.0 + (1.0 - w) * model.0, w * meas.1 + (1.0 - w) * model.1)
            } else {
                meas
            }
        } else {
            ext.at(f)
        };
        half.push(Complex64::from_polar(mag, phase));
    }

    let direct = fft::irfft(&half, n);
    let total: f64 = direct.iter().map(|v| v * v).sum();
    let negative: f64 = direct[n / 2 + 1..].iter().map(|v| v * v).sum();
    let acausal_energy_fraction = if total > 0.0 { negative / total } else { 0.0 };
    if acausal_energy_fraction > 0.01 {
        log::warn!("{:.1}% of impulse energy lies at negative time", 100.0 * acausal_energy_fraction);
    }

    // fold about a sample one UI ahead of the onset: c(t) = h(t) + h(2o − t)
    // for t ≥ o, whose mirrored term has spectrum H*·e^{−jω·2o}
    let margin = libm::round(FOLD_MARGIN_UI * ui_s / dt_s) as usize;
    let origin = onset(&direct[..=n / 2]).saturating_sub(margin);
    let folded_spectrum: Vec<Complex64> = half
        .iter()
        .enumerate()
        .map(|(m, h)| {
            // reduce the angle exactly before scaling it
            let turns = ((2 * m as u128 * origin as u128) % n as u128) as f64 / n as f64;
            h + h.conj() * Complex64::from_polar(1.0, -2.0 * PI * turns)
        })
        .collect();
    let folded = fft::irfft(&folded_spectrum, n);
    let mut taps = vec![0.0; origin];
    taps.extend_from_slice(&folded[origin..(origin + n / 2).min(n)]);
    taps[origin] *= 0.5;

    // drop the numerically silent tail
    let energy: f64 = taps.iter().map(|v| v * v).sum();
    let mut tail = 0.0;
    let mut keep = taps.len();
    while keep > 1 {
        let v = taps[keep - 1];
        if tail + v * v > 1e-24 * energy {
            break;
        }
        tail += v * v;
        keep -= 1;
    }
    taps.truncate(keep);
    Ok(ImpulseResponse { dt_s, taps, acausal_energy_fraction })
}

/// Full linear convolution.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0.0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Folded eye: every trace spans two UI (`2·samples_per_ui + 1` samples)
/// centred on one bit.
#[derive(Debug, Clone, PartialEq)]
pub struct EyeDiagram {
    pub ui_s: f64,
    pub samples_per_ui: usize,
    pub traces: Vec<Vec<f64>>,
    /// Decision threshold halfway between the settled 0 and 1 levels.
    pub threshold_v: f64,
    /// Bit carried by each trace at the window centre, when known.
    pub labels: Option<Vec<bool>>,
}

impl EyeDiagram {
    pub fn trace_count(&self) -> usize {
        self.traces.len()
    }

    pub fn dt_s(&self) -> f64 {
        self.ui_s / self.samples_per_ui as f64
    }
}

/// Scalar eye outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyeMetrics {
    pub eye_height_v: f64,
    pub eye_width_ui: f64,
    pub jitter_ui: f64,
    pub vertical_eye_noise_v: f64,
}

/// `x` reduced into `[0, period)`.
fn wrap(x: f64, period: f64) -> f64 {
    let r = x - period * libm::floor(x / period);
    if r >= period { r - period } else { r }
}

/// Periodic far-end waveform for the repeated `pattern` given the pulse
/// (single-bit) response sampled at `samples_per_ui` per bit.
pub fn periodic_waveform(pulse: &[f64], pattern: &[bool], samples_per_ui: usize) -> Vec<f64> {
    let period = pattern.len() * samples_per_ui;
    let mut y = vec![0.0; period];
    for (k, _) in pattern.iter().enumerate().filter(|(_, b)| **b) {
        let start = k * samples_per_ui;
        for (j, v) in pulse.iter().enumerate() {
            y[(start + j) % period] += v;
        }
    }
    y
}

/// Fractional sample positions where `y` crosses `threshold`, treating `y`
/// as periodic when `wrap` is set.
fn crossings(y: &[f64], threshold: f64, wrap: bool) -> Vec<f64> {
    let n = y.len();
    let limit = if wrap { n } else { n.saturating_sub(1) };
    let mut out = Vec::new();
    for i in 0..limit {
        let a = y[i] - threshold;
        let b = y[(i + 1) % n] - threshold;
        if (a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0) {
            let at = |k: isize| {
                let k = if wrap { k.rem_euclid(n as isize) } else { k.clamp(0, n as isize - 1) };
                y[k as usize] - threshold
            };
            let i_s = i as isize;
            let cubic = [at(i_s - 1), a, b, at(i_s + 2)];
            out.push(i as f64 + cubic_root(cubic));
        }
    }
    out
}

/// Circular mean of phases in `[0, period)`, and peak-to-peak spread of the
/// phases about it.
fn circular_stats(phases: &[f64], period: f64) -> (f64, f64) {
    let (s, c) = phases.iter().fold((0.0, 0.0), |(s, c), p| {
        let a = 2.0 * PI * p / period;
        (s + libm::sin(a), c + libm::cos(a))
    });
    let mean = libm::atan2(s, c) * period / (2.0 * PI);
    let mean = wrap(mean, period);
    let (lo, hi) = phases.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let d = libm::remainder(p - mean, period);
        (lo.min(d), hi.max(d))
    });
    (mean, hi - lo)
}

/// Superposition eye for a channel, driver and repeated bit pattern.
pub fn synthesize_eye(channel: &DiffBlock, driver: &DriverWaveform, pattern: &[bool]) -> Result<EyeDiagram, LinkError> {
    if pattern.len() < MIN_PATTERN_BITS {
        return Err(LinkError::PatternTooShort { len: pattern.len() });
    }
    driver.validate()?;
    let h = impulse_response(&channel.s21(), &channel.freqs_hz, driver.dt_s, driver.bit_period_s)?;
    let pulse = convolve(&h.taps, &driver.samples_v);
    Ok(eye_from_pulse(&pulse, driver.samples_per_ui(), driver.bit_period_s, pattern))
}

/// Fold the periodic waveform produced by `pulse` into a 2-UI eye.
pub fn eye_from_pulse(pulse: &[f64], spu: usize, ui_s: f64, pattern: &[bool]) -> EyeDiagram {
    let y = periodic_waveform(pulse, pattern, spu);
    let period = y.len();
    let threshold_v = pulse.iter().sum::<f64>() / (2.0 * spu as f64);

    let phases: Vec<f64> = crossings(&y, threshold_v, true).into_iter().map(|c| c % spu as f64).collect();
    let centre = if phases.is_empty() {
        0.5 * spu as f64
    } else {
        let (mean, _) = circular_stats(&phases, spu as f64);
        (mean + 0.5 * spu as f64) % spu as f64
    };
    let shift = libm::round(centre) as usize % spu;

    // The main cursor decides which window centre belongs to bit 0; trace k
    // is then centred on bit k, so the fold does not depend on channel delay.
    let peak = pulse
        .iter()
        .enumerate()
        .fold((0usize, 0.0f64), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) })
        .0;
    let turns = libm::round((peak as f64 - shift as f64) / spu as f64).max(0.0) as usize;
    let bit0_centre = shift + turns * spu;
    let traces = (0..pattern.len())
        .map(|k| {
            let start = (bit0_centre + k * spu + period - spu) % period;
            (0..=2 * spu).map(|j| y[(start + j) % period]).collect()
        })
        .collect();
    let labels = pattern.to_vec();
    EyeDiagram { ui_s, samples_per_ui: spu, traces, threshold_v, labels: Some(labels) }
}

/// First index where `|h|` reaches `ONSET_FRACTION` of its peak.
fn onset(h: &[f64]) -> usize {
    let peak = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    h.iter().position(|v| v.abs() >= ONSET_FRACTION * peak).unwrap_or(0)
}

/// Catmull–Rom segment through `p[1]` and `p[2]` at `t` in [0, 1].
fn catmull_rom(p: [f64; 4], t: f64) -> f64 {
    let [p0, p1, p2, p3] = p;
    p1 + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)))
}

/// Zero of the Catmull–Rom segment, which changes sign between its ends.
fn cubic_root(p: [f64; 4]) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    let rising = p[1] < 0.0;
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if (catmull_rom(p, mid) < 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Catmull–Rom value of `trace` at fractional index `pos`; exact at samples
/// and for quadratic data, so the rail reading barely depends on where the
/// centre falls between samples.
fn interp_at(trace: &[f64], pos: f64) -> f64 {
    let last = trace.len() - 1;
    let i = (libm::floor(pos) as usize).min(last - 1);
    let t = pos - i as f64;
    catmull_rom([trace[i.saturating_sub(1)], trace[i], trace[i + 1], trace[(i + 2).min(last)]], t)
}

/// Height, width, jitter and vertical noise of a folded eye.
pub fn extract_metrics(eye: &EyeDiagram) -> Result<EyeMetrics, LinkError> {
    let spu = eye.samples_per_ui as f64;
    let mut phases = Vec::new();
    for tr in &eye.traces {
        phases.extend(crossings(tr, eye.threshold_v, false).into_iter().map(|c| wrap(c, spu)));
    }
    if phases.is_empty() {
        return Err(LinkError::EyeCollapsed);
    }
    let (mean, spread) = circular_stats(&phases, spu);
    let jitter_ui = spread / spu;
    // eye centre half a UI after the mean crossing, taken in the middle UI
    let c = (mean + 0.5 * spu) % spu;
    let centre = if c < 0.5 * spu { c + spu } else { c };

    let values: Vec<f64> = eye.traces.iter().map(|tr| interp_at(tr, centre)).collect();
    let (rail_a, rail_b): (Vec<f64>, Vec<f64>) = match &eye.labels {
        Some(labels) => {
            let a = values.iter().zip(labels).filter(|(_, l)| **l).map(|(v, _)| *v).collect();
            let b = values.iter().zip(labels).filter(|(_, l)| !**l).map(|(v, _)| *v).collect();
            (a, b)
        }
        None => values.iter().partition(|v| **v >= eye.threshold_v),
    };
    if rail_a.is_empty() || rail_b.is_empty() {
        return Err(LinkError::MissingRail);
    }
    let mean_of = |r: &[f64]| r.iter().sum::<f64>() / r.len() as f64;
    let (top, bottom) = if mean_of(&rail_a) >= mean_of(&rail_b) { (rail_a, rail_b) } else { (rail_b, rail_a) };
    let min = |r: &[f64]| r.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = |r: &[f64]| r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let eye_height_v = (min(&top) - max(&bottom)).max(0.0);
    let vertical_eye_noise_v = (max(&top) - min(&top)) + (max(&bottom) - min(&bottom));
    Ok(EyeMetrics {
        eye_height_v,
        eye_width_ui: (1.0 - jitter_ui).max(0.0),
        jitter_ui,
        vertical_eye_noise_v,
    })
}

/// Link components held fixed while the board varies: blocks cascaded
/// before and after the board.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FixedComponents {
    pub tx_side: Vec<DiffBlock>,
    pub rx_side: Vec<DiffBlock>,
}

/// Cascade the fixed components around the board's differential block and
/// simulate the eye.
pub fn simulate_link(
    pwb: &MixedModeNetwork,
    fixed: &FixedComponents,
    driver: &DriverWaveform,
    pattern: &[bool],
) -> Result<EyeMetrics, LinkError> {
    let board = pwb.sdd_block();
    let chain = fixed.tx_side.iter().chain(core::iter::once(&board)).chain(fixed.rx_side.iter());
    let channel = cascade_chain(chain)?.expect("chain contains the board");
    let eye = synthesize_eye(&channel, driver, pattern)?;
    extract_metrics(&eye)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, df: f64) -> Vec<f64> {
        (1..=n).map(|i| i as f64 * df).collect()
    }

    #[test]
    fn prbs7_has_every_nonzero_word() {
        let p = prbs7();
        assert_eq!(p.len(), 127);
        assert_eq!(p.iter().filter(|b| **b).count(), 64);
        let mut seen = [false; 128];
        for k in 0..127 {
            let w = (0..7).fold(0usize, |acc, j| (acc << 1) | p[(k + j) % 127] as usize);
            seen[w] = true;
        }
        assert!(!seen[0]);
        assert_eq!(seen.iter().filter(|s| **s).count(), 127);
    }

    #[test]
    fn trapezoid_bits_superpose_flat() {
        let d = DriverWaveform::trapezoid(1.0, 400e-12, 40e-12, 64);
        d.validate().unwrap();
        assert_eq!(d.samples_per_ui(), 64);
        let y = periodic_waveform(&d.samples_v, &[true; 4], 64);
        assert!(y.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!((d.peak_to_peak_v() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn driver_validation() {
        assert!(DriverWaveform::new(1e-12, vec![0.0, 1.0, 0.0], 10.5e-12).is_err());
        assert!(DriverWaveform::new(1e-12, vec![0.0, 1.0, 0.5], 10e-12).is_err());
        assert!(DriverWaveform::new(1e-12, vec![0.0, 1.0, 0.0], 10e-12).is_ok());
    }

    #[test]
    fn identity_impulse_is_a_delta() {
        let f = grid(600, 10e6);
        let s = vec![Complex64::new(1.0, 0.0); f.len()];
        let h = impulse_response(&s, &f, 6.25e-12, 400e-12).unwrap();
        assert!(h.taps[0] * h.taps[0] >= 0.99 * h.energy());
        assert!((h.taps[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sparse_grid_is_rejected() {
        let f = grid(10, 1e9);
        let s = vec![Complex64::new(1.0, 0.0); f.len()];
        assert!(matches!(impulse_response(&s, &f, 6.25e-12, 400e-12), Err(LinkError::GridTooSparse { .. })));
    }

    #[test]
    fn two_trace_jitter() {
        // crossings at 0.45 and 0.55 UI of a 100-sample UI
        let spu = 100;
        let rise = |c: f64| (0..=2 * spu).map(|j| if (j as f64) < c { -1.0 } else { 1.0 }).collect::<Vec<f64>>();
        let mut a = rise(45.0);
        let mut b = rise(55.0);
        // linear edges through the threshold exactly at the crossing
        a[44] = -0.5;
        a[45] = 0.5;
        b[54] = -0.5;
        b[55] = 0.5;
        let eye = EyeDiagram { ui_s: 1.0, samples_per_ui: spu, traces: vec![a, b], threshold_v: 0.0, labels: None };
        // both traces are 1 at the centre; add a 0-rail trace without crossings
        let mut eye = eye;
        eye.traces.push(vec![-1.0; 2 * spu + 1]);
        let m = extract_metrics(&eye).unwrap();
        assert!((m.jitter_ui - 0.10).abs() < 1e-9, "{}", m.jitter_ui);
        assert!((m.eye_width_ui - 0.90).abs() < 1e-9);
    }

    #[test]
    fn flat_eye_is_collapsed() {
        let eye = EyeDiagram { ui_s: 1.0, samples_per_ui: 4, traces: vec![vec![1.0; 9], vec![-1.0; 9]], threshold_v: 0.0, labels: None };
        assert_eq!(extract_metrics(&eye), Err(LinkError::EyeCollapsed));
    }

    #[test]
    fn short_pattern_is_rejected() {
        let f = grid(600, 10e6);
        let block = DiffBlock::through(&f, 100.0);
        let d = DriverWaveform::trapezoid(1.0, 400e-12, 40e-12, 64);
        assert_eq!(synthesize_eye(&block, &d, &[true, false]), Err(LinkError::PatternTooShort { len: 2 }));
    }
}
