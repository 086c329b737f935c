//! Reduction of one measured net to its outcome row.
//!
//! Designed-in skew needs a per-board reference velocity taken from the
//! board's longest net, so analysis runs in two passes: [`board_reference`]
//! once per board, then [`analyze_net`] for every net of that board.

use alloc::borrow::Cow;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linksim::{simulate_link, DriverWaveform, FixedComponents, LinkError};
use crate::metrics::{self, MetricsError};
use crate::network::{to_mixed_mode, NetworkData, PortMap};
use crate::record::{EyeReading, ImpedanceReading, NetRecord, OutcomeRow, Sampled};
use crate::tdr::{self, SettleRule, TdrError, TdrOptions};

#[derive(Debug, Clone, PartialEq)]
pub enum OutcomeError {
    Skew(MetricsError),
    Loss(MetricsError),
    ModeConversion(MetricsError),
    Impedance(TdrError),
    Eye(LinkError),
    /// The board reference has no velocity for a requested skew frequency.
    MissingReference { freq_hz: f64 },
}

impl fmt::Display for OutcomeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutcomeError::Skew(e) => write!(f, "skew: {e}"),
            OutcomeError::Loss(e) => write!(f, "loss: {e}"),
            OutcomeError::ModeConversion(e) => write!(f, "mode conversion: {e}"),
            OutcomeError::Impedance(e) => write!(f, "impedance: {e}"),
            OutcomeError::Eye(e) => write!(f, "eye: {e}"),
            OutcomeError::MissingReference { freq_hz } => {
                write!(f, "board reference velocity missing at {freq_hz} Hz")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for OutcomeError {}

/// Window settings for the TDR impedance reading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceSetup {
    pub tdr: TdrOptions,
    pub settle: SettleRule,
    pub window_s: f64,
    /// Fixed window start; `None` uses the automatic settle detection.
    pub t_start_s: Option<f64>,
}

impl Default for ImpedanceSetup {
    fn default() -> Self {
        ImpedanceSetup {
            tdr: TdrOptions::default(),
            settle: SettleRule::default(),
            window_s: tdr::DEFAULT_WINDOW_S,
            t_start_s: None,
        }
    }
}

/// Driver, pattern and fixed link components for the eye simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSetup {
    pub driver: DriverWaveform,
    pub pattern: Vec<bool>,
    pub fixed: FixedComponents,
}

/// Which outcomes to compute and where to sample them.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub skew_freqs_hz: Vec<f64>,
    pub loss_freqs_hz: Vec<f64>,
    pub scd21_freqs_hz: Vec<f64>,
    pub sdd11_threshold_db: f64,
    pub impedance: Option<ImpedanceSetup>,
    pub link: Option<LinkSetup>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            skew_freqs_hz: vec![1e9, 2e9, 4e9],
            loss_freqs_hz: vec![1e9, 2e9, 4e9],
            scd21_freqs_hz: vec![1e9, 2e9, 3e9],
            sdd11_threshold_db: -10.0,
            impedance: Some(ImpedanceSetup::default()),
            link: None,
        }
    }
}

/// Reference propagation velocity of one board at each skew frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct BoardReference {
    pub velocity_m_per_s: Vec<Sampled>,
}

impl BoardReference {
    /// The same velocity at every frequency.
    pub fn constant(freqs_hz: &[f64], v_m_per_s: f64) -> Self {
        BoardReference {
            velocity_m_per_s: freqs_hz.iter().map(|&f| Sampled { freq_hz: f, value: v_m_per_s }).collect(),
        }
    }

    pub fn at(&self, freq_hz: f64) -> Option<f64> {
        self.velocity_m_per_s.iter().find(|s| s.freq_hz == freq_hz).map(|s| s.value)
    }
}

fn mapped<'a>(net: &'a NetworkData, map: &PortMap) -> Cow<'a, NetworkData> {
    if *map == PortMap::default() {
        Cow::Borrowed(net)
    } else {
        Cow::Owned(net.remapped(map))
    }
}

/// Velocity of the board's longest net at each frequency; `longest` is
/// that net's measurement and record.
pub fn board_reference(longest: &NetworkData, rec: &NetRecord, freqs_hz: &[f64]) -> Result<BoardReference, MetricsError> {
    let net = mapped(longest, &rec.port_map);
    let velocity_m_per_s = freqs_hz
        .iter()
        .map(|&f| Ok(Sampled { freq_hz: f, value: metrics::propagation_velocity(&net, rec, f)? }))
        .collect::<Result<_, MetricsError>>()?;
    Ok(BoardReference { velocity_m_per_s })
}

/// Every configured outcome of one net. Any failing analysis fails the net.
pub fn analyze_net(
    net: &NetworkData,
    rec: &NetRecord,
    board: &BoardReference,
    cfg: &AnalysisConfig,
) -> Result<OutcomeRow, OutcomeError> {
    let net = mapped(net, &rec.port_map);
    let mm = to_mixed_mode(&net);

    let mut random_skew_ps = Vec::with_capacity(cfg.skew_freqs_hz.len());
    for &f in &cfg.skew_freqs_hz {
        let v = board.at(f).ok_or(OutcomeError::MissingReference { freq_hz: f })?;
        let value = metrics::random_skew(&net, rec, v, f).map_err(OutcomeError::Skew)?;
        random_skew_ps.push(Sampled { freq_hz: f, value });
    }
    let loss_db_per_in = cfg
        .loss_freqs_hz
        .iter()
        .map(|&f| Ok(Sampled { freq_hz: f, value: metrics::loss_per_inch(&mm, rec, f)? }))
        .collect::<Result<_, _>>()
        .map_err(OutcomeError::Loss)?;
    let scd21_db = cfg
        .scd21_freqs_hz
        .iter()
        .map(|&f| Ok(Sampled { freq_hz: f, value: metrics::scd21_db(&mm, f)? }))
        .collect::<Result<_, _>>()
        .map_err(OutcomeError::ModeConversion)?;
    let f_sdd11_minus10db_hz = metrics::sdd11_crossing(&mm, cfg.sdd11_threshold_db);

    let impedance = match &cfg.impedance {
        Some(setup) => {
            let trace = tdr::step_response(&mm.sdd11(), &mm.freqs_hz, mm.z_ref_diff_ohm, &setup.tdr)
                .map_err(OutcomeError::Impedance)?;
            let (odd_ohm, window_start_s, window_stop_s) =
                tdr::impedance_reading(&trace, setup.t_start_s, setup.window_s, &setup.settle)
                    .map_err(OutcomeError::Impedance)?;
            Some(ImpedanceReading { odd_ohm, window_start_s, window_stop_s })
        }
        None => None,
    };

    let eye = match &cfg.link {
        Some(link) => {
            let m = simulate_link(&mm, &link.fixed, &link.driver, &link.pattern).map_err(OutcomeError::Eye)?;
            Some(EyeReading {
                eye_height_v: m.eye_height_v,
                eye_width_ui: m.eye_width_ui,
                jitter_ui: m.jitter_ui,
                vertical_eye_noise_v: m.vertical_eye_noise_v,
            })
        }
        None => None,
    };

    Ok(OutcomeRow {
        net_id: format!("{}/{}", rec.board_serial, rec.net_name),
        random_skew_ps,
        loss_db_per_in,
        scd21_db,
        f_sdd11_minus10db_hz,
        impedance,
        eye,
    })
}
