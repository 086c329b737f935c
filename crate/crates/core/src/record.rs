//! Per-net metadata and the scalar outcome row computed for each net.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::network::PortMap;

/// Layout and test metadata for one measured net.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetRecord {
    pub net_name: String,
    pub board_serial: String,
    pub routing_core: u32,
    pub len_p_in: Option<f64>,
    pub len_n_in: Option<f64>,
    pub tester_id: String,
    pub s4p_path: String,
    #[serde(default)]
    pub port_map: PortMap,
}

impl NetRecord {
    pub fn mean_length_in(&self) -> Option<f64> {
        Some(0.5 * (self.len_p_in? + self.len_n_in?))
    }

    pub fn key(&self) -> (&str, &str) {
        (&self.net_name, &self.board_serial)
    }
}

/// A scalar sampled at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampled {
    pub freq_hz: f64,
    pub value: f64,
}

/// Window actually averaged for the impedance value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpedanceReading {
    pub odd_ohm: f64,
    pub window_start_s: f64,
    pub window_stop_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EyeReading {
    pub eye_height_v: f64,
    pub eye_width_ui: f64,
    pub jitter_ui: f64,
    pub vertical_eye_noise_v: f64,
}

/// Scalar signal-integrity outcomes of one net.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub net_id: String,
    pub random_skew_ps: Vec<Sampled>,
    pub loss_db_per_in: Vec<Sampled>,
    pub scd21_db: Vec<Sampled>,
    pub f_sdd11_minus10db_hz: Option<f64>,
    pub impedance: Option<ImpedanceReading>,
    pub eye: Option<EyeReading>,
}
