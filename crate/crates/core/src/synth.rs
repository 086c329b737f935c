//! Synthetic board populations with a known hierarchy of variation.
//!
//! Each differential net is two uncoupled single-ended lines. A line is a
//! shunt via capacitance, a lossy transmission line and a second via
//! capacitance, cascaded as ABCD matrices. Per-net parameters are the nominal values plus a board offset,
//! a routing-core offset and net-level noise, each drawn from a centred
//! Gaussian. Every draw comes from its own counter-indexed ChaCha stream so
//! generation order and thread count never change the result.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::metrics::METERS_PER_INCH;
use crate::network::{Abcd, Matrix4, NetworkData, PortMap};
use crate::record::NetRecord;

pub const SPEED_OF_LIGHT_M_PER_S: f64 = 299_792_458.0;
/// Nepers per decibel.
const NP_PER_DB: f64 = 1.0 / 8.685_889_638_065_037;

#[derive(Debug, Clone, PartialEq)]
pub enum SynthError {
    InvalidSpec(String),
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::InvalidSpec(why) => write!(f, "invalid population spec: {why}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SynthError {}

/// Standard deviations of one level of the variation hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectSigmas {
    /// Odd-mode impedance, ohm.
    pub impedance_ohm: f64,
    /// Loss at 4 GHz, dB per inch; applied by scaling both loss terms.
    pub loss_db_per_in: f64,
    /// P-minus-N delay, ps.
    pub skew_ps: f64,
}

impl EffectSigmas {
    fn is_valid(&self) -> bool {
        [self.impedance_ohm, self.loss_db_per_in, self.skew_ps].iter().all(|s| s.is_finite() && *s >= 0.0)
    }
}

/// One realized draw of a variation level.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EffectDraw {
    pub impedance_ohm: f64,
    pub loss_db_per_in: f64,
    pub skew_ps: f64,
}

/// Description of a synthetic population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationSpec {
    pub boards: usize,
    /// Board serial labels; generated as `SN001`, `SN002`, … when empty.
    pub board_serials: Vec<String>,
    pub cores: u32,
    pub nets_per_board: usize,
    pub length_min_in: f64,
    pub length_max_in: f64,
    pub z_odd_ohm: f64,
    pub dielectric_constant: f64,
    /// Skin-effect loss coefficient, dB/in at 1 GHz, scaling with √f.
    pub k_skin_db_per_in: f64,
    /// Dielectric loss coefficient, dB/in at 1 GHz, scaling with f.
    pub k_diel_db_per_in: f64,
    pub via_c_near_pf: f64,
    pub via_c_far_pf: f64,
    pub board_sigma: EffectSigmas,
    pub core_sigma: EffectSigmas,
    pub net_sigma: EffectSigmas,
    /// Designed-in skew is drawn uniformly on `[0, designed_skew_max_ps]`.
    pub designed_skew_max_ps: f64,
    /// Length-proportional random skew, ps per inch of mean length.
    pub skew_per_inch_ps: f64,
    /// Standard deviation of the relative P/N loss imbalance: the P line
    /// carries `1 + δ/2` of the net's loss and the N line `1 − δ/2`. A
    /// mode-conversion source in quadrature with skew that leaves the mean
    /// differential loss unchanged.
    pub pn_loss_imbalance_sigma: f64,
    pub z_ref_ohm: f64,
    pub freq_start_hz: f64,
    pub freq_stop_hz: f64,
    pub freq_points: usize,
    pub testers: Vec<String>,
    pub seed: u64,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        PopulationSpec {
            boards: 6,
            board_serials: Vec::new(),
            cores: 8,
            nets_per_board: 2000,
            length_min_in: 1.7,
            length_max_in: 32.8,
            z_odd_ohm: 52.4,
            dielectric_constant: 3.4,
            k_skin_db_per_in: 0.09,
            k_diel_db_per_in: 0.06,
            via_c_near_pf: 0.2,
            via_c_far_pf: 0.2,
            board_sigma: EffectSigmas { impedance_ohm: 0.7, loss_db_per_in: 0.03, skew_ps: 4.0 },
            core_sigma: EffectSigmas { impedance_ohm: 0.7, loss_db_per_in: 0.03, skew_ps: 4.0 },
            net_sigma: EffectSigmas { impedance_ohm: 1.1, loss_db_per_in: 0.07, skew_ps: 7.2 },
            designed_skew_max_ps: 8.0,
            skew_per_inch_ps: 0.0,
            pn_loss_imbalance_sigma: 0.35,
            z_ref_ohm: 50.0,
            freq_start_hz: 10e6,
            freq_stop_hz: 6e9,
            freq_points: 600,
            testers: alloc::vec![String::from("ATE1")],
            seed: 1,
        }
    }
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |why: &str| Err(SynthError::InvalidSpec(String::from(why)));
        if self.boards == 0 || self.cores == 0 || self.nets_per_board == 0 {
            return bad("board, core and net counts must be at least 1");
        }
        if !self.board_serials.is_empty() && self.board_serials.len() != self.boards {
            return bad("board_serials must list one label per board");
        }
        if !(self.length_min_in > 0.0 && self.length_max_in >= self.length_min_in) {
            return bad("length range must be positive and ordered");
        }
        if !(self.z_odd_ohm > 0.0 && self.dielectric_constant >= 1.0 && self.z_ref_ohm > 0.0) {
            return bad("impedances and dielectric constant must be physical");
        }
        let nonneg = [
            self.k_skin_db_per_in,
            self.k_diel_db_per_in,
            self.via_c_near_pf,
            self.via_c_far_pf,
            self.designed_skew_max_ps,
            self.pn_loss_imbalance_sigma,
        ];
        if nonneg.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || !self.skew_per_inch_ps.is_finite() {
            return bad("loss coefficients, via capacitances, skew range and sigmas must be non-negative");
        }
        if !(self.board_sigma.is_valid() && self.core_sigma.is_valid() && self.net_sigma.is_valid()) {
            return bad("effect sigmas must be non-negative");
        }
        if !(self.freq_start_hz > 0.0 && self.freq_stop_hz > self.freq_start_hz && self.freq_points >= 2) {
            return bad("frequency grid must be positive, ascending and have at least two points");
        }
        if self.testers.is_empty() {
            return bad("at least one tester id is required");
        }
        Ok(())
    }

    pub fn serial(&self, board: usize) -> String {
        match self.board_serials.get(board) {
            Some(s) => s.clone(),
            None => format!("SN{:03}", board + 1),
        }
    }

    pub fn net_name(net: usize) -> String {
        format!("NET{:05}", net + 1)
    }

    pub fn velocity_m_per_s(&self) -> f64 {
        SPEED_OF_LIGHT_M_PER_S / libm::sqrt(self.dielectric_constant)
    }

    /// Nominal loss at 4 GHz, dB per inch.
    pub fn nominal_loss_4ghz(&self) -> f64 {
        loss_db_per_in(self.k_skin_db_per_in, self.k_diel_db_per_in, 4e9)
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.freq_points;
        let step = (self.freq_stop_hz - self.freq_start_hz) / (n - 1) as f64;
        (0..n).map(|i| self.freq_start_hz + i as f64 * step).collect()
    }
}

/// Loss per inch of the `k_s·√f + k_d·f` model (f in GHz).
pub fn loss_db_per_in(k_skin: f64, k_diel: f64, f_hz: f64) -> f64 {
    let g = f_hz * 1e-9;
    k_skin * libm::sqrt(g) + k_diel * g
}

/// True parameters of one generated net.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetTruth {
    pub net_name: String,
    pub board_serial: String,
    pub tester_id: String,
    pub routing_core: u32,
    pub len_p_in: f64,
    pub len_n_in: f64,
    pub z_odd_ohm: f64,
    pub tau_p_s: f64,
    pub tau_n_s: f64,
    pub k_skin_db_per_in: f64,
    pub k_diel_db_per_in: f64,
    pub via_c_near_pf: f64,
    pub via_c_far_pf: f64,
    /// Relative P/N loss imbalance δ, within [−2, 2].
    pub loss_imbalance: f64,
    pub designed_skew_ps: f64,
    pub random_skew_ps: f64,
}

impl NetTruth {
    pub fn mean_length_in(&self) -> f64 {
        0.5 * (self.len_p_in + self.len_n_in)
    }

    pub fn loss_db_per_in(&self, f_hz: f64) -> f64 {
        loss_db_per_in(self.k_skin_db_per_in, self.k_diel_db_per_in, f_hz)
    }

    pub fn s4p_path(&self) -> String {
        format!("{}/{}.s4p", self.board_serial, self.net_name)
    }

    pub fn record(&self) -> NetRecord {
        NetRecord {
            net_name: self.net_name.clone(),
            board_serial: self.board_serial.clone(),
            routing_core: self.routing_core,
            len_p_in: Some(self.len_p_in),
            len_n_in: Some(self.len_n_in),
            tester_id: self.tester_id.clone(),
            s4p_path: self.s4p_path(),
            port_map: PortMap::default(),
        }
    }
}

/// Everything drawn for a population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: PopulationSpec,
    pub board_offsets: Vec<EffectDraw>,
    pub core_offsets: Vec<EffectDraw>,
    /// Board-major: all nets of the first board, then the second, …
    pub nets: Vec<NetTruth>,
}

impl GroundTruth {
    pub fn records(&self) -> Vec<NetRecord> {
        self.nets.iter().map(NetTruth::record).collect()
    }

    /// Four-port data of net `index`, built on the spec's grid.
    pub fn network(&self, index: usize) -> NetworkData {
        net_model(&self.nets[index], &self.spec.frequencies(), self.spec.z_ref_ohm)
    }
}

// stream tags keep every level of the hierarchy on its own ChaCha stream
const STREAM_LAYOUT: u64 = 1;
const STREAM_BOARD: u64 = 2;
const STREAM_CORE: u64 = 3;
const STREAM_NET: u64 = 4;

fn stream(seed: u64, tag: u64, a: u64, b: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream((tag << 60) ^ (a << 32) ^ b);
    rng
}

fn gauss<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    if sigma == 0.0 {
        // keep the stream position independent of which sigmas are zero
        let _: f64 = rng.gen();
        return 0.0;
    }
    Normal::new(0.0, sigma).expect("finite non-negative sigma").sample(rng)
}

fn draw_effect<R: Rng>(rng: &mut R, s: &EffectSigmas) -> EffectDraw {
    EffectDraw {
        impedance_ohm: gauss(rng, s.impedance_ohm),
        loss_db_per_in: gauss(rng, s.loss_db_per_in),
        skew_ps: gauss(rng, s.skew_ps),
    }
}

struct Layout {
    core: u32,
    mean_len_in: f64,
    designed_skew_ps: f64,
}

fn layout(spec: &PopulationSpec, net: usize) -> Layout {
    let mut rng = stream(spec.seed, STREAM_LAYOUT, 0, net as u64);
    let core = rng.gen_range(0..spec.cores);
    let span = spec.length_max_in - spec.length_min_in;
    let mean_len_in = spec.length_min_in + span * rng.gen::<f64>();
    let designed_skew_ps = spec.designed_skew_max_ps * rng.gen::<f64>();
    Layout { core, mean_len_in, designed_skew_ps }
}

/// Draw every level of the hierarchy for `spec`.
pub fn generate_population(spec: &PopulationSpec) -> Result<GroundTruth, SynthError> {
    spec.validate()?;
    let board_offsets: Vec<EffectDraw> = (0..spec.boards)
        .map(|b| draw_effect(&mut stream(spec.seed, STREAM_BOARD, 0, b as u64), &spec.board_sigma))
        .collect();
    let core_offsets: Vec<EffectDraw> = (0..spec.cores)
        .map(|c| draw_effect(&mut stream(spec.seed, STREAM_CORE, 0, c as u64), &spec.core_sigma))
        .collect();
    let layouts: Vec<Layout> = (0..spec.nets_per_board).map(|n| layout(spec, n)).collect();
    let v = spec.velocity_m_per_s();
    let nominal_loss = spec.nominal_loss_4ghz();

    let mut nets = Vec::with_capacity(spec.boards * spec.nets_per_board);
    for (b, board) in board_offsets.iter().enumerate() {
        let serial = spec.serial(b);
        let tester = spec.testers[b % spec.testers.len()].clone();
        for (n, lay) in layouts.iter().enumerate() {
            let core = &core_offsets[lay.core as usize];
            let mut rng = stream(spec.seed, STREAM_NET, b as u64, n as u64);
            let noise = draw_effect(&mut rng, &spec.net_sigma);
            let loss_imbalance = gauss(&mut rng, spec.pn_loss_imbalance_sigma).clamp(-2.0, 2.0);

            let z_odd_ohm = spec.z_odd_ohm + board.impedance_ohm + core.impedance_ohm + noise.impedance_ohm;
            let loss4 = nominal_loss + board.loss_db_per_in + core.loss_db_per_in + noise.loss_db_per_in;
            let scale = if nominal_loss > 0.0 { loss4.max(0.0) / nominal_loss } else { 1.0 };
            let random_skew_ps =
                board.skew_ps + core.skew_ps + noise.skew_ps + spec.skew_per_inch_ps * lay.mean_len_in;

            // designed-in skew is realized as a P/N length difference
            let delta_len_in = lay.designed_skew_ps * 1e-12 * v / METERS_PER_INCH;
            let len_p_in = lay.mean_len_in + 0.5 * delta_len_in;
            let len_n_in = lay.mean_len_in - 0.5 * delta_len_in;
            let tau_p_s = len_p_in * METERS_PER_INCH / v + 0.5 * random_skew_ps * 1e-12;
            let tau_n_s = len_n_in * METERS_PER_INCH / v - 0.5 * random_skew_ps * 1e-12;

            nets.push(NetTruth {
                net_name: PopulationSpec::net_name(n),
                board_serial: serial.clone(),
                tester_id: tester.clone(),
                routing_core: lay.core,
                len_p_in,
                len_n_in,
                z_odd_ohm,
                tau_p_s,
                tau_n_s,
                k_skin_db_per_in: spec.k_skin_db_per_in * scale,
                k_diel_db_per_in: spec.k_diel_db_per_in * scale,
                via_c_near_pf: spec.via_c_near_pf,
                via_c_far_pf: spec.via_c_far_pf,
                loss_imbalance,
                designed_skew_ps: lay.designed_skew_ps,
                random_skew_ps,
            });
        }
    }
    Ok(GroundTruth { spec: spec.clone(), board_offsets, core_offsets, nets })
}

/// Single-ended line with via capacitance at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineParams {
    pub z_ohm: f64,
    pub delay_s: f64,
    pub length_in: f64,
    pub k_skin_db_per_in: f64,
    pub k_diel_db_per_in: f64,
    pub via_c_near_f: f64,
    pub via_c_far_f: f64,
}

impl LineParams {
    pub fn abcd(&self, f_hz: f64) -> Abcd {
        let w = 2.0 * PI * f_hz;
        let alpha_np = loss_db_per_in(self.k_skin_db_per_in, self.k_diel_db_per_in, f_hz) * self.length_in * NP_PER_DB;
        let gamma_len = Complex64::new(alpha_np, w * self.delay_s);
        let near = Abcd::shunt_admittance(Complex64::new(0.0, w * self.via_c_near_f));
        let far = Abcd::shunt_admittance(Complex64::new(0.0, w * self.via_c_far_f));
        near.then(&Abcd::line(Complex64::new(self.z_ohm, 0.0), gamma_len)).then(&far)
    }
}

/// Four-port data of two uncoupled lines in the default port order
/// (P near, P far, N near, N far).
pub fn pair_network(p: &LineParams, n: &LineParams, freqs_hz: &[f64], z_ref_ohm: f64) -> NetworkData {
    let zero = Complex64::new(0.0, 0.0);
    let s: Vec<Matrix4> = freqs_hz
        .iter()
        .map(|&f| {
            let sp = p.abcd(f).to_s(z_ref_ohm);
            let sn = n.abcd(f).to_s(z_ref_ohm);
            let mut m = [[zero; 4]; 4];
            for i in 0..2 {
                for j in 0..2 {
                    m[i][j] = sp[i][j];
                    m[2 + i][2 + j] = sn[i][j];
                }
            }
            m
        })
        .collect();
    NetworkData::new(freqs_hz.to_vec(), s, z_ref_ohm).expect("valid grid")
}

/// Four-port data of one net from its true parameters.
pub fn net_model(t: &NetTruth, freqs_hz: &[f64], z_ref_ohm: f64) -> NetworkData {
    let line = |len: f64, tau: f64, share: f64| LineParams {
        z_ohm: t.z_odd_ohm,
        delay_s: tau,
        length_in: len,
        k_skin_db_per_in: t.k_skin_db_per_in * share,
        k_diel_db_per_in: t.k_diel_db_per_in * share,
        via_c_near_f: t.via_c_near_pf * 1e-12,
        via_c_far_f: t.via_c_far_pf * 1e-12,
    };
    pair_network(
        &line(t.len_p_in, t.tau_p_s, 1.0 + 0.5 * t.loss_imbalance),
        &line(t.len_n_in, t.tau_n_s, 1.0 - 0.5 * t.loss_imbalance),
        freqs_hz,
        z_ref_ohm,
    )
}
