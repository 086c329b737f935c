//! Run configuration: an optional JSON or TOML file, overridden by flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use pwbsi_core::linksim::{prbs7, FixedComponents};
use pwbsi_core::network::to_mixed_mode;
use pwbsi_core::outcome::{AnalysisConfig, ImpedanceSetup, LinkSetup};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::driver::{default_driver, read_driver, DriverError};
use crate::touchstone::{read_touchstone, TouchstoneError};

pub const DEFAULT_RATE_GBPS: f64 = 2.5;
pub const DEFAULT_SIGMA_K: f64 = 5.0;
pub const DEFAULT_Z_REF_OHM: f64 = 50.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {why}")]
    Parse { path: String, why: String },
    #[error("`{field}`: {why}")]
    Invalid { field: &'static str, why: String },
    #[error("`{field}`: {path} does not exist")]
    MissingPath { field: &'static str, path: String },
    #[error("driver: {0}")]
    Driver(#[from] DriverError),
    #[error("fixed component {path}: {source}")]
    Fixed { path: String, source: TouchstoneError },
}

/// Everything a run can be configured with; every field optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub skew_freqs_ghz: Option<Vec<f64>>,
    pub loss_freqs_ghz: Option<Vec<f64>>,
    pub scd21_freqs_ghz: Option<Vec<f64>>,
    pub rate_gbps: Option<f64>,
    pub driver: Option<PathBuf>,
    /// Differential blocks (4-port files) between driver and board.
    pub fixed_tx: Vec<PathBuf>,
    /// Differential blocks (4-port files) between board and receiver.
    pub fixed_rx: Vec<PathBuf>,
    pub sigma_k: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub tester_sigma: Option<PathBuf>,
    /// Reference impedance the measurement files are expected to use.
    pub z_ref_ohm: Option<f64>,
    /// Simulate eyes (default on).
    pub eye: Option<bool>,
    /// Read TDR impedance (default on).
    pub impedance: Option<bool>,
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    /// Read a configuration file; `.toml` files are TOML, anything else
    /// JSON. Relative paths inside are taken from the file's directory.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let parse_err = |why: String| ConfigError::Parse { path: path.display().to_string(), why };
        let mut cfg: RunConfig = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
            toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?
        } else {
            serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        rebase(base, &mut cfg.manifest);
        rebase(base, &mut cfg.out);
        rebase(base, &mut cfg.driver);
        rebase(base, &mut cfg.tester_sigma);
        for p in cfg.fixed_tx.iter_mut().chain(cfg.fixed_rx.iter_mut()) {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// `self` with every field set in `flags` replaced.
    pub fn overridden_by(self, flags: RunConfig) -> RunConfig {
        RunConfig {
            manifest: flags.manifest.or(self.manifest),
            out: flags.out.or(self.out),
            skew_freqs_ghz: flags.skew_freqs_ghz.or(self.skew_freqs_ghz),
            loss_freqs_ghz: flags.loss_freqs_ghz.or(self.loss_freqs_ghz),
            scd21_freqs_ghz: flags.scd21_freqs_ghz.or(self.scd21_freqs_ghz),
            rate_gbps: flags.rate_gbps.or(self.rate_gbps),
            driver: flags.driver.or(self.driver),
            fixed_tx: if flags.fixed_tx.is_empty() { self.fixed_tx } else { flags.fixed_tx },
            fixed_rx: if flags.fixed_rx.is_empty() { self.fixed_rx } else { flags.fixed_rx },
            sigma_k: flags.sigma_k.or(self.sigma_k),
            seed: flags.seed.or(self.seed),
            threads: flags.threads.or(self.threads),
            tester_sigma: flags.tester_sigma.or(self.tester_sigma),
            z_ref_ohm: flags.z_ref_ohm.or(self.z_ref_ohm),
            eye: flags.eye.or(self.eye),
            impedance: flags.impedance.or(self.impedance),
        }
    }

    pub fn rate_gbps(&self) -> f64 {
        self.rate_gbps.unwrap_or(DEFAULT_RATE_GBPS)
    }

    pub fn sigma_k(&self) -> f64 {
        self.sigma_k.unwrap_or(DEFAULT_SIGMA_K)
    }

    pub fn z_ref_ohm(&self) -> f64 {
        self.z_ref_ohm.unwrap_or(DEFAULT_Z_REF_OHM)
    }

    /// Check values and that every referenced input exists.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |field: &'static str, v: Option<f64>| match v {
            Some(x) if !(x.is_finite() && x > 0.0) => Err(ConfigError::Invalid { field, why: format!("must be positive, got {x}") }),
            _ => Ok(()),
        };
        positive("rate_gbps", self.rate_gbps)?;
        positive("sigma_k", self.sigma_k)?;
        positive("z_ref_ohm", self.z_ref_ohm)?;
        for (field, freqs) in
            [("skew_freqs_ghz", &self.skew_freqs_ghz), ("loss_freqs_ghz", &self.loss_freqs_ghz), ("scd21_freqs_ghz", &self.scd21_freqs_ghz)]
        {
            for &f in freqs.iter().flatten() {
                positive(field, Some(f))?;
            }
        }
        if self.threads == Some(0) {
            return Err(ConfigError::Invalid { field: "threads", why: "must be at least 1".into() });
        }
        let exists = |field: &'static str, p: &Path| {
            if p.exists() {
                Ok(())
            } else {
                Err(ConfigError::MissingPath { field, path: p.display().to_string() })
            }
        };
        if let Some(p) = &self.manifest {
            exists("manifest", p)?;
        }
        if let Some(p) = &self.driver {
            exists("driver", p)?;
        }
        if let Some(p) = &self.tester_sigma {
            exists("tester_sigma", p)?;
        }
        for p in &self.fixed_tx {
            exists("fixed_tx", p)?;
        }
        for p in &self.fixed_rx {
            exists("fixed_rx", p)?;
        }
        Ok(())
    }

    /// The per-net analysis this configuration asks for.
    pub fn analysis(&self) -> Result<AnalysisConfig, ConfigError> {
        let defaults = AnalysisConfig::default();
        let hz = |ghz: &Option<Vec<f64>>, default: Vec<f64>| ghz.as_ref().map_or(default, |v| v.iter().map(|g| g * 1e9).collect());
        let link = if self.eye.unwrap_or(true) {
            let driver = match &self.driver {
                Some(p) => {
                    let d = read_driver(p)?;
                    if let Some(rate) = self.rate_gbps {
                        if ((1e-9 / rate) / d.bit_period_s - 1.0).abs() > 1e-9 {
                            log::warn!("driver file unit interval {} s overrides the {} Gb/s rate", d.bit_period_s, rate);
                        }
                    }
                    d
                }
                None => default_driver(self.rate_gbps()),
            };
            let block = |p: &PathBuf| {
                read_touchstone(p)
                    .map(|n| to_mixed_mode(&n).sdd_block())
                    .map_err(|source| ConfigError::Fixed { path: p.display().to_string(), source })
            };
            let fixed = FixedComponents {
                tx_side: self.fixed_tx.iter().map(block).collect::<Result<_, _>>()?,
                rx_side: self.fixed_rx.iter().map(block).collect::<Result<_, _>>()?,
            };
            Some(LinkSetup { driver, pattern: prbs7(), fixed })
        } else {
            None
        };
        Ok(AnalysisConfig {
            skew_freqs_hz: hz(&self.skew_freqs_ghz, defaults.skew_freqs_hz),
            loss_freqs_hz: hz(&self.loss_freqs_ghz, defaults.loss_freqs_hz),
            scd21_freqs_hz: hz(&self.scd21_freqs_ghz, defaults.scd21_freqs_hz),
            impedance: self.impedance.unwrap_or(true).then(ImpedanceSetup::default),
            link,
            ..defaults
        })
    }
}

/// Tester repeatability σ per outcome, keyed by column key or summary
/// label. Read from a JSON or TOML map, or a two-column `outcome,sigma` CSV.
pub fn read_tester_sigma(path: &Path) -> Result<BTreeMap<String, f64>, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    let parse_err = |why: String| ConfigError::Parse { path: path.display().to_string(), why };
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let map: BTreeMap<String, f64> = match ext.as_str() {
        "toml" => toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?,
        "csv" => {
            let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
            let mut m = BTreeMap::new();
            for rec in rdr.records() {
                let rec = rec.map_err(|e| parse_err(e.to_string()))?;
                let (Some(k), Some(v)) = (rec.get(0), rec.get(1)) else {
                    return Err(parse_err("expected `outcome,sigma` rows".into()));
                };
                m.insert(k.to_string(), v.parse().map_err(|_| parse_err(format!("`{v}` is not a number")))?);
            }
            m
        }
        _ => serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?,
    };
    if let Some((k, v)) = map.iter().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
        return Err(parse_err(format!("tester σ for `{k}` must be non-negative, got {v}")));
    }
    Ok(map)
}
