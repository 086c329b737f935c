//! Synthetic populations on disk: one `.s4p` per net, the manifest and the
//! ground truth.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use pwbsi_core::network::NetworkData;
use pwbsi_core::record::NetRecord;
use pwbsi_core::synth::GroundTruth;
use rayon::prelude::*;

use crate::manifest::write_manifest;
use crate::numfmt::to_canonical_json;
use crate::pipeline::{write_file, PipelineError};
use crate::touchstone::{save_touchstone, WriteOptions};

/// What was written.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSummary {
    pub boards: usize,
    pub nets: usize,
    pub files: usize,
    pub freq_points: usize,
    pub mean_length_in: f64,
}

/// Loader serving networks straight from the generator, keyed like the
/// manifest rows it produced.
pub fn truth_loader(gt: &GroundTruth) -> impl Fn(&NetRecord) -> Result<NetworkData, String> + Sync + '_ {
    let index: HashMap<(String, String), usize> =
        gt.nets.iter().enumerate().map(|(i, n)| ((n.net_name.clone(), n.board_serial.clone()), i)).collect();
    move |rec: &NetRecord| {
        index
            .get(&(rec.net_name.clone(), rec.board_serial.clone()))
            .map(|&i| gt.network(i))
            .ok_or_else(|| format!("{}/{} is not in the population", rec.board_serial, rec.net_name))
    }
}

/// Write `gt` under `dir` using `threads` workers (all cores when `None`).
pub fn write_population(gt: &GroundTruth, dir: &Path, threads: Option<usize>) -> Result<PopulationSummary, PipelineError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| PipelineError::Io { path, source }
    };
    for b in 0..gt.spec.boards {
        let d = dir.join(gt.spec.serial(b));
        fs::create_dir_all(&d).map_err(io(&d))?;
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build()?;
    let opts = WriteOptions::default();
    pool.install(|| {
        (0..gt.nets.len()).into_par_iter().try_for_each(|i| {
            let path = dir.join(gt.nets[i].s4p_path());
            save_touchstone(&gt.network(i), &path, &opts).map_err(|e| PipelineError::Io {
                path: path.display().to_string(),
                source: std::io::Error::other(e.to_string()),
            })
        })
    })?;
    let records = gt.records();
    write_file(&dir.join("manifest.csv"), &write_manifest(&records).map_err(|e| PipelineError::Io {
        path: "manifest.csv".into(),
        source: std::io::Error::other(e.to_string()),
    })?)?;
    let truth = to_canonical_json(gt).map_err(|e| PipelineError::Io { path: "ground_truth.json".into(), source: e.into() })?;
    write_file(&dir.join("ground_truth.json"), &truth)?;
    let mean_length_in = if gt.nets.is_empty() {
        0.0
    } else {
        gt.nets.iter().map(|n| n.mean_length_in()).sum::<f64>() / gt.nets.len() as f64
    };
    Ok(PopulationSummary {
        boards: gt.spec.boards,
        nets: gt.nets.len(),
        files: gt.nets.len(),
        freq_points: gt.spec.freq_points,
        mean_length_in,
    })
}
