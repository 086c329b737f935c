//! The `pwbsi` command line.
//!
//! Exit status: 0 on success, 1 for usage and input errors, 2 when more
//! than 1% of the nets in an analysis fail.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pwbsi_core::linksim::{extract_metrics, synthesize_eye};
use pwbsi_core::network::{cascade_chain, to_mixed_mode};
use pwbsi_core::record::NetRecord;
use pwbsi_core::stats::sample_size_experiment;
use pwbsi_core::synth::{generate_population, PopulationSpec};
use pwbsi_core::tdr;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

use crate::config::{read_tester_sigma, RunConfig};
use crate::manifest::load_manifest_file;
use crate::numfmt::canonical_json;
use crate::pipeline::{analyze, file_loader, write_run};
use crate::report::{
    anova_table, anova_table_csv, anova_table_json, global_summary, global_summary_csv, global_summary_json, same_net_variation,
    same_net_variation_csv, same_net_variation_json, sample_size_csv, sample_size_json,
};
use crate::svg;
use crate::table::{OutcomeTable, Quantity};
use crate::touchstone::read_touchstone;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Default sample sizes and trial count of the sample-size experiment.
pub const DEFAULT_SIZES: [usize; 6] = [10, 30, 100, 300, 1000, 2000];
pub const DEFAULT_TRIALS: usize = 500;
/// Size of the Gaussian pool drawn when no outcome column is given.
pub const DEFAULT_POOL: usize = 2077;
const HISTOGRAM_BINS: usize = 40;

#[derive(Debug, Parser)]
#[command(name = "pwbsi", version, about = "Signal-integrity variability analysis of differential PWB nets")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand; they override the config file.
#[derive(Debug, Args, Default)]
pub struct Common {
    /// JSON or TOML run configuration; flags win over its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Manifest CSV of the nets to analyze.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Data rate of the eye simulation, Gb/s [default: 2.5].
    #[arg(long = "rate-gbps", global = true)]
    pub rate_gbps: Option<f64>,
    /// Multiple of σ for the variation extrapolation [default: 5].
    #[arg(long = "sigma-k", global = true)]
    pub sigma_k: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads [default: all cores].
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Sample frequencies in GHz for skew, loss and mode conversion, e.g. `1,2,4`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub freqs: Option<Vec<f64>>,
    /// Driver waveform CSV (`# ui=<s>` header, then time_s,volts).
    #[arg(long, global = true)]
    pub driver: Option<PathBuf>,
    /// Tester repeatability σ per outcome (JSON, TOML or CSV).
    #[arg(long = "tester-sigma", global = true)]
    pub tester_sigma: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduce every net of a manifest to its outcome row.
    Analyze(AnalyzeArgs),
    /// Summary, same-net variation and ANOVA tables plus plots.
    Report(TableArgs),
    /// Same-net variation table only.
    Snv(TableArgs),
    /// ANOVA table only.
    Anova(TableArgs),
    /// Sample size versus σ experiment.
    Samplesize(SampleSizeArgs),
    /// Generate a synthetic population on disk.
    Synth(SynthArgs),
    /// Eye diagram and TDR trace of a single net.
    Eye(EyeArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Skip the eye simulation.
    #[arg(long)]
    pub no_eye: bool,
    /// Skip the TDR impedance reading.
    #[arg(long)]
    pub no_impedance: bool,
    /// Fixed link component between driver and board (4-port file); repeatable.
    #[arg(long = "fixed-tx")]
    pub fixed_tx: Vec<PathBuf>,
    /// Fixed link component between board and receiver (4-port file); repeatable.
    #[arg(long = "fixed-rx")]
    pub fixed_rx: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Outcome table (`outcomes.json` or `outcomes.csv`, or the directory
    /// holding them) [default: `<out>/outcomes.json`].
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleSizeArgs {
    /// Outcome table providing the pool; a Gaussian pool is drawn otherwise.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Column key of the pool within the table.
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Population spec JSON [default: the calibrated default population].
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EyeArgs {
    /// The net's 4-port file.
    #[arg(long)]
    pub s4p: PathBuf,
    /// 1-based ports of P near, P far, N near, N far, e.g. `1 3 2 4`.
    #[arg(long = "port-map")]
    pub port_map: Option<String>,
    #[arg(long = "fixed-tx")]
    pub fixed_tx: Vec<PathBuf>,
    #[arg(long = "fixed-rx")]
    pub fixed_rx: Vec<PathBuf>,
}

/// Parse `args` (program name first) and run; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn settings(common: &Common, fixed_tx: Vec<PathBuf>, fixed_rx: Vec<PathBuf>, eye: Option<bool>, impedance: Option<bool>) -> Result<RunConfig> {
    let file = match &common.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let flags = RunConfig {
        manifest: common.manifest.clone(),
        out: common.out.clone(),
        skew_freqs_ghz: common.freqs.clone(),
        loss_freqs_ghz: common.freqs.clone(),
        scd21_freqs_ghz: common.freqs.clone(),
        rate_gbps: common.rate_gbps,
        driver: common.driver.clone(),
        fixed_tx,
        fixed_rx,
        sigma_k: common.sigma_k,
        seed: common.seed,
        threads: common.threads,
        tester_sigma: common.tester_sigma.clone(),
        z_ref_ohm: None,
        eye,
        impedance,
    };
    let cfg = file.overridden_by(flags);
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let out = cfg.out.clone().ok_or_else(|| anyhow!("--out is required"))?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    Ok(out)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
}

fn execute(cli: Cli) -> Result<i32> {
    let common = &cli.common;
    match cli.command {
        Command::Analyze(a) => {
            let cfg = settings(common, a.fixed_tx, a.fixed_rx, a.no_eye.then_some(false), a.no_impedance.then_some(false))?;
            cmd_analyze(&cfg)
        }
        Command::Report(t) => cmd_tables(&settings(common, vec![], vec![], None, None)?, t.table, Tables::All),
        Command::Snv(t) => cmd_tables(&settings(common, vec![], vec![], None, None)?, t.table, Tables::Snv),
        Command::Anova(t) => cmd_tables(&settings(common, vec![], vec![], None, None)?, t.table, Tables::Anova),
        Command::Samplesize(s) => cmd_samplesize(&settings(common, vec![], vec![], None, None)?, s),
        Command::Synth(s) => cmd_synth(&settings(common, vec![], vec![], None, None)?, s.spec),
        Command::Eye(e) => {
            let cfg = settings(common, e.fixed_tx.clone(), e.fixed_rx.clone(), Some(true), None)?;
            cmd_eye(&cfg, &e)
        }
    }
}

fn cmd_analyze(cfg: &RunConfig) -> Result<i32> {
    let manifest_path = cfg.manifest.clone().ok_or_else(|| anyhow!("--manifest is required"))?;
    let out = out_dir(cfg)?;
    let manifest = load_manifest_file(&manifest_path)?;
    for w in &manifest.warnings {
        log::warn!("{w}");
    }
    let analysis = cfg.analysis()?;
    let base = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let run = analyze(&manifest.records, file_loader(base, cfg.z_ref_ohm()), &analysis, cfg.threads)?;
    write_run(&out, &run)?;
    println!(
        "analyzed {} nets: {} rows, {} failed ({:.2}%)",
        run.attempted(),
        run.table.len(),
        run.failures.len(),
        100.0 * run.failure_fraction()
    );
    Ok(if run.exceeds_failure_threshold() {
        eprintln!("error: more than 1% of nets failed; see failures.csv");
        EXIT_DATA
    } else {
        EXIT_OK
    })
}

/// Read an outcome table from a JSON or CSV file, or from a directory
/// holding `outcomes.json`.
pub fn read_table(path: &Path) -> Result<OutcomeTable> {
    let file = if path.is_dir() { path.join("outcomes.json") } else { path.to_path_buf() };
    let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
    let mut table = if file.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        OutcomeTable::from_csv(&text)
    } else {
        OutcomeTable::from_json(&text)
    }
    .with_context(|| format!("reading {}", file.display()))?;
    table.sort();
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tables {
    All,
    Snv,
    Anova,
}

fn cmd_tables(cfg: &RunConfig, table: Option<PathBuf>, which: Tables) -> Result<i32> {
    let out = out_dir(cfg)?;
    let table_path = table.unwrap_or_else(|| out.join("outcomes.json"));
    let table = read_table(&table_path)?;
    let tester: BTreeMap<String, f64> = match &cfg.tester_sigma {
        Some(p) => read_tester_sigma(p)?,
        None => BTreeMap::new(),
    };
    let k = cfg.sigma_k();
    if which == Tables::All {
        let summary = global_summary(&table, &tester);
        write(&out, "figure1.csv", &global_summary_csv(&summary))?;
        write(&out, "figure1.json", &global_summary_json(&summary))?;
        write_plots(&out.join("plots"), &table)?;
    }
    if matches!(which, Tables::All | Tables::Snv) {
        let snv = same_net_variation(&table, &tester, k)?;
        write(&out, "figure2.csv", &same_net_variation_csv(&snv, k))?;
        write(&out, "figure2.json", &same_net_variation_json(&snv, k))?;
    }
    if matches!(which, Tables::All | Tables::Anova) {
        let an = anova_table(&table);
        write(&out, "figure3.csv", &anova_table_csv(&an))?;
        write(&out, "figure3.json", &anova_table_json(&an))?;
    }
    println!("reported {} nets into {}", table.len(), out.display());
    Ok(EXIT_OK)
}

/// Histograms of every outcome and scatter plots against net length.
pub fn write_plots(dir: &Path, table: &OutcomeTable) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for q in table.columns.iter().filter(|q| q.is_outcome()) {
        let values: Vec<f64> = table.column(&q.key())?.into_iter().flatten().collect();
        let bins = svg::histogram_bins(&values, HISTOGRAM_BINS);
        let key = q.key();
        write(dir, &format!("hist_{key}.csv"), &svg::histogram_csv(&bins))?;
        write(dir, &format!("hist_{key}.svg"), &svg::histogram_svg(&bins, &q.summary_label(), &q.summary_label()))?;
    }
    let first_skew = table.columns.iter().find(|q| matches!(q, Quantity::RandomSkew { .. })).copied();
    for q in [table.columns.iter().find(|q| **q == Quantity::EyeHeight).copied(), first_skew].into_iter().flatten() {
        let points: Vec<(String, f64, f64)> = table
            .present(&q.key())?
            .into_iter()
            .filter_map(|(r, y)| r.mean_length_in().map(|l| (format!("{}/{}", r.board_serial, r.net_name), l, y)))
            .collect();
        let key = q.key();
        let title = format!("{} versus Net Length", q.summary_label());
        write(dir, &format!("scatter_{key}_vs_length.csv"), &svg::scatter_csv(&points, "net_length_in", &key))?;
        write(dir, &format!("scatter_{key}_vs_length.svg"), &svg::scatter_svg(&points, &title, "Net Length (in)", &q.summary_label()))?;
    }
    Ok(())
}

/// `n` standard-normal draws from a ChaCha8 stream seeded with `seed`.
pub fn gaussian_pool(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn cmd_samplesize(cfg: &RunConfig, args: SampleSizeArgs) -> Result<i32> {
    let out = out_dir(cfg)?;
    let seed = cfg.seed.unwrap_or(1);
    let pool: Vec<f64> = match (&args.table, &args.column) {
        (Some(t), Some(c)) => read_table(t)?.column(c)?.into_iter().flatten().collect(),
        (Some(_), None) => bail!("--column is required with --table"),
        (None, _) => gaussian_pool(DEFAULT_POOL, seed),
    };
    let sizes = args.sizes.unwrap_or_else(|| DEFAULT_SIZES.to_vec());
    let trials = args.trials.unwrap_or(DEFAULT_TRIALS);
    let env = sample_size_experiment(&pool, &sizes, trials, seed)?;
    write(&out, "samplesize.csv", &sample_size_csv(&env))?;
    write(&out, "samplesize.json", &sample_size_json(&env, pool.len(), seed))?;
    write(&out, "samplesize.svg", &svg::sample_size_svg(&env))?;
    for e in &env {
        println!("n={:5}  max |σ error| {:5.1}%", e.n, 100.0 * e.max_abs_rel_error);
    }
    Ok(EXIT_OK)
}

fn cmd_synth(cfg: &RunConfig, spec_path: Option<PathBuf>) -> Result<i32> {
    let out = out_dir(cfg)?;
    let mut spec: PopulationSpec = match &spec_path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("invalid spec {}", p.display()))?
        }
        None => PopulationSpec::default(),
    };
    if let Some(seed) = cfg.seed {
        spec.seed = seed;
    }
    let gt = generate_population(&spec).map_err(|e| anyhow!("invalid spec: {e}"))?;
    let summary = crate::population::write_population(&gt, &out, cfg.threads)?;
    println!(
        "wrote {} nets on {} boards ({} frequency points each, mean length {:.2} in) to {}",
        summary.nets,
        summary.boards,
        summary.freq_points,
        summary.mean_length_in,
        out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_eye(cfg: &RunConfig, args: &EyeArgs) -> Result<i32> {
    let out = out_dir(cfg)?;
    let mut net = read_touchstone(&args.s4p)?;
    if let Some(text) = &args.port_map {
        // reuse the manifest's port-map syntax through a one-row manifest
        let csv_text = format!("{},port_map\nn,b,0,1,1,t,x,{text}\n", crate::manifest::COLUMNS.join(","));
        let rec: NetRecord = crate::manifest::load_manifest(csv_text.as_bytes())?.records.remove(0);
        net = net.remapped(&rec.port_map);
    }
    let analysis = cfg.analysis()?;
    let link = analysis.link.as_ref().expect("eye enabled");
    let mm = to_mixed_mode(&net);
    let board = mm.sdd_block();
    let chain = link.fixed.tx_side.iter().chain(std::iter::once(&board)).chain(link.fixed.rx_side.iter());
    let channel = cascade_chain(chain)?.expect("chain holds the board");
    let eye = synthesize_eye(&channel, &link.driver, &link.pattern)?;
    let m = extract_metrics(&eye)?;
    let name = args.s4p.file_stem().and_then(|s| s.to_str()).unwrap_or("net").to_string();
    write(&out, "eye.csv", &svg::eye_csv(&eye))?;
    write(&out, "eye.svg", &svg::eye_svg(&eye, &format!("Eye: {name}")))?;
    let setup = analysis.impedance.unwrap_or_default();
    let trace = tdr::step_response(&mm.sdd11(), &mm.freqs_hz, mm.z_ref_diff_ohm, &setup.tdr)?;
    write(&out, "tdr.csv", &svg::tdr_csv(&trace))?;
    let reading = tdr::impedance_reading(&trace, setup.t_start_s, setup.window_s, &setup.settle).ok();
    let metrics = json!({
        "eye_height_v": m.eye_height_v,
        "eye_width_ui": m.eye_width_ui,
        "eye_jitter_ui": m.jitter_ui,
        "eye_noise_v": m.vertical_eye_noise_v,
        "impedance_odd_ohm": reading.map(|r| r.0),
        "impedance_window_start_s": reading.map(|r| r.1),
        "impedance_window_stop_s": reading.map(|r| r.2),
        "unit_interval_s": link.driver.bit_period_s,
    });
    write(&out, "eye_metrics.json", &canonical_json(&metrics))?;
    println!(
        "eye height {:.4} V, width {:.4} UI, jitter {:.4} UI, noise {:.4} V",
        m.eye_height_v, m.eye_width_ui, m.jitter_ui, m.vertical_eye_noise_v
    );
    Ok(EXIT_OK)
}
