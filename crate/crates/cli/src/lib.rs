//! Command-line front end: configuration loading, the `simulate`, `scan`,
//! `transmission-map`, `verify` and `dump-matrix` commands and their output
//! files.

pub mod config;
pub mod dump;
pub mod error;
pub mod output;
pub mod scan;
pub mod simulate;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{LoadedConfig, Overrides, RunConfig};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "spdc", version, about = "Photon-pair generation in nonlinear layered media")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectra, pair numbers and temporal profiles of one structure.
    Simulate(Common),
    /// Pump transmittance over (l1, l2), ridges and pair numbers along them.
    Scan(Common),
    /// Pump transmittance over (l1, l2) only.
    TransmissionMap(Common),
    /// Checks against the z-grid reference and structural identities.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, hide = true)]
        corrupt_phase: bool,
    },
    /// Writes one intermediate matrix (e.g. F, GV, L3, T2,0, JF1R, SS2).
    DumpMatrix {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        name: String,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML or JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub window_lo: Option<f64>,
    #[arg(long)]
    pub window_hi: Option<f64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Structure file replacing the `[structure]` section.
    #[arg(long)]
    pub structure: Option<PathBuf>,
    /// l1 range in nm, `min,max`.
    #[arg(long, value_parser = parse_range)]
    pub l1_range: Option<[f64; 2]>,
    #[arg(long, value_parser = parse_range)]
    pub l2_range: Option<[f64; 2]>,
    /// Accepted for interface stability; every computation is deterministic.
    #[arg(long)]
    pub seedless: bool,
}

fn parse_range(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `min,max`, got `{s}`"))?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    Ok([p(a)?, p(b)?])
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            bins: self.bins,
            window_lo: self.window_lo,
            window_hi: self.window_hi,
            workers: self.workers,
            out_dir: self.out_dir.clone(),
            structure: self.structure.clone(),
            l1_range: self.l1_range,
            l2_range: self.l2_range,
        }
    }

    pub fn load(&self) -> CliResult<LoadedConfig> {
        LoadedConfig::load(&self.config, &self.overrides())
    }
}

/// Process exit status of a finished command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    VerifyFailed,
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> CliResult<T> + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(f)
}

/// Runs one command; log lines go to stderr, results to the output directory.
pub fn execute(cli: Cli) -> CliResult<Outcome> {
    match cli.command {
        Command::Simulate(c) => {
            let cfg = c.load()?;
            let summary = in_pool(cfg.config.workers, || simulate::run(&cfg, c.seedless))?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!(
                "simulate: {} channels written to {}",
                summary.channels.len(),
                cfg.config.out_dir.display()
            );
            Ok(Outcome::Ok)
        }
        Command::Scan(c) => {
            let cfg = c.load()?;
            let res = in_pool(cfg.config.workers, || scan::run_scan(&cfg, true, None))?;
            let dir = output::OutDir::create(&cfg.config.out_dir)?;
            scan::write_scan(&dir, &res)?;
            let lost = res.ridges.iter().filter(|r| r.status == scan::RidgeStatus::RidgeLost).count();
            eprintln!("scan: {} ridges ({lost} lost)", res.ridges.len());
            Ok(Outcome::Ok)
        }
        Command::TransmissionMap(c) => {
            let cfg = c.load()?;
            let map = in_pool(cfg.config.workers, || scan::transmission_map(&cfg, None))?;
            let dir = output::OutDir::create(&cfg.config.out_dir)?;
            scan::write_map(&dir, &map)?;
            if !map.flagged.is_empty() {
                eprintln!("warning: {} cells missed the energy balance", map.flagged.len());
            }
            Ok(Outcome::Ok)
        }
        Command::Verify { common, corrupt_phase } => {
            let cfg = common.load()?;
            let report = in_pool(cfg.config.workers, || verify::run(&cfg, corrupt_phase))?;
            let dir = output::OutDir::create(&cfg.config.out_dir)?;
            dir.json("verify.json", &report)?;
            for l in report.lines() {
                println!("{l}");
            }
            Ok(if report.passed { Outcome::Ok } else { Outcome::VerifyFailed })
        }
        Command::DumpMatrix { common, name } => {
            let cfg = common.load()?;
            let m = dump::named(&cfg, &name)?;
            let dir = output::OutDir::create(&cfg.config.out_dir)?;
            for f in dump::write(&dir, &m)? {
                eprintln!("wrote {}", dir.path(&f).display());
            }
            Ok(Outcome::Ok)
        }
    }
}
