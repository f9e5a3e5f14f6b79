//! Run configuration: one TOML (or JSON) file naming the materials file, the
//! structure, the pump, the frequency basis and per-command options.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spdc_core::{
    Channel, ContinuityMode, Dir, EmissionOptions, MaterialLibrary, Pol, PumpSpec, SourceModel, SpectralSetup,
    Structure, StructureSpec,
};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Materials file, relative to the config file.
    pub materials: PathBuf,
    pub structure: Option<StructureSpec>,
    pub pump: PumpConfig,
    #[serde(default)]
    pub basis: BasisConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    /// Output directory, relative to the working directory.
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    pub wavelength_nm: f64,
    /// Intensity-spectrum FWHM in wavelength.
    pub fwhm_nm: f64,
    /// Pulse energy per area, J/m².
    pub energy_per_area: f64,
    pub polarization: Pol,
    #[serde(default = "default_side")]
    pub side: Dir,
}

fn default_side() -> Dir {
    Dir::F
}

impl PumpConfig {
    pub fn spec(&self) -> CliResult<PumpSpec> {
        Ok(PumpSpec::from_wavelength(
            self.wavelength_nm * 1e-9,
            self.fwhm_nm * 1e-9,
            self.energy_per_area,
            self.polarization,
            self.side,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisConfig {
    pub bins: usize,
    /// Window edges as fractions of the central pump frequency.
    pub window_lo: f64,
    pub window_hi: f64,
}

impl Default for BasisConfig {
    fn default() -> Self {
        BasisConfig {
            bins: 64,
            window_lo: 0.05,
            window_hi: 0.95,
        }
    }
}

impl BasisConfig {
    pub fn setup(&self, pump: &PumpSpec) -> CliResult<SpectralSetup> {
        if !(self.window_lo > 0.0 && self.window_hi < 1.0 && self.window_lo < self.window_hi) {
            return Err(CliError::Config(format!(
                "basis: window [{}, {}] must satisfy 0 < lo < hi < 1",
                self.window_lo, self.window_hi
            )));
        }
        Ok(SpectralSetup::symmetric(pump.omega0, self.window_lo, self.window_hi, self.bins, 1.0)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelChoice {
    Exact,
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContinuityChoice {
    Full,
    ElectricOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Channels as `FF_xy` (signal/idler directions, then polarizations);
    /// every channel when empty.
    #[serde(default)]
    pub channels: Vec<String>,
    #[serde(default = "default_time_points")]
    pub time_points: usize,
    /// Every n-th time sample of the joint temporal density is written.
    #[serde(default = "default_stride")]
    pub joint_time_stride: usize,
    #[serde(default = "default_model")]
    pub model: ModelChoice,
    #[serde(default = "default_continuity")]
    pub continuity: ContinuityChoice,
}

fn default_time_points() -> usize {
    2048
}
fn default_stride() -> usize {
    8
}
fn default_model() -> ModelChoice {
    ModelChoice::Exact
}
fn default_continuity() -> ContinuityChoice {
    ContinuityChoice::Full
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            channels: Vec::new(),
            time_points: default_time_points(),
            joint_time_stride: default_stride(),
            model: default_model(),
            continuity: default_continuity(),
        }
    }
}

impl SimulateConfig {
    pub fn channels(&self) -> CliResult<Vec<Channel>> {
        if self.channels.is_empty() {
            return Ok(Channel::all().collect());
        }
        let mut out = Vec::new();
        for c in &self.channels {
            let ch: Channel = c
                .parse()
                .map_err(|e| CliError::Config(format!("simulate.channels: {e}")))?;
            if !out.contains(&ch) {
                out.push(ch);
            }
        }
        Ok(out)
    }

    pub fn emission_options(&self) -> EmissionOptions {
        EmissionOptions {
            model: match self.model {
                ModelChoice::Exact => SourceModel::Exact,
                ModelChoice::Literal => SourceModel::Literal,
            },
            continuity: match self.continuity {
                ContinuityChoice::Full => ContinuityMode::Full,
                ContinuityChoice::ElectricOnly => ContinuityMode::ElectricOnly,
            },
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    /// Thickness range of the first layer of the period, nm.
    pub l1_range_nm: [f64; 2],
    /// Thickness range of the second layer of the period, nm.
    pub l2_range_nm: [f64; 2],
    pub l1_points: usize,
    pub l2_points: usize,
    /// Follow transmission ridges and evaluate pair numbers along them.
    pub ridges: bool,
    /// Frequency bins used for the pair numbers along ridges.
    pub bins: usize,
    pub channel: String,
    /// Largest jump in l2 cells between neighbouring l1 rows of a ridge.
    pub max_jump: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            l1_range_nm: [10.0, 100.0],
            l2_range_nm: [10.0, 100.0],
            l1_points: 20,
            l2_points: 20,
            ridges: true,
            bins: 32,
            channel: "FF_xy".into(),
            max_jump: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub bins: usize,
    pub oracle_steps: usize,
    pub oracle_levels: usize,
    pub oracle_tolerance: f64,
    pub split_cases: usize,
    pub split_tolerance: f64,
    pub unitarity_tolerance: f64,
    pub parseval_tolerance: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            bins: 16,
            oracle_steps: 32,
            oracle_levels: 3,
            oracle_tolerance: 1e-4,
            split_cases: 6,
            split_tolerance: 1e-9,
            unitarity_tolerance: 1e-9,
            parseval_tolerance: 1e-8,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub bins: Option<usize>,
    pub window_lo: Option<f64>,
    pub window_hi: Option<f64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub structure: Option<PathBuf>,
    pub l1_range: Option<[f64; 2]>,
    pub l2_range: Option<[f64; 2]>,
}

/// A parsed and validated configuration with its resolved inputs.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub library: MaterialLibrary,
    /// Raw bytes of the materials file, part of the config hash.
    pub materials_text: String,
    pub materials_path: PathBuf,
}

fn parse_text<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> CliResult<T> {
    let what = path.display().to_string();
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => serde_json::from_str(text).map_err(|e| CliError::Parse {
            file: what,
            msg: format!("line {} column {}: {e}", e.line(), e.column()),
        }),
        _ => toml::from_str(text).map_err(|e| CliError::Parse {
            file: what,
            msg: e.to_string(),
        }),
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

impl LoadedConfig {
    pub fn load(path: &Path, ov: &Overrides) -> CliResult<Self> {
        let text = read(path)?;
        let mut config: RunConfig = parse_text(path, &text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(s) = &ov.structure {
            config.structure = Some(parse_text(s, &read(s)?)?);
        }
        if let Some(b) = ov.bins {
            config.basis.bins = b;
        }
        if let Some(v) = ov.window_lo {
            config.basis.window_lo = v;
        }
        if let Some(v) = ov.window_hi {
            config.basis.window_hi = v;
        }
        if let Some(w) = ov.workers {
            config.workers = w;
        }
        if let Some(d) = &ov.out_dir {
            config.out_dir = d.clone();
        }
        if let Some(r) = ov.l1_range {
            config.scan.l1_range_nm = r;
        }
        if let Some(r) = ov.l2_range {
            config.scan.l2_range_nm = r;
        }
        let materials_path = base.join(&config.materials);
        let materials_text = read(&materials_path)?;
        let library = match materials_path.extension().and_then(|e| e.to_str()) {
            Some("json") => MaterialLibrary::from_json_str(&materials_text)?,
            _ => MaterialLibrary::from_toml_str(&materials_text)?,
        };
        let loaded = LoadedConfig {
            config,
            library,
            materials_text,
            materials_path,
        };
        loaded.validate()?;
        Ok(loaded)
    }

    /// Checks everything that can be checked before a computation starts.
    pub fn validate(&self) -> CliResult<()> {
        let c = &self.config;
        let pump = c.pump.spec()?;
        c.basis.setup(&pump)?;
        if let Some(s) = &c.structure {
            s.resolve(&self.library)?;
        }
        c.simulate.channels()?;
        if c.simulate.time_points < 2 || c.simulate.joint_time_stride == 0 {
            return Err(CliError::Config(
                "simulate: time_points must be >= 2 and joint_time_stride >= 1".into(),
            ));
        }
        let sc = &c.scan;
        for (name, r) in [("l1_range_nm", sc.l1_range_nm), ("l2_range_nm", sc.l2_range_nm)] {
            if !(r[0] > 0.0 && r[1] > r[0]) {
                return Err(CliError::Config(format!("scan.{name}: need 0 < min < max, got {r:?}")));
            }
        }
        if sc.l1_points < 2 || sc.l2_points < 3 {
            return Err(CliError::Config("scan: need l1_points >= 2 and l2_points >= 3".into()));
        }
        sc.channel
            .parse::<Channel>()
            .map_err(|e| CliError::Config(format!("scan.channel: {e}")))?;
        if c.verify.oracle_levels == 0 || c.verify.bins == 0 {
            return Err(CliError::Config("verify: bins and oracle_levels must be >= 1".into()));
        }
        Ok(())
    }

    pub fn structure(&self) -> CliResult<Structure> {
        let spec = self
            .config
            .structure
            .as_ref()
            .ok_or_else(|| CliError::Config("no [structure] section and no --structure file".into()))?;
        Ok(spec.resolve(&self.library)?)
    }

    /// SHA-256 over the canonical JSON of the effective config and the
    /// materials file contents. Output location and worker count do not
    /// change results and are left out.
    pub fn hash(&self) -> String {
        let mut c = self.config.clone();
        c.out_dir = default_out_dir();
        c.workers = 0;
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&c).expect("config serializes"));
        h.update([0u8]);
        h.update(self.materials_text.as_bytes());
        let mut out = String::with_capacity(64);
        for b in h.finalize() {
            write!(out, "{b:02x}").unwrap();
        }
        out
    }
}
