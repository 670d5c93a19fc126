//! Run configuration, read from TOML and patched by `--set key=value`.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use dnp_core::liouville::{HfiCoupling, LevelScheme, NvModel, NvRates, PumpConfig};
use dnp_core::multispin::SpectatorAverage;
use dnp_core::physmodel::{
    import_lattice_json, sample_lattice, HfiTensor, LatticeParams, MagneticField, NucleusSite,
    PhysConstants, Species,
};
use dnp_core::rates::RateOptions;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelConfig,
    pub field: FieldGrid,
    #[serde(default)]
    pub nuclei: NucleiConfig,
    /// Primary method; `methods` takes precedence where a command accepts several.
    pub method: Option<Method>,
    #[serde(default)]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub multispin: MultispinConfig,
    pub map: Option<MapConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lindblad,
    Resolvent,
    Analytic,
    Golden,
    Meanfield,
    ExactJoint,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Lindblad => "lindblad",
            Method::Resolvent => "resolvent",
            Method::Analytic => "analytic",
            Method::Golden => "golden",
            Method::Meanfield => "meanfield",
            Method::ExactJoint => "exact_joint",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Secular for five levels, full for seven.
    #[default]
    Auto,
    Full,
    Secular,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateOverrides {
    pub orbital_dephasing_mhz: Option<f64>,
    pub radiative_mhz: Option<f64>,
    pub isc_mhz: Option<f64>,
    pub singlet_mhz: Option<f64>,
    pub leak_0e_mhz: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_levels")]
    pub levels: LevelScheme,
    /// Pump rate R; mutually exclusive with `omega_r_mhz`.
    pub pump_rate_mhz: Option<f64>,
    pub omega_r_mhz: Option<f64>,
    #[serde(default)]
    pub laser_detuning_mhz: f64,
    pub gamma_phi_mhz: Option<f64>,
    #[serde(default = "default_gamma_dep")]
    pub gamma_dep_per_s: f64,
    #[serde(default)]
    pub include_excited_hfi: bool,
    #[serde(default)]
    pub coupling: Coupling,
    #[serde(default)]
    pub detuning_shift_mhz: f64,
    #[serde(default)]
    pub rates: RateOverrides,
}

fn default_levels() -> LevelScheme {
    LevelScheme::Seven
}

fn default_gamma_dep() -> f64 {
    1.0
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            levels: default_levels(),
            pump_rate_mhz: None,
            omega_r_mhz: None,
            laser_detuning_mhz: 0.0,
            gamma_phi_mhz: None,
            gamma_dep_per_s: default_gamma_dep(),
            include_excited_hfi: false,
            coupling: Coupling::Auto,
            detuning_shift_mhz: 0.0,
            rates: RateOverrides::default(),
        }
    }
}

const DEFAULT_PUMP_RATE: f64 = 0.4;

impl ModelConfig {
    pub fn rates(&self) -> Result<NvRates, CliError> {
        let d = NvRates::default();
        let o = &self.rates;
        let rates = NvRates {
            orbital_dephasing: o.orbital_dephasing_mhz.unwrap_or(d.orbital_dephasing),
            radiative: o.radiative_mhz.unwrap_or(d.radiative),
            isc: o.isc_mhz.unwrap_or(d.isc),
            singlet: o.singlet_mhz.unwrap_or(d.singlet),
            ground_dephasing: self.gamma_phi_mhz.unwrap_or(d.ground_dephasing),
            leak_0e: o.leak_0e_mhz.unwrap_or(d.leak_0e),
        };
        rates
            .validate()
            .map_err(|e| CliError::usage(format!("model.rates: {e}")))?;
        Ok(rates)
    }

    /// Model at `b_mt` with pump rate `pump_rate` overriding the configured one.
    pub fn build(&self, b_mt: f64, pump_rate: Option<f64>) -> Result<NvModel, CliError> {
        let rates = self.rates()?;
        let pump = match (pump_rate.or(self.pump_rate_mhz), self.omega_r_mhz) {
            (Some(_), Some(_)) if pump_rate.is_none() => {
                return Err(CliError::usage(
                    "model: set either pump_rate_mhz or omega_r_mhz, not both",
                ))
            }
            (Some(r), _) => PumpConfig::from_rate(r, self.laser_detuning_mhz, &rates),
            (None, Some(w)) => PumpConfig::from_rabi(w, self.laser_detuning_mhz, &rates),
            (None, None) => {
                PumpConfig::from_rate(DEFAULT_PUMP_RATE, self.laser_detuning_mhz, &rates)
            }
        }
        .map_err(|e| CliError::usage(format!("model: {e}")))?;
        if !self.detuning_shift_mhz.is_finite() {
            return Err(CliError::usage("model.detuning_shift_mhz must be finite"));
        }
        if !(self.gamma_dep_per_s >= 0.0 && self.gamma_dep_per_s.is_finite()) {
            return Err(CliError::usage(
                "model.gamma_dep_per_s must be finite and ≥ 0",
            ));
        }
        Ok(NvModel {
            levels: self.levels,
            rates,
            pump,
            field: MagneticField::from_millitesla(b_mt)
                .map_err(|e| CliError::usage(format!("field: {e}")))?,
            consts: PhysConstants::default(),
            detuning_shift: self.detuning_shift_mhz,
        })
    }

    pub fn rate_options(&self) -> RateOptions {
        let coupling = match self.coupling {
            Coupling::Auto => RateOptions::for_levels(self.levels, false).coupling,
            Coupling::Full => HfiCoupling::Full,
            Coupling::Secular => HfiCoupling::Secular,
        };
        RateOptions {
            coupling,
            include_excited_hfi: self.include_excited_hfi,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldGrid {
    pub start_mt: f64,
    pub end_mt: Option<f64>,
    #[serde(default = "one")]
    pub points: usize,
}

fn one() -> usize {
    1
}

impl FieldGrid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let start = self.start_mt;
        let end = self.end_mt.unwrap_or(start);
        if !(start.is_finite() && end.is_finite()) {
            return Err(CliError::usage("field.start_mt/end_mt must be finite"));
        }
        if self.points == 0 {
            return Err(CliError::usage("field.points must be at least 1"));
        }
        if end < start {
            return Err(CliError::usage(format!(
                "field: end_mt {end} is below start_mt {start}"
            )));
        }
        if self.points > 1 && end == start {
            return Err(CliError::usage(
                "field: several points need end_mt > start_mt",
            ));
        }
        if self.points == 1 {
            return Ok(vec![start]);
        }
        let n = self.points - 1;
        Ok((0..=n)
            .map(|k| start + (end - start) * k as f64 / n as f64)
            .collect())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitSite {
    /// Å, N-V axis along +z.
    pub position: [f64; 3],
    /// MHz; the point-dipole tensor when absent.
    pub ground: Option<[[f64; 3]; 3]>,
    pub excited: Option<[[f64; 3]; 3]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum NucleiConfig {
    FirstShell {
        /// Divides the transverse ground HFI; A_xz is dropped when η ≠ 1.
        #[serde(default = "unit")]
        eta: f64,
    },
    Lattice {
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_r_min")]
        r_min: f64,
        #[serde(default = "default_r_max")]
        r_max: f64,
        #[serde(default = "default_abundance")]
        abundance: f64,
    },
    /// A lattice written by `dnp lattice`.
    File {
        path: PathBuf,
    },
    Explicit {
        sites: Vec<ExplicitSite>,
    },
}

fn unit() -> f64 {
    1.0
}
fn default_r_min() -> f64 {
    LatticeParams::default().r_min
}
fn default_r_max() -> f64 {
    LatticeParams::default().r_max
}
fn default_abundance() -> f64 {
    LatticeParams::default().abundance
}

impl Default for NucleiConfig {
    fn default() -> Self {
        NucleiConfig::FirstShell { eta: 1.0 }
    }
}

impl NucleiConfig {
    pub fn sites(&self) -> Result<Vec<NucleusSite>, CliError> {
        let k = PhysConstants::default();
        match self {
            NucleiConfig::FirstShell { eta } => {
                if !(*eta > 0.0 && eta.is_finite()) {
                    return Err(CliError::usage(format!(
                        "nuclei.eta must be positive, got {eta}"
                    )));
                }
                Ok(vec![
                    NucleusSite::first_shell(&k).with_scaled_transverse(*eta)
                ])
            }
            NucleiConfig::Lattice {
                seed,
                r_min,
                r_max,
                abundance,
            } => sample_lattice(
                &LatticeParams {
                    seed: *seed,
                    r_min: *r_min,
                    r_max: *r_max,
                    abundance: *abundance,
                },
                &k,
            )
            .map_err(|e| CliError::usage(format!("nuclei: {e}"))),
            NucleiConfig::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::io(format!("nuclei.path {}: {e}", path.display())))?;
                import_lattice_json(&text, &k)
                    .map_err(|e| CliError::usage(format!("nuclei.path: {e}")))
            }
            NucleiConfig::Explicit { sites } => sites
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let mut site = NucleusSite::dipolar(s.position, &k)
                        .map_err(|e| CliError::usage(format!("nuclei.sites[{i}]: {e}")))?;
                    site.species = Species::C13;
                    if let Some(a) = s.ground {
                        site.ground = HfiTensor::new(a);
                    }
                    site.excited = s.excited.map(HfiTensor::new);
                    Ok(site)
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    #[serde(default = "default_t_max")]
    pub t_max_us: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Start polarization for the rate-equation trajectory.
    #[serde(default)]
    pub p0: f64,
}

fn default_t_max() -> f64 {
    10.0
}
fn default_steps() -> usize {
    200
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            t_max_us: default_t_max(),
            steps: default_steps(),
            p0: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultispinConfig {
    /// One sweep per pump rate; the model's rate when empty.
    #[serde(default)]
    pub pump_rates_mhz: Vec<f64>,
    /// Fields at which the per-site report is written.
    #[serde(default)]
    pub report_fields_mt: Vec<f64>,
    #[serde(default = "default_bin_width")]
    pub bin_width_angstrom: f64,
    #[serde(default)]
    pub spectators: SpectatorAverage,
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Where the ensemble JSON goes; `<out>.json` when absent.
    pub json_out: Option<PathBuf>,
}

fn default_bin_width() -> f64 {
    5.0
}
fn default_damping() -> f64 {
    0.5
}
fn default_max_iterations() -> usize {
    10_000
}
fn default_tolerance() -> f64 {
    1e-6
}

impl Default for MultispinConfig {
    fn default() -> Self {
        Self {
            pump_rates_mhz: vec![],
            report_fields_mt: vec![],
            bin_width_angstrom: default_bin_width(),
            spectators: SpectatorAverage::Auto,
            damping: default_damping(),
            max_iterations: default_max_iterations(),
            tolerance: default_tolerance(),
            json_out: None,
        }
    }
}

/// Field-angle map for a dipolar site at fixed distance.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub radius_angstrom: f64,
    #[serde(default)]
    pub theta_start_deg: f64,
    #[serde(default = "default_theta_end")]
    pub theta_end_deg: f64,
    #[serde(default = "default_theta_points")]
    pub theta_points: usize,
    #[serde(default)]
    pub phi_deg: f64,
}

fn default_theta_end() -> f64 {
    180.0
}
fn default_theta_points() -> usize {
    37
}

impl MapConfig {
    pub fn thetas(&self) -> Result<Vec<f64>, CliError> {
        FieldGrid {
            start_mt: self.theta_start_deg,
            end_mt: Some(self.theta_end_deg),
            points: self.theta_points,
        }
        .values()
        .map_err(|e| {
            CliError::usage(
                e.message()
                    .replace("field", "map.theta")
                    .replace("_mt", "_deg"),
            )
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

/// Sets `path.to.key` in a TOML tree; the value is parsed as TOML and taken
/// as a bare string when that fails.
fn apply_override(root: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::usage(format!("--set expects key=value, got `{assignment}`")))?;
    let key = key.trim();
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts
        .pop()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| CliError::usage(format!("--set: empty key in `{assignment}`")))?;
    let mut table = root;
    for p in parts {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::usage(format!("--set: `{p}` in `{key}` is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut tree: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::usage(format!("config: {e}")))?;
    for o in overrides {
        apply_override(&mut tree, o)?;
    }
    serde_path_to_error::deserialize(toml::Value::Table(tree)).map_err(|e| {
        let path = e.path().to_string();
        CliError::usage(format!("config field `{path}`: {}", e.into_inner()))
    })
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text, overrides)
}
