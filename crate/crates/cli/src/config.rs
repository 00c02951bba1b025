//! Run configuration: JSON files merged with command-line overrides,
//! checked against the schema of the selected command.

use std::fmt;
use std::path::PathBuf;

use ptrmt::ensembles::{EnsembleName, EnsembleSpec, Family, SymmetryClass};
use ptrmt::pastur::ContinuationOrder;
use ptrmt::spectral::{SpacingMode, CENTRAL_WINDOW};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::ConfigError;
use crate::quantity::{MuUnit, Quantity};

pub const OUTPUT_DIR_ENV: &str = "PTRMT_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "ptrmt-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Sample,
    Transition,
    Spacing,
    Density,
    Mscaling,
    Ginibre,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Sample,
        Command::Transition,
        Command::Spacing,
        Command::Density,
        Command::Mscaling,
        Command::Ginibre,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Transition => "transition",
            Command::Spacing => "spacing",
            Command::Density => "density",
            Command::Mscaling => "mscaling",
            Command::Ginibre => "ginibre",
        }
    }

    /// Whether the command draws from one configured ensemble.
    pub fn needs_ensemble(self) -> bool {
        !matches!(self, Command::Mscaling | Command::Ginibre)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    /// Ensemble name such as `GOOE`, `GUOE'` or `CUOE`.
    pub class: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Quantity>,
    /// Unit for an untagged `mu`. Cleared by normalization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_unit: Option<MuUnit>,
}

impl EnsembleConfig {
    pub fn name(&self) -> EnsembleName {
        self.class.parse().expect("normalized config")
    }

    /// The ensemble at the configured `T` and raw `mu`.
    pub fn spec(&self) -> EnsembleSpec {
        let name = self.name();
        let base = EnsembleSpec { class: name.class, family: name.family, m: self.m, n: self.n, t: self.t, mu: 0.0 };
        let mu = self.mu.map_or(0.0, |q| q.resolve(&base));
        base.with_mu(mu)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleParams {
    #[serde(default = "one")]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionParams {
    /// Defaults to the ensemble's `T`.
    #[serde(default)]
    pub t_values: Vec<f64>,
    /// Rates in units of `mu_0`. Exclusive with `mu_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_grid: Option<Vec<f64>>,
    /// Top of a geometric grid starting at `mu_max / 100`, plus zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_max: Option<Quantity>,
    #[serde(default = "default_mu_points")]
    pub mu_points: usize,
    #[serde(default = "default_transition_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingModeConfig {
    Superposed,
    SingleSequence,
}

impl From<SpacingModeConfig> for SpacingMode {
    fn from(m: SpacingModeConfig) -> Self {
        match m {
            SpacingModeConfig::Superposed => SpacingMode::Superposed,
            SpacingModeConfig::SingleSequence => SpacingMode::SingleSequence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacingParams {
    /// Defaults to the ensemble's `T`.
    #[serde(default)]
    pub t_values: Vec<f64>,
    #[serde(default = "default_spacing_samples")]
    pub samples: usize,
    #[serde(default = "default_mode")]
    pub mode: SpacingModeConfig,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_s_max")]
    pub s_max: f64,
    /// Energy window; `null` keeps the whole spectrum.
    #[serde(default = "default_window")]
    pub window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderConfig {
    ZLast,
    LambdaLast,
}

impl From<OrderConfig> for ContinuationOrder {
    fn from(o: OrderConfig) -> Self {
        match o {
            OrderConfig::ZLast => ContinuationOrder::ZLast,
            OrderConfig::LambdaLast => ContinuationOrder::LambdaLast,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityParams {
    #[serde(default = "default_re")]
    pub re: [f64; 2],
    #[serde(default = "default_im")]
    pub im: [f64; 2],
    /// Grid points along the real and imaginary axes.
    #[serde(default = "default_resolution")]
    pub resolution: [usize; 2],
    /// Monte Carlo draws overlaid on the grid; zero skips sampling.
    #[serde(default = "default_density_samples")]
    pub samples: usize,
    #[serde(default = "default_z_step")]
    pub z_step: f64,
    #[serde(default = "default_order")]
    pub order: OrderConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MscalingParams {
    pub class: String,
    #[serde(rename = "T")]
    pub t: f64,
    pub alpha: f64,
    pub mu_over_et: f64,
    pub m_values: Vec<usize>,
    #[serde(default = "default_scaling_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GinibreParams {
    pub m_values: Vec<usize>,
    #[serde(default = "default_scaling_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<TransitionParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<SpacingParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mscaling: Option<MscalingParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ginibre: Option<GinibreParams>,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; zero uses every available core.
    #[serde(default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}
fn default_seed() -> u64 {
    1
}
fn default_mu_points() -> usize {
    25
}
fn default_transition_samples() -> usize {
    200
}
fn default_spacing_samples() -> usize {
    500
}
fn default_mode() -> SpacingModeConfig {
    SpacingModeConfig::Superposed
}
fn default_bins() -> usize {
    40
}
fn default_s_max() -> f64 {
    4.0
}
fn default_window() -> Option<[f64; 2]> {
    Some([CENTRAL_WINDOW.0, CENTRAL_WINDOW.1])
}
fn default_re() -> [f64; 2] {
    [-3.0, 3.0]
}
fn default_im() -> [f64; 2] {
    [-1.0, 1.0]
}
fn default_resolution() -> [usize; 2] {
    [121, 81]
}
fn default_density_samples() -> usize {
    20
}
fn default_z_step() -> f64 {
    0.05
}
fn default_order() -> OrderConfig {
    OrderConfig::ZLast
}
fn default_scaling_samples() -> usize {
    100
}

/// Section key holding the parameters of `command`.
pub fn section_key(command: Command) -> &'static str {
    command.name()
}

impl RunConfig {
    /// Parse a JSON document and normalize it.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::new("", format!("invalid JSON: {e}")))?;
        Self::from_value(value)
    }

    /// Deserialize a JSON value, reporting schema errors with their field
    /// path, then normalize.
    pub fn from_value(mut value: Value) -> Result<Self, ConfigError> {
        fill_command_section(&mut value);
        let config: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::new(if path == "." { "" } else { &path }, e.into_inner().to_string())
        })?;
        config.normalize()
    }

    /// Serialized form; parsing it back gives the same config.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Output directory after the environment fallback.
    pub fn resolved_output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    pub fn ensemble_spec(&self) -> Option<EnsembleSpec> {
        self.ensemble.as_ref().map(EnsembleConfig::spec)
    }

    /// Check the per-command schema and put every field in canonical form.
    pub fn normalize(mut self) -> Result<Self, ConfigError> {
        let command = self.command;
        let present = [
            (Command::Sample, self.sample.is_some()),
            (Command::Transition, self.transition.is_some()),
            (Command::Spacing, self.spacing.is_some()),
            (Command::Density, self.density.is_some()),
            (Command::Mscaling, self.mscaling.is_some()),
            (Command::Ginibre, self.ginibre.is_some()),
        ];
        for (c, is_present) in present {
            if is_present && c != command {
                return Err(ConfigError::new(c.name(), format!("section not allowed for command {command}")));
            }
        }
        match (&mut self.ensemble, command.needs_ensemble()) {
            (Some(_), false) => {
                return Err(ConfigError::new("ensemble", format!("section not allowed for command {command}")))
            }
            (None, true) => return Err(ConfigError::new("ensemble", "missing section")),
            (Some(e), true) => normalize_ensemble(e)?,
            (None, false) => {}
        }
        if self.workers > 4096 {
            return Err(ConfigError::new("workers", "at most 4096 workers"));
        }
        let declared = self.ensemble.as_ref().and_then(|e| e.mu_unit);
        let ensemble = self.ensemble.clone();
        let missing = || ConfigError::new(command.name(), "missing section");
        match command {
            Command::Sample => {
                let p = self.sample.as_ref().ok_or_else(missing)?;
                positive("sample.samples", p.samples)?;
            }
            Command::Transition => {
                let spec = ensemble.as_ref().map(EnsembleConfig::spec).ok_or_else(missing)?;
                let p = self.transition.as_mut().ok_or_else(missing)?;
                if p.t_values.is_empty() {
                    p.t_values.push(spec.t);
                }
                check_t_values("transition.t_values", &p.t_values)?;
                positive("transition.samples", p.samples)?;
                if p.mu_grid.is_some() && p.mu_max.is_some() {
                    return Err(ConfigError::new("transition", "mu_grid and mu_max are mutually exclusive"));
                }
                if let Some(grid) = &p.mu_grid {
                    if grid.is_empty() || grid.iter().any(|x| !x.is_finite() || *x < 0.0) {
                        return Err(ConfigError::new("transition.mu_grid", "needs finite nonnegative entries"));
                    }
                    if grid.windows(2).any(|w| w[1] <= w[0]) {
                        return Err(ConfigError::new("transition.mu_grid", "must be strictly increasing"));
                    }
                }
                if let Some(q) = p.mu_max {
                    let q = q.with_declared(declared).map_err(|e| ConfigError::new("transition.mu_max", e.to_string()))?;
                    if !(q.value > 0.0) {
                        return Err(ConfigError::new("transition.mu_max", "must be positive"));
                    }
                    p.mu_max = Some(q);
                    if p.mu_points < 2 {
                        return Err(ConfigError::new("transition.mu_points", "needs at least 2 points"));
                    }
                }
                if spec.mu != 0.0 {
                    return Err(ConfigError::new("ensemble.mu", "transition sweeps mu itself; leave it unset"));
                }
            }
            Command::Spacing => {
                let spec = ensemble.as_ref().map(EnsembleConfig::spec).ok_or_else(missing)?;
                let p = self.spacing.as_mut().ok_or_else(missing)?;
                if p.t_values.is_empty() {
                    p.t_values.push(spec.t);
                }
                check_t_values("spacing.t_values", &p.t_values)?;
                positive("spacing.samples", p.samples)?;
                positive("spacing.bins", p.bins)?;
                if !(p.s_max > 0.0) || !p.s_max.is_finite() {
                    return Err(ConfigError::new("spacing.s_max", "must be finite and positive"));
                }
                if let Some([lo, hi]) = p.window {
                    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                        return Err(ConfigError::new("spacing.window", "needs lo < hi"));
                    }
                }
                if spec.family != Family::Gaussian {
                    return Err(ConfigError::new("ensemble.class", "spacing statistics use the Gaussian family"));
                }
            }
            Command::Density => {
                let spec = ensemble.as_ref().map(EnsembleConfig::spec).ok_or_else(missing)?;
                let p = self.density.as_ref().ok_or_else(missing)?;
                check_interval("density.re", p.re)?;
                check_interval("density.im", p.im)?;
                if p.resolution.iter().any(|&k| k < 2 || k > 4001) {
                    return Err(ConfigError::new("density.resolution", "each axis needs 2..=4001 points"));
                }
                if !(p.z_step > 0.0) || !p.z_step.is_finite() {
                    return Err(ConfigError::new("density.z_step", "must be finite and positive"));
                }
                if spec.family != Family::Gaussian {
                    return Err(ConfigError::new("ensemble.class", "mean density uses the Gaussian family"));
                }
            }
            Command::Mscaling => {
                let p = self.mscaling.as_mut().ok_or_else(missing)?;
                let name = parse_name("mscaling.class", &p.class)?;
                if name.family != Family::Gaussian {
                    return Err(ConfigError::new("mscaling.class", "M scaling uses the Gaussian family"));
                }
                p.class = name.to_string();
                check_t("mscaling.T", p.t)?;
                if !(p.alpha > 0.0 && p.alpha <= 1.0) {
                    return Err(ConfigError::new("mscaling.alpha", "alpha must lie in (0,1]"));
                }
                if !(p.mu_over_et >= 0.0) || !p.mu_over_et.is_finite() {
                    return Err(ConfigError::new("mscaling.mu_over_et", "must be finite and nonnegative"));
                }
                check_sizes("mscaling.m_values", &p.m_values, 2)?;
                positive("mscaling.samples", p.samples)?;
                for &m in &p.m_values {
                    let n = (p.alpha * m as f64).round() as usize;
                    EnsembleSpec::gaussian(name.class, m, n, p.t, 0.0)
                        .map_err(|e| ConfigError::new("mscaling.m_values", format!("M = {m}: {e}")))?;
                }
            }
            Command::Ginibre => {
                let p = self.ginibre.as_ref().ok_or_else(missing)?;
                check_sizes("ginibre.m_values", &p.m_values, 2)?;
                positive("ginibre.samples", p.samples)?;
            }
        }
        if let Some(e) = &mut self.ensemble {
            e.mu_unit = None;
        }
        Ok(self)
    }
}

/// Insert an empty section for the selected command so its defaults apply.
fn fill_command_section(value: &mut Value) {
    let Some(obj) = value.as_object_mut() else { return };
    let Some(cmd) = obj.get("command").and_then(Value::as_str).map(str::to_string) else { return };
    if Command::ALL.iter().any(|c| c.name() == cmd) {
        obj.entry(cmd).or_insert_with(|| Value::Object(Map::new()));
    }
}

fn parse_name(path: &str, s: &str) -> Result<EnsembleName, ConfigError> {
    s.parse().map_err(|e: ptrmt::Error| ConfigError::new(path, e.to_string()))
}

fn normalize_ensemble(e: &mut EnsembleConfig) -> Result<(), ConfigError> {
    let name = parse_name("ensemble.class", &e.class)?;
    e.class = name.to_string();
    check_t("ensemble.T", e.t)?;
    if e.m == 0 {
        return Err(ConfigError::new("ensemble.M", "M must be positive"));
    }
    if e.m > 20_000 {
        return Err(ConfigError::new("ensemble.M", "M above 20000 is not supported"));
    }
    if e.n > e.m {
        return Err(ConfigError::new("ensemble.N", format!("N = {} exceeds M = {}", e.n, e.m)));
    }
    if let Some(q) = e.mu {
        e.mu = Some(q.with_declared(e.mu_unit).map_err(|err| ConfigError::new("ensemble.mu", err.to_string()))?);
    }
    e.spec().validate().map_err(|err| ConfigError::new("ensemble", err.to_string()))?;
    Ok(())
}

fn check_t(path: &str, t: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(ConfigError::new(path, format!("T out of [0,1] (got {t})")))
    }
}

fn check_t_values(path: &str, ts: &[f64]) -> Result<(), ConfigError> {
    if ts.is_empty() {
        return Err(ConfigError::new(path, "needs at least one T"));
    }
    ts.iter().enumerate().try_for_each(|(k, &t)| check_t(&format!("{path}[{k}]"), t))
}

fn check_interval(path: &str, [lo, hi]: [f64; 2]) -> Result<(), ConfigError> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        Err(ConfigError::new(path, "needs finite lo < hi"))
    }
}

fn check_sizes(path: &str, ms: &[usize], min: usize) -> Result<(), ConfigError> {
    if ms.len() < 4 {
        return Err(ConfigError::new(path, "the log-log fit needs at least 4 sizes"));
    }
    if ms.iter().any(|&m| m < min || m > 20_000) {
        return Err(ConfigError::new(path, format!("sizes must lie in {min}..=20000")));
    }
    if ms.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConfigError::new(path, "sizes must be strictly increasing"));
    }
    Ok(())
}

fn positive(path: &str, k: usize) -> Result<(), ConfigError> {
    if k == 0 {
        Err(ConfigError::new(path, "must be at least 1"))
    } else {
        Ok(())
    }
}

/// The symmetry class named in a normalized config.
pub fn class_of(config: &RunConfig) -> Option<SymmetryClass> {
    match (&config.ensemble, &config.mscaling) {
        (Some(e), _) => Some(e.name().class),
        (None, Some(m)) => m.class.parse::<EnsembleName>().ok().map(|n| n.class),
        _ => None,
    }
}
