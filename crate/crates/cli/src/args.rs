//! Command-line flags. Flags are applied as overrides on the JSON config
//! document before it is deserialized, so both sources share one schema.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::config::{Command, RunConfig};
use crate::error::ConfigError;

#[derive(Debug, Parser)]
#[command(name = "ptrmt", version, about = "PT-symmetric random-matrix ensembles: sampling, sweeps and mean densities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Draw spectra and write every eigenvalue with its real/pair label.
    Sample(RunArgs),
    /// Fraction of complex eigenvalues against mu, one curve per T.
    Transition(RunArgs),
    /// Nearest-neighbour spacing histograms at mu = 0.
    Spacing(RunArgs),
    /// Mean eigenvalue density from the self-consistent equation.
    Density(RunArgs),
    /// Log-log fit of the real fraction against M.
    Mscaling(RunArgs),
    /// Real eigenvalue counts of real Ginibre matrices.
    Ginibre(RunArgs),
    /// Print the characteristic scales of an ensemble.
    Scales(RunArgs),
    /// Re-run a manifest and check that the outputs match.
    Replay(ReplayArgs),
}

#[derive(Debug, Default, Clone, Args)]
pub struct RunArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Ensemble name, e.g. GOOE, GUOE', GOAE', CUOE.
    #[arg(long)]
    pub class: Option<String>,
    #[arg(long = "M")]
    pub m: Option<usize>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long = "T", allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Rate with optional unit tag: 0.2, 0.2raw, 5mu0, 2ET.
    #[arg(long)]
    pub mu: Option<String>,
    /// Unit for untagged rates: raw, mu0 or ET.
    #[arg(long = "mu-unit")]
    pub mu_unit: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "output-dir")]
    pub output_dir: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long = "t-values", value_delimiter = ',', allow_hyphen_values = true)]
    pub t_values: Option<Vec<f64>>,
    /// Rates in units of mu_0.
    #[arg(long = "mu-grid", value_delimiter = ',', allow_hyphen_values = true)]
    pub mu_grid: Option<Vec<f64>>,
    #[arg(long = "mu-max")]
    pub mu_max: Option<String>,
    #[arg(long = "mu-points")]
    pub mu_points: Option<usize>,
    /// superposed or single_sequence.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long = "s-max")]
    pub s_max: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub window: Option<Vec<f64>>,
    /// Use the whole spectrum instead of an energy window.
    #[arg(long = "no-window")]
    pub no_window: bool,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub re: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub im: Option<Vec<f64>>,
    /// Grid points as RExIM, e.g. 121x61.
    #[arg(long)]
    pub resolution: Option<String>,
    #[arg(long = "z-step")]
    pub z_step: Option<f64>,
    /// z_last or lambda_last.
    #[arg(long)]
    pub order: Option<String>,
    #[arg(long = "m-values", value_delimiter = ',')]
    pub m_values: Option<Vec<usize>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long = "mu-over-et")]
    pub mu_over_et: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Defaults to `replay/` next to the manifest.
    #[arg(long = "output-dir")]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Skip the checksum comparison.
    #[arg(long = "no-verify")]
    pub no_verify: bool,
}

fn set(root: &mut Value, path: &[&str], value: Value) {
    let mut node = root;
    for key in &path[..path.len() - 1] {
        let obj = node.as_object_mut().expect("object");
        let child = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Map::new()));
        if !child.is_object() {
            *child = Value::Object(Map::new());
        }
        node = child;
    }
    node.as_object_mut().expect("object").insert(path[path.len() - 1].to_string(), value);
}

fn pair(flag: &str, v: &[f64]) -> Result<Value, ConfigError> {
    match v {
        [a, b] => Ok(json!([a, b])),
        _ => Err(ConfigError::new(flag, "expects two comma-separated numbers")),
    }
}

/// `121x61` or `121,61`.
pub fn parse_resolution(s: &str) -> Result<[usize; 2], ConfigError> {
    let bad = || ConfigError::new("--resolution", format!("expected RExIM such as 121x61, got {s:?}"));
    let (a, b) = s.split_once(['x', 'X', ',']).ok_or_else(bad)?;
    Ok([a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?])
}

/// Read a config file as a JSON document.
pub fn load_document(path: &std::path::Path) -> Result<Value, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("--config", format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| ConfigError::new("--config", format!("{}: invalid JSON: {e}", path.display())))?;
    if !value.is_object() {
        return Err(ConfigError::new("--config", "top level must be a JSON object"));
    }
    Ok(value)
}

impl RunArgs {
    /// Apply these flags on top of `root` for `command`.
    pub fn apply(&self, command: Command, root: &mut Value) -> Result<(), ConfigError> {
        if !root.is_object() {
            return Err(ConfigError::new("", "top level must be a JSON object"));
        }
        set(root, &["command"], json!(command.name()));
        let sec = command.name();
        let reject = |flag: &str| Err(ConfigError::new(format!("--{flag}"), format!("not accepted by {command}")));

        let ens = if command == Command::Mscaling { "mscaling" } else { "ensemble" };
        if let Some(c) = &self.class {
            if command == Command::Ginibre {
                return reject("class");
            }
            set(root, &[ens, "class"], json!(c));
        }
        if let Some(t) = self.t {
            if command == Command::Ginibre {
                return reject("T");
            }
            set(root, &[ens, "T"], json!(t));
        }
        for (flag, key, v) in [("M", "M", self.m), ("N", "N", self.n)] {
            if let Some(v) = v {
                if !command.needs_ensemble() {
                    return reject(flag);
                }
                set(root, &["ensemble", key], json!(v));
            }
        }
        if let Some(mu) = &self.mu {
            if !command.needs_ensemble() {
                return reject("mu");
            }
            set(root, &["ensemble", "mu"], json!(mu));
        }
        if let Some(u) = &self.mu_unit {
            if !command.needs_ensemble() {
                return reject("mu-unit");
            }
            set(root, &["ensemble", "mu_unit"], json!(u));
        }
        if let Some(s) = self.seed {
            set(root, &["master_seed"], json!(s));
        }
        if let Some(d) = &self.output_dir {
            set(root, &["output_dir"], json!(d));
        }
        if let Some(w) = self.workers {
            set(root, &["workers"], json!(w));
        }
        if let Some(n) = self.samples {
            set(root, &[sec, "samples"], json!(n));
        }
        if let Some(ts) = &self.t_values {
            if !matches!(command, Command::Transition | Command::Spacing) {
                return reject("t-values");
            }
            set(root, &[sec, "t_values"], json!(ts));
        }
        let transition_only = [
            ("mu-grid", "mu_grid", self.mu_grid.as_ref().map(|g| json!(g))),
            ("mu-max", "mu_max", self.mu_max.as_ref().map(|q| json!(q))),
            ("mu-points", "mu_points", self.mu_points.map(|k| json!(k))),
        ];
        for (flag, key, v) in transition_only {
            if let Some(v) = v {
                if command != Command::Transition {
                    return reject(flag);
                }
                set(root, &[sec, key], v);
            }
        }
        let window = match (&self.window, self.no_window) {
            (Some(_), true) => return Err(ConfigError::new("--window", "conflicts with --no-window")),
            (Some(w), false) => Some(pair("--window", w)?),
            (None, true) => Some(Value::Null),
            (None, false) => None,
        };
        let spacing_only = [
            ("mode", "mode", self.mode.as_ref().map(|m| json!(m))),
            ("bins", "bins", self.bins.map(|k| json!(k))),
            ("s-max", "s_max", self.s_max.map(|s| json!(s))),
            ("window", "window", window),
        ];
        for (flag, key, v) in spacing_only {
            if let Some(v) = v {
                if command != Command::Spacing {
                    return reject(flag);
                }
                set(root, &[sec, key], v);
            }
        }
        let density_only = [
            ("re", "re", self.re.as_ref().map(|v| pair("--re", v)).transpose()?),
            ("im", "im", self.im.as_ref().map(|v| pair("--im", v)).transpose()?),
            ("resolution", "resolution", self.resolution.as_ref().map(|r| parse_resolution(r).map(|a| json!(a))).transpose()?),
            ("z-step", "z_step", self.z_step.map(|s| json!(s))),
            ("order", "order", self.order.as_ref().map(|o| json!(o))),
        ];
        for (flag, key, v) in density_only {
            if let Some(v) = v {
                if command != Command::Density {
                    return reject(flag);
                }
                set(root, &[sec, key], v);
            }
        }
        if let Some(ms) = &self.m_values {
            if !matches!(command, Command::Mscaling | Command::Ginibre) {
                return reject("m-values");
            }
            set(root, &[sec, "m_values"], json!(ms));
        }
        for (flag, key, v) in [("alpha", "alpha", self.alpha), ("mu-over-et", "mu_over_et", self.mu_over_et)] {
            if let Some(v) = v {
                if command != Command::Mscaling {
                    return reject(flag);
                }
                set(root, &[sec, key], json!(v));
            }
        }
        Ok(())
    }

    /// Merge the config file (if any) with the flags and normalize.
    pub fn to_config(&self, command: Command) -> Result<RunConfig, ConfigError> {
        let mut root = match &self.config {
            Some(p) => load_document(p)?,
            None => json!({}),
        };
        self.apply(command, &mut root)?;
        RunConfig::from_value(root)
    }
}

impl Sub {
    pub fn command(&self) -> Option<(Command, &RunArgs)> {
        match self {
            Sub::Sample(a) => Some((Command::Sample, a)),
            Sub::Transition(a) => Some((Command::Transition, a)),
            Sub::Spacing(a) => Some((Command::Spacing, a)),
            Sub::Density(a) => Some((Command::Density, a)),
            Sub::Mscaling(a) => Some((Command::Mscaling, a)),
            Sub::Ginibre(a) => Some((Command::Ginibre, a)),
            Sub::Scales(_) | Sub::Replay(_) => None,
        }
    }
}

/// Parse `argv` (including the program name) into a config.
pub fn parse_config_args<I, T>(argv: I) -> Result<RunConfig, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| ConfigError::new("", e.to_string()))?;
    match cli.command.command() {
        Some((c, args)) => args.to_config(c),
        None => Err(ConfigError::new("", "subcommand does not take a run config")),
    }
}
