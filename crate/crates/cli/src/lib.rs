//! Command-line front end: configuration, run manifests and result files.
pub mod args;
pub mod config;
pub mod error;
pub mod manifest;
pub mod quantity;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;
use serde_json::json;

use crate::args::{load_document, Cli, ReplayArgs, RunArgs, Sub};
use crate::config::Command;
use crate::error::CliError;
use crate::manifest::{RunManifest, MANIFEST_FILE};

pub use args::parse_config_args;
pub use config::RunConfig;
pub use error::ConfigError;

/// Run the tool on `argv` and return the process exit status.
pub fn main_with<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Sub::Scales(args) => scales(args),
        Sub::Replay(args) => replay(args),
        sub => {
            let (command, args) = sub.command().expect("run subcommand");
            let config = args.to_config(command)?;
            execute_and_report(&config)
        }
    }
}

fn execute_and_report(config: &RunConfig) -> Result<(), CliError> {
    let (manifest, output) = run::run_config(config)?;
    for line in &output.summary {
        println!("{line}");
    }
    let dir = config.resolved_output_dir();
    println!("wrote {} files and {}", manifest.outputs.len(), dir.join(MANIFEST_FILE).display());
    if output.failures.is_empty() {
        Ok(())
    } else {
        for f in &output.failures {
            eprintln!("failed: {f}");
        }
        Err(CliError::Partial { failed: output.failures.len(), total: output.total_cells })
    }
}

/// Text report of the scales of the configured ensemble.
pub fn scales_report(config: &RunConfig) -> Option<String> {
    let spec = config.ensemble_spec()?;
    let s = spec.scales();
    let mu0 = ptrmt::experiments::mu_zero(&spec);
    Some(format!(
        "{name}  M={m} N={n} T={t} alpha={alpha}\n\
         Delta = {delta}\nE_T   = {et}\nmu_O  = {muo}\nmu_A  = {mua}\nT_O   = {to}\nT_A   = {ta}\nmu_0  = {mu0} ({name})\n",
        name = spec.ensemble_name(),
        m = spec.m,
        n = spec.n,
        t = spec.t,
        alpha = s.alpha,
        delta = s.delta,
        et = s.e_thouless,
        muo = s.mu_o,
        mua = s.mu_a,
        to = s.t_o,
        ta = s.t_a,
    ))
}

fn scales(args: &RunArgs) -> Result<(), CliError> {
    let mut root = json!({});
    if let Some(p) = &args.config {
        if let Some(e) = load_document(p)?.get("ensemble") {
            root["ensemble"] = e.clone();
        }
    }
    let mut args = args.clone();
    args.config = None;
    args.apply(Command::Sample, &mut root)?;
    let config = RunConfig::from_value(root)?;
    print!("{}", scales_report(&config).expect("sample config has an ensemble"));
    Ok(())
}

fn replay(args: &ReplayArgs) -> Result<(), CliError> {
    let manifest = RunManifest::read(&args.manifest)?;
    let mut config = manifest.config.clone().normalize()?;
    let base = args.manifest.parent().map(PathBuf::from).unwrap_or_default();
    let dir = args.output_dir.clone().unwrap_or_else(|| base.join("replay"));
    config.output_dir = Some(dir.clone());
    if let Some(w) = args.workers {
        config.workers = w;
    }
    let result = execute_and_report(&config);
    if matches!(result, Err(ref e) if !matches!(e, CliError::Partial { .. })) {
        return result;
    }
    if !args.no_verify {
        let bad = manifest.verify(&dir);
        if !bad.is_empty() {
            return Err(CliError::ReplayMismatch(bad.join(", ")));
        }
        println!("replay matches {} recorded files", manifest.outputs.len());
    }
    result
}
