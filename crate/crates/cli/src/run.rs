//! Executes a normalized config. Computation returns in-memory artifacts;
//! `emit` is the single writer that puts them on disk.

use std::fs;
use std::path::Path;
use std::time::Instant;

use ptrmt::ensembles::{coupling_gamma, EnsembleSpec, SymmetryClass};
use ptrmt::experiments::{
    default_mu_grid, draw_seed, ginibre_expected_real, ginibre_real_count, linear_fit, mu_zero, predicted_scaling,
    run_density_comparison, run_m_scaling, run_spacing, run_transition, PredictedScaling, GINIBRE_TAG,
};
use ptrmt::pastur::{density_grid, DensityGrid, HomotopyOptions, PasturParams, PasturVariant, Region};
use ptrmt::seed::sample_seed;
use ptrmt::spectral::{
    complex_fraction, gue_surmise_cdf, gue_surmise_pdf, ks_distance, sample_spectrum, wigner_surmise_cdf,
    wigner_surmise_pdf, SpacingConfig, CENTRAL_WINDOW,
};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::manifest::{blob_sha256, write_atomic, CellSeeds, OutputFile, RunManifest, MANIFEST_FILE};

/// One file destined for the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub seeds: Vec<CellSeeds>,
    pub failures: Vec<String>,
    pub total_cells: usize,
    /// One-line human summary for stdout.
    pub summary: Vec<String>,
}

impl RunOutput {
    fn push_csv(&mut self, name: impl Into<String>, header: &[&str], rows: Vec<Vec<String>>) {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        for r in rows {
            w.write_record(&r).expect("in-memory write");
        }
        self.artifacts.push(Artifact { name: name.into(), bytes: w.into_inner().expect("in-memory flush") });
    }

    fn push_json(&mut self, name: impl Into<String>, value: serde_json::Value) {
        let mut bytes = serde_json::to_vec_pretty(&value).expect("json");
        bytes.push(b'\n');
        self.artifacts.push(Artifact { name: name.into(), bytes });
    }

    fn push_text(&mut self, name: impl Into<String>, text: String) {
        self.artifacts.push(Artifact { name: name.into(), bytes: text.into_bytes() });
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn cell_seeds(cell: String, spec: &EnsembleSpec, n_samples: usize, master: u64) -> CellSeeds {
    CellSeeds { cell, seed_tag: spec.seed_tag(), n_samples, first_seed: draw_seed(master, 0, spec) }
}

/// Run the configured experiment on the current rayon pool.
pub fn execute(config: &RunConfig) -> Result<RunOutput, CliError> {
    match config.command {
        Command::Sample => run_sample(config),
        Command::Transition => run_transition_cmd(config),
        Command::Spacing => run_spacing_cmd(config),
        Command::Density => run_density_cmd(config),
        Command::Mscaling => run_mscaling_cmd(config),
        Command::Ginibre => run_ginibre_cmd(config),
    }
}

fn run_sample(config: &RunConfig) -> Result<RunOutput, CliError> {
    let spec = config.ensemble_spec().expect("normalized");
    let p = config.sample.as_ref().expect("normalized");
    let seed = config.master_seed;
    let draws: Vec<_> = (0..p.samples)
        .into_par_iter()
        .map(|k| {
            let s = draw_seed(seed, k, &spec);
            (s, sample_spectrum(&spec, s))
        })
        .collect();
    let mut out = RunOutput { total_cells: p.samples, ..Default::default() };
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (k, (s, draw)) in draws.into_iter().enumerate() {
        match draw {
            Ok(sample) => {
                for (z, &real) in sample.eigenvalues.iter().zip(&sample.is_real) {
                    rows.push(vec![k.to_string(), s.to_string(), num(z.re), num(z.im), u8::from(real).to_string()]);
                }
                let fc = complex_fraction(&sample, Some(CENTRAL_WINDOW)).map_or(f64::NAN, |f| f);
                summary.push(vec![
                    k.to_string(),
                    s.to_string(),
                    sample.n_real.to_string(),
                    sample.pairs.len().to_string(),
                    num(fc),
                ]);
            }
            Err(e) => out.failures.push(format!("sample {k} (seed {s}): {e}")),
        }
    }
    out.push_csv("eigenvalues.csv", &["sample", "seed", "re", "im", "is_real"], rows);
    out.push_csv("samples.csv", &["sample", "seed", "n_real", "n_pairs", "fc_window"], summary);
    out.seeds.push(cell_seeds(spec.ensemble_name(), &spec, p.samples, seed));
    out.summary.push(format!(
        "{}: {} of {} draws classified",
        spec.ensemble_name(),
        p.samples - out.failures.len(),
        p.samples
    ));
    Ok(out)
}

/// Geometric grid from `top / 100` to `top` in `points` steps, plus zero.
pub fn geometric_grid(top: f64, points: usize) -> Vec<f64> {
    let lo = top / 100.0;
    let mut grid = vec![0.0];
    grid.extend((0..points).map(|k| lo * (top / lo).powf(k as f64 / (points - 1) as f64)));
    grid
}

fn run_transition_cmd(config: &RunConfig) -> Result<RunOutput, CliError> {
    let template = config.ensemble_spec().expect("normalized");
    let p = config.transition.as_ref().expect("normalized");
    let seed = config.master_seed;
    let mut out = RunOutput::default();
    let mut curves_json = Vec::new();
    for &t in &p.t_values {
        let spec = template.with_t(t);
        let grid = match (&p.mu_grid, p.mu_max) {
            (Some(g), _) => g.clone(),
            (None, Some(q)) => geometric_grid(q.resolve(&spec) / mu_zero(&spec), p.mu_points),
            (None, None) => default_mu_grid(),
        };
        let curve = run_transition(&spec, &[t], &grid, p.samples, seed)?.remove(0);
        out.total_cells += grid.len();
        let rows = (0..grid.len())
            .map(|k| {
                let x = curve.mu_grid[k];
                vec![
                    num(t),
                    num(x * curve.mu0),
                    num(x),
                    num(curve.fc_mean[k]),
                    num(curve.fc_stderr[k]),
                    if curve.cell_errors[k].is_some() { "0".into() } else { p.samples.to_string() },
                ]
            })
            .collect();
        out.push_csv(format!("curve_T{t}.csv"), &["T", "mu", "mu_over_mu0", "fc_mean", "fc_stderr", "n_samples"], rows);
        let mut dat = format!("# {} T={t} mu0={}\n# mu_over_mu0 fc_mean fc_stderr\n", spec.ensemble_name(), curve.mu0);
        for k in 0..grid.len() {
            if curve.cell_errors[k].is_none() {
                dat.push_str(&format!("{} {} {}\n", curve.mu_grid[k], curve.fc_mean[k], curve.fc_stderr[k]));
            }
        }
        out.push_text(format!("curve_T{t}.dat"), dat);
        let mut failed = Vec::new();
        for (x, err) in grid.iter().zip(&curve.cell_errors) {
            if let Some(e) = err {
                out.failures.push(format!("T={t} mu/mu0={x}: {e}"));
                failed.push(json!({ "mu_over_mu0": x, "error": e }));
            }
        }
        let predicted = match predicted_scaling(spec.class, t, spec.n) {
            PredictedScaling::Value(g) => json!(g),
            PredictedScaling::AnomalousWeakCoupling => json!("anomalous"),
        };
        curves_json.push(json!({
            "T": t,
            "mu0": curve.mu0,
            "mu_pt_over_mu0": curve.mu_pt,
            "predicted_g": predicted,
            "failed_cells": failed,
        }));
        out.summary.push(match curve.mu_pt {
            Some(g) => format!("T={t}: mu_PT/mu0 = {g:.4}"),
            None => format!("T={t}: no crossing of f_c = 1/2"),
        });
        out.seeds.push(cell_seeds(format!("T={t}, every mu"), &spec, p.samples, seed));
    }
    out.push_json("transition.json", json!({ "ensemble": template.ensemble_name(), "curves": curves_json }));
    Ok(out)
}

fn run_spacing_cmd(config: &RunConfig) -> Result<RunOutput, CliError> {
    let template = config.ensemble_spec().expect("normalized");
    let p = config.spacing.as_ref().expect("normalized");
    let seed = config.master_seed;
    let sc = SpacingConfig { window: p.window.map(|[a, b]| (a, b)), bins: p.bins, s_max: p.s_max, period: None };
    let hists = run_spacing(&template, &p.t_values, p.samples, p.mode.into(), &sc, seed)?;
    let mut out = RunOutput { total_cells: p.t_values.len(), ..Default::default() };
    let mut summary = Vec::new();
    for (&t, h) in p.t_values.iter().zip(&hists) {
        let w = h.bin_width();
        let rows = h
            .counts
            .iter()
            .enumerate()
            .map(|(k, &d)| {
                let mid = h.bin_edges[k] + 0.5 * w;
                vec![
                    num(h.bin_edges[k]),
                    num(h.bin_edges[k + 1]),
                    num(d),
                    num(wigner_surmise_pdf(mid)),
                    num(gue_surmise_pdf(mid)),
                ]
            })
            .collect();
        out.push_csv(format!("spacing_T{t}.csv"), &["s_lo", "s_hi", "density", "wigner", "gue"], rows);
        summary.push(json!({
            "T": t,
            "n_spacings": h.spacings.len(),
            "overflow": h.overflow,
            "mean_spacing": h.mean_spacing,
            "sample_mean": h.sample_mean(),
            "ks_wigner": ks_distance(&h.spacings, wigner_surmise_cdf),
            "ks_gue": ks_distance(&h.spacings, gue_surmise_cdf),
        }));
        let spec = template.with_t(t).with_mu(0.0);
        out.seeds.push(cell_seeds(format!("T={t}"), &spec, p.samples, seed));
        out.summary.push(format!("T={t}: {} spacings", h.spacings.len()));
    }
    out.push_json("spacing.json", json!({ "ensemble": template.ensemble_name(), "histograms": summary }));
    Ok(out)
}

fn run_density_cmd(config: &RunConfig) -> Result<RunOutput, CliError> {
    let spec = config.ensemble_spec().expect("normalized");
    let p = config.density.as_ref().expect("normalized");
    let seed = config.master_seed;
    let region = Region { re: (p.re[0], p.re[1]), im: (p.im[0], p.im[1]) };
    let resolution = (p.resolution[0], p.resolution[1]);
    let opts = HomotopyOptions { z_step: p.z_step, order: p.order.into(), ..HomotopyOptions::default() };
    let mut out = RunOutput::default();
    let (grid, comparison) = if p.samples > 0 {
        let c = run_density_comparison(&spec, region, resolution, p.samples, seed, &opts)?;
        (c.grid.clone(), Some(c))
    } else {
        let params = PasturParams::new(spec.alpha(), coupling_gamma(spec.t)?, spec.mu)?;
        (density_grid(region, resolution, PasturVariant::for_class(spec.class), &params, &opts)?, None)
    };
    out.total_cells = grid.rho.len();
    emit_grid(&mut out, &grid);
    let missing: Vec<_> = (0..grid.rho.len()).filter(|&k| !grid.converged[k]).collect();
    for &k in &missing {
        let (i, j) = (k % grid.re_axis.len(), k / grid.re_axis.len());
        out.failures.push(format!("z = {}{:+}i: continuation failed", grid.re_axis[i], grid.im_axis[j]));
    }
    let mut header = json!({
        "ensemble": spec.ensemble_name(),
        "spec": spec,
        "variant": grid.variant.label(),
        "params": grid.params,
        "region": region,
        "resolution": resolution,
        "homotopy": opts,
        "clipped": grid.clipped,
        "most_negative": grid.most_negative,
        "missing": missing.len(),
        "columns": ["re", "im", "rho", "residual", "converged_flag"],
    });
    if let Some(c) = comparison {
        let rows = c.eigenvalues.iter().map(|z| vec![num(z.re), num(z.im)]).collect();
        out.push_csv("eigenvalues.csv", &["re", "im"], rows);
        header["monte_carlo"] = json!({
            "samples": p.samples,
            "n_complex": c.n_complex,
            "n_outside": c.n_outside,
            "fraction_outside": c.fraction_outside,
            "slices": c.slices,
        });
        out.seeds.push(cell_seeds(spec.ensemble_name(), &spec, p.samples, seed));
        out.summary.push(format!("fraction of sampled eigenvalues outside the support: {:.4}", c.fraction_outside));
    }
    out.summary.push(format!("{} grid points, {} unresolved", grid.rho.len(), missing.len()));
    out.push_json("density.json", header);
    Ok(out)
}

fn emit_grid(out: &mut RunOutput, grid: &DensityGrid) {
    let (nre, nim) = grid.shape();
    let mut rows = Vec::with_capacity(nre * nim);
    let mut dat = String::from("# re im rho\n");
    for j in 0..nim {
        for i in 0..nre {
            let k = grid.index(i, j);
            let (re, im) = (grid.re_axis[i], grid.im_axis[j]);
            rows.push(vec![
                num(re),
                num(im),
                num(grid.rho[k]),
                num(grid.residual[k]),
                u8::from(grid.converged[k]).to_string(),
            ]);
            dat.push_str(&format!("{re} {im} {}\n", grid.rho[k]));
        }
        dat.push('\n');
    }
    out.push_csv("density.csv", &["re", "im", "rho", "residual", "converged_flag"], rows);
    out.push_text("density.dat", dat);
}

fn run_mscaling_cmd(config: &RunConfig) -> Result<RunOutput, CliError> {
    let p = config.mscaling.as_ref().expect("normalized");
    let class: SymmetryClass = p.class.parse::<ptrmt::ensembles::EnsembleName>().expect("normalized").class;
    let seed = config.master_seed;
    let fit = run_m_scaling(class, p.alpha, p.t, p.mu_over_et, &p.m_values, p.samples, seed)?;
    let mut out = RunOutput { total_cells: p.m_values.len(), ..Default::default() };
    let rows = p
        .m_values
        .iter()
        .zip(fit.x.iter().zip(&fit.y))
        .map(|(&m, (&x, &y))| {
            let n = (p.alpha * m as f64).round() as usize;
            vec![m.to_string(), n.to_string(), num(x), num(y)]
        })
        .collect();
    out.push_csv("mscaling.csv", &["M", "N", "ln_M", "ln_real_fraction"], rows);
    out.push_json(
        "mscaling.json",
        json!({
            "class": p.class,
            "slope": fit.slope,
            "slope_stderr": fit.slope_stderr,
            "intercept": fit.intercept,
        }),
    );
    for &m in &p.m_values {
        let n = (p.alpha * m as f64).round() as usize;
        let spec = EnsembleSpec::gaussian(class, m, n, p.t, 0.0)?;
        out.seeds.push(cell_seeds(format!("M={m}"), &spec, p.samples, seed));
    }
    out.summary.push(format!("slope {:.4} +- {:.4}", fit.slope, fit.slope_stderr));
    Ok(out)
}

fn run_ginibre_cmd(config: &RunConfig) -> Result<RunOutput, CliError> {
    let p = config.ginibre.as_ref().expect("normalized");
    let seed = config.master_seed;
    let mut out = RunOutput { total_cells: p.m_values.len(), ..Default::default() };
    let mut rows = Vec::new();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for &m in &p.m_values {
        let (mean, se) = ginibre_real_count(m, p.samples, seed)?;
        rows.push(vec![m.to_string(), num(mean), num(se), num(ginibre_expected_real(m)), num(mean / m as f64)]);
        x.push((m as f64).ln());
        y.push((mean / m as f64).ln());
        out.seeds.push(CellSeeds {
            cell: format!("M={m}"),
            seed_tag: GINIBRE_TAG,
            n_samples: p.samples,
            first_seed: sample_seed(seed, 0, GINIBRE_TAG),
        });
    }
    let fit = linear_fit(x, y)?;
    out.push_csv("ginibre.csv", &["M", "mean_real", "stderr", "expected", "real_fraction"], rows);
    out.push_json(
        "ginibre.json",
        json!({
            "slope": fit.slope,
            "slope_stderr": fit.slope_stderr,
            "fraction_prefactor": fit.intercept.exp(),
        }),
    );
    out.summary.push(format!("real fraction ~ {:.4} M^{:.4}", fit.intercept.exp(), fit.slope));
    Ok(out)
}

/// Create (if needed) and probe the output directory before any work.
pub fn prepare_output_dir(dir: &Path) -> Result<(), CliError> {
    let err = |source| CliError::OutputDir { path: dir.to_path_buf(), source };
    fs::create_dir_all(dir).map_err(err)?;
    let probe = dir.join(".ptrmt-write-probe");
    fs::write(&probe, b"").map_err(err)?;
    fs::remove_file(&probe).map_err(err)?;
    Ok(())
}

/// Write artifacts and the manifest. Returns the manifest; a run with
/// failed cells is still fully written before `Partial` is reported.
pub fn emit(
    config: &RunConfig,
    output: &RunOutput,
    dir: &Path,
    started: chrono::DateTime<chrono::Utc>,
    clock: Instant,
) -> Result<RunManifest, CliError> {
    let mut outputs = Vec::with_capacity(output.artifacts.len());
    for a in &output.artifacts {
        write_atomic(dir, &a.name, &a.bytes)?;
        outputs.push(OutputFile { path: a.name.clone(), bytes: a.bytes.len() as u64, sha256: blob_sha256(&a.bytes) });
    }
    let finished = chrono::Utc::now();
    let manifest = RunManifest {
        tool: "ptrmt".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        scales: config.ensemble_spec().map(|s| s.scales()),
        started: started.to_rfc3339(),
        finished: finished.to_rfc3339(),
        wall_seconds: clock.elapsed().as_secs_f64(),
        seeds: output.seeds.clone(),
        outputs,
        failures: output.failures.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    write_atomic(dir, MANIFEST_FILE, &bytes)?;
    Ok(manifest)
}

/// Full pipeline for one config: pool, output directory, run, emit.
pub fn run_config(config: &RunConfig) -> Result<(RunManifest, RunOutput), CliError> {
    let dir = config.resolved_output_dir();
    prepare_output_dir(&dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::Config(crate::error::ConfigError::new("workers", e.to_string())))?;
    let started = chrono::Utc::now();
    let clock = Instant::now();
    let output = pool.install(|| execute(config))?;
    let manifest = emit(config, &output, &dir, started, clock)?;
    Ok((manifest, output))
}
