//! The numerical studies: transition curves, coupling laws, spacing
//! statistics, density comparisons, size scaling and the Ginibre baseline.

mod density;
mod scaling;
mod stats;

pub use density::{run_density_comparison, DensityComparison, SliceComparison};
pub use scaling::{ginibre_expected_real, GINIBRE_TAG, ginibre_real_count, run_ginibre_scaling, run_m_scaling};
pub use stats::{crossing, isotonic, linear_fit, mean_stderr, ScalingFit};

use faer::{Mat, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{hamiltonian_parts, EnsembleSpec, Family, HermitianPart, SymmetryClass};
use crate::error::{Error, Result};
use crate::seed::sample_seed;
use crate::spectral::{
    complex_fraction, sample_spectrum, spacing_histogram, SpacingConfig, SpacingHistogram, SpacingMode, CENTRAL_WINDOW,
};

/// `mu_O` for uniform classes, `mu_A` for antisymmetric ones.
pub fn mu_zero(spec: &EnsembleSpec) -> f64 {
    spec.scales().mu_zero(spec.class)
}

/// Seed of draw `index`. It depends on the class and family but not on
/// `(M, N, T, mu)`, so sweeps reuse the same random numbers across cells.
pub fn draw_seed(master: u64, index: usize, spec: &EnsembleSpec) -> u64 {
    sample_seed(master, index as u64, spec.seed_tag())
}

/// 25 geometric points from 0.05 to 5 (units of `mu_0`) preceded by 0.
pub fn default_mu_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend((0..25).map(|k| 0.05 * 100f64.powf(k as f64 / 24.0)));
    g
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionCurve {
    /// Ensemble with `t` set; `mu` is swept.
    pub template: EnsembleSpec,
    pub t: f64,
    pub mu0: f64,
    /// In units of `mu0`.
    pub mu_grid: Vec<f64>,
    pub fc_mean: Vec<f64>,
    pub fc_stderr: Vec<f64>,
    pub n_samples: usize,
    /// Per-cell failure message; failed cells carry NaN statistics.
    pub cell_errors: Vec<Option<String>>,
    pub mu_pt: Option<f64>,
    pub g_of_t: Option<f64>,
}

impl TransitionCurve {
    pub fn failed_cells(&self) -> usize {
        self.cell_errors.iter().filter(|e| e.is_some()).count()
    }
}

/// Averaged windowed complex fraction of one `(T, mu)` cell.
pub fn transition_cell(spec: &EnsembleSpec, n_samples: usize, master_seed: u64) -> Result<(f64, f64)> {
    spec.validate()?;
    let fc = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let s = sample_spectrum(spec, draw_seed(master_seed, k, spec))?;
            complex_fraction(&s, Some(CENTRAL_WINDOW))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_stderr(&fc))
}

fn check_grid(mu_grid: &[f64]) -> Result<()> {
    if mu_grid.is_empty() || mu_grid.windows(2).any(|w| !(w[0] < w[1])) || mu_grid[0] < 0.0 {
        return Err(Error::Domain("mu grid must be nonnegative and strictly increasing".into()));
    }
    Ok(())
}

/// `f_c(mu)` for every `T`. Cell failures are recorded, not fatal.
pub fn run_transition(
    template: &EnsembleSpec,
    t_values: &[f64],
    mu_grid: &[f64],
    n_samples: usize,
    master_seed: u64,
) -> Result<Vec<TransitionCurve>> {
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be >= 1".into()));
    }
    check_grid(mu_grid)?;
    t_values.iter().map(|&t| template.with_t(t).validate()).collect::<Result<()>>()?;
    let mut curves = Vec::with_capacity(t_values.len());
    for &t in t_values {
        let spec = template.with_t(t);
        let mu0 = mu_zero(&spec);
        let mut curve = TransitionCurve {
            template: spec,
            t,
            mu0,
            mu_grid: mu_grid.to_vec(),
            fc_mean: Vec::with_capacity(mu_grid.len()),
            fc_stderr: Vec::with_capacity(mu_grid.len()),
            n_samples,
            cell_errors: Vec::with_capacity(mu_grid.len()),
            mu_pt: None,
            g_of_t: None,
        };
        for &x in mu_grid {
            match transition_cell(&spec.with_mu(x * mu0), n_samples, master_seed) {
                Ok((m, s)) => {
                    curve.fc_mean.push(m);
                    curve.fc_stderr.push(s);
                    curve.cell_errors.push(None);
                }
                Err(e) => {
                    curve.fc_mean.push(f64::NAN);
                    curve.fc_stderr.push(f64::NAN);
                    curve.cell_errors.push(Some(e.to_string()));
                }
            }
        }
        let _ = find_mu_pt(&mut curve);
        curves.push(curve);
    }
    Ok(curves)
}

/// `mu_PT / mu_0` where the isotonic fit of the mean curve crosses 1/2.
/// Stores the result in `mu_pt` and `g_of_t`.
pub fn find_mu_pt(curve: &mut TransitionCurve) -> Result<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) =
        curve.mu_grid.iter().zip(&curve.fc_mean).filter(|(_, f)| f.is_finite()).map(|(a, b)| (*a, *b)).unzip();
    let fit = isotonic(&y, &vec![1.0; y.len()]);
    let g = crossing(&x, &fit, 0.5)?;
    curve.mu_pt = Some(g);
    curve.g_of_t = Some(g);
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PredictedScaling {
    Value(f64),
    /// GOAE' below `T_A`: the coupling law turns anomalous and no closed
    /// form is available.
    AnomalousWeakCoupling,
}

impl PredictedScaling {
    pub fn value(self) -> Option<f64> {
        match self {
            PredictedScaling::Value(g) => Some(g),
            PredictedScaling::AnomalousWeakCoupling => None,
        }
    }
}

/// Perturbative estimate of `g(T) = mu_PT / mu_0`.
pub fn predicted_scaling(class: SymmetryClass, t: f64, n: usize) -> PredictedScaling {
    let nt = n as f64 * t;
    match class {
        SymmetryClass::OO | SymmetryClass::UOprime => {
            PredictedScaling::Value(if nt > 0.0 { (1.0 + 1.0 / nt).powf(-0.5) } else { 0.0 })
        }
        SymmetryClass::UO => PredictedScaling::Value(t.sqrt()),
        SymmetryClass::OA => PredictedScaling::Value(1.0),
        SymmetryClass::OAprime => {
            let t_a = 1.0 / (n as f64).powi(2);
            if t > t_a {
                PredictedScaling::Value(1.0)
            } else {
                PredictedScaling::AnomalousWeakCoupling
            }
        }
    }
}

/// Level sequences of one draw at `mu = 0`: the spectra of `H + Gamma`
/// and `H - Gamma`, or for GUOE the single spectrum of the coupled
/// hermitian `2M` matrix.
pub fn spacing_levels(spec: &EnsembleSpec, seed: u64) -> Result<Vec<Vec<f64>>> {
    let spec = spec.with_mu(0.0);
    let parts = hamiltonian_parts(&spec, seed)?;
    let m = spec.m;
    let fail = |_| Error::Convergence { rows: m, cols: m, kind: "self-adjoint" };
    if spec.class == SymmetryClass::UO {
        let full = parts.assemble();
        return Ok(vec![full.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::Convergence {
            rows: 2 * m,
            cols: 2 * m,
            kind: "self-adjoint",
        })?]);
    }
    let mut out = Vec::with_capacity(2);
    for sign in [1.0, -1.0] {
        let shift = |r: usize, c: usize| if r == c { sign * parts.coupling[r] } else { 0.0 };
        let levels = match spec.class.hermitian_part() {
            HermitianPart::O => Mat::<f64>::from_fn(m, m, |r, c| parts.h_left[(r, c)].re + shift(r, c))
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(fail)?,
            HermitianPart::U => {
                Mat::from_fn(m, m, |r, c| parts.h_left[(r, c)] + faer::c64::new(shift(r, c), 0.0))
                    .self_adjoint_eigenvalues(Side::Lower)
                    .map_err(fail)?
            }
        };
        out.push(levels);
    }
    Ok(out)
}

/// Spacing histograms at `mu = 0`, one per `T`.
pub fn run_spacing(
    template: &EnsembleSpec,
    t_values: &[f64],
    n_samples: usize,
    mode: SpacingMode,
    config: &SpacingConfig,
    master_seed: u64,
) -> Result<Vec<SpacingHistogram>> {
    if template.family != Family::Gaussian {
        return Err(Error::Domain("spacing statistics use the Gaussian family".into()));
    }
    t_values
        .iter()
        .map(|&t| {
            let spec = template.with_t(t).with_mu(0.0);
            spec.validate()?;
            let samples = (0..n_samples)
                .into_par_iter()
                .map(|k| spacing_levels(&spec, draw_seed(master_seed, k, &spec)))
                .collect::<Result<Vec<_>>>()?;
            spacing_histogram(&samples, mode, config)
        })
        .collect()
}

#[cfg(test)]
mod tests;
