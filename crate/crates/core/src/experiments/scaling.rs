use std::f64::consts::PI;

use faer::Mat;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{draw_seed, linear_fit, mean_stderr, ScalingFit};
use crate::ensembles::{EnsembleSpec, SymmetryClass};
use crate::error::{Error, Result};
use crate::seed::{rng, sample_seed};
use crate::spectral::{real_fraction, sample_spectrum, CENTRAL_WINDOW};

/// Log-log fit of the windowed real fraction against `M` at fixed
/// `alpha = N/M` and `mu / E_T`.
pub fn run_m_scaling(
    class: SymmetryClass,
    alpha: f64,
    t: f64,
    mu_over_et: f64,
    m_values: &[usize],
    n_samples: usize,
    master_seed: u64,
) -> Result<ScalingFit> {
    let mut x = Vec::with_capacity(m_values.len());
    let mut y = Vec::with_capacity(m_values.len());
    for &m in m_values {
        let n = (alpha * m as f64).round() as usize;
        let base = EnsembleSpec::gaussian(class, m, n, t, 0.0)?;
        let spec = base.with_mu(mu_over_et * base.scales().e_thouless);
        let fr = (0..n_samples)
            .into_par_iter()
            .map(|k| real_fraction(&sample_spectrum(&spec, draw_seed(master_seed, k, &spec))?, Some(CENTRAL_WINDOW)))
            .collect::<Result<Vec<_>>>()?;
        let (mean, _) = mean_stderr(&fr);
        if !(mean > 0.0) {
            return Err(Error::InsufficientReal(m));
        }
        x.push((m as f64).ln());
        y.push(mean.ln());
    }
    linear_fit(x, y)
}

/// Real eigenvalues of one `M x M` matrix of independent standard normals.
fn ginibre_draw(m: usize, seed: u64) -> Result<usize> {
    let mut r = rng(seed);
    let a = Mat::<f64>::from_fn(m, m, |_, _| StandardNormal.sample(&mut r));
    let eigs = a.eigenvalues().map_err(|_| Error::Convergence { rows: m, cols: m, kind: "real" })?;
    // real Schur 1x1 blocks give exactly zero imaginary parts
    Ok(eigs.iter().filter(|z| z.im == 0.0).count())
}

/// Seed tag of the real Ginibre draws.
pub const GINIBRE_TAG: u64 = 0x4749_4e49;

/// Mean number of real eigenvalues over `n_samples` draws, with its
/// standard error.
pub fn ginibre_real_count(m: usize, n_samples: usize, master_seed: u64) -> Result<(f64, f64)> {
    if m < 2 {
        return Err(Error::Domain("Ginibre sampling needs M >= 2".into()));
    }
    let counts = (0..n_samples)
        .into_par_iter()
        .map(|k| ginibre_draw(m, sample_seed(master_seed, k as u64, GINIBRE_TAG)).map(|c| c as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_stderr(&counts))
}

/// Exact expected number of real eigenvalues of an `M x M` real Ginibre
/// matrix, `1/2 + sqrt(2) Gamma(M+1/2) / (Gamma(M) sqrt(pi)) 2F1(1, -1/2; M; 1/2)`.
pub fn ginibre_expected_real(m: usize) -> f64 {
    // Gamma(M + 1/2) / Gamma(M) by upward recursion from M = 1
    let mut ratio = PI.sqrt() / 2.0;
    for k in 1..m {
        ratio *= (k as f64 + 0.5) / k as f64;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..200 {
        let kf = k as f64;
        term *= (kf - 0.5) / (m as f64 + kf) * 0.5;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    0.5 + 2f64.sqrt() * ratio / PI.sqrt() * sum
}

/// Log-log fit of the real fraction `E_M / M` for real Ginibre matrices.
pub fn run_ginibre_scaling(m_values: &[usize], n_samples: usize, master_seed: u64) -> Result<ScalingFit> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for &m in m_values {
        let (mean, _) = ginibre_real_count(m, n_samples, master_seed)?;
        x.push((m as f64).ln());
        y.push((mean / m as f64).ln());
    }
    linear_fit(x, y)
}
