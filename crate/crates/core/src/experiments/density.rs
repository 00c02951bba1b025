use faer::c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::draw_seed;
use crate::ensembles::{coupling_gamma, EnsembleSpec, Family};
use crate::error::{Error, Result};
use crate::pastur::{density_grid, DensityGrid, HomotopyOptions, PasturParams, PasturVariant, Region};
use crate::spectral::sample_spectrum;

/// Support threshold on the mean density.
pub const SUPPORT_THRESHOLD: f64 = 1e-4;
/// Eigenvalues this close to the real axis are not compared.
pub const REAL_BAND: f64 = 0.01;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceComparison {
    pub re_center: f64,
    pub re_width: f64,
    /// `sum |h - rho| / sum rho` over the Im bins of the slice.
    pub relative_l1: f64,
    pub n_eigenvalues: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityComparison {
    pub spec: EnsembleSpec,
    pub grid: DensityGrid,
    /// Complex sampled eigenvalues with `|Im E| >= REAL_BAND`.
    pub n_complex: usize,
    /// Those among them where no corner of their grid cell exceeds
    /// `SUPPORT_THRESHOLD` (or that fall outside the grid).
    pub n_outside: usize,
    pub fraction_outside: f64,
    pub slices: Vec<SliceComparison>,
    /// Sampled complex eigenvalues, kept for overlays.
    pub eigenvalues: Vec<c64>,
}

/// Monte Carlo scatter against the mean density from the self-consistent
/// equation at the same `(alpha, gamma, mu)`.
pub fn run_density_comparison(
    spec: &EnsembleSpec,
    region: Region,
    resolution: (usize, usize),
    n_samples: usize,
    master_seed: u64,
    opts: &HomotopyOptions,
) -> Result<DensityComparison> {
    spec.validate()?;
    if spec.family != Family::Gaussian {
        return Err(Error::Domain("density comparison needs the Gaussian family".into()));
    }
    let params = PasturParams::new(spec.alpha(), coupling_gamma(spec.t)?, spec.mu)?;
    let variant = PasturVariant::for_class(spec.class);
    let grid = density_grid(region, resolution, variant, &params, opts)?;

    let samples = (0..n_samples)
        .into_par_iter()
        .map(|k| sample_spectrum(spec, draw_seed(master_seed, k, spec)))
        .collect::<Result<Vec<_>>>()?;
    let mut eigenvalues = Vec::new();
    for s in &samples {
        for (z, &real) in s.eigenvalues.iter().zip(&s.is_real) {
            if !real && z.im.abs() >= REAL_BAND {
                eigenvalues.push(*z);
            }
        }
    }
    let n_outside = eigenvalues
        .iter()
        .filter(|&&z| grid.cell_max(z).is_none_or(|r| r <= SUPPORT_THRESHOLD))
        .count();
    let n_complex = eigenvalues.len();
    let total = (n_samples * 2 * spec.m) as f64;
    let slices = [-1.0, 0.0, 1.0]
        .into_iter()
        .filter_map(|x| slice(&grid, &eigenvalues, total, x, 0.2))
        .collect();
    Ok(DensityComparison {
        spec: *spec,
        grid,
        n_complex,
        n_outside,
        fraction_outside: if n_complex > 0 { n_outside as f64 / n_complex as f64 } else { 0.0 },
        slices,
        eigenvalues,
    })
}

/// Histogram of `Im E` for `|Re E - x| < w/2`, per unit area and per
/// eigenvalue, against the grid density averaged over the same slice.
fn slice(grid: &DensityGrid, eigs: &[c64], total: f64, x: f64, w: f64) -> Option<SliceComparison> {
    let (lo, hi) = (*grid.im_axis.first()?, *grid.im_axis.last()?);
    let bins = 24;
    let bw = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut n = 0;
    for z in eigs {
        if (z.re - x).abs() < 0.5 * w && z.im >= lo && z.im < hi {
            counts[((z.im - lo) / bw) as usize] += 1;
            n += 1;
        }
    }
    let (mut diff, mut norm) = (0.0, 0.0);
    for (k, &cnt) in counts.iter().enumerate() {
        let y = lo + (k as f64 + 0.5) * bw;
        if y.abs() < REAL_BAND + 0.5 * bw {
            continue;
        }
        let h = cnt as f64 / (total * w * bw);
        // average the mean density across the slice width
        let xs = (0..9).map(|j| x - 0.5 * w + w * (j as f64 + 0.5) / 9.0);
        let vals: Vec<f64> = xs.filter_map(|xx| grid.interpolate(c64::new(xx, y))).collect();
        if vals.is_empty() {
            continue;
        }
        let rho = vals.iter().sum::<f64>() / vals.len() as f64;
        diff += (h - rho).abs();
        norm += rho;
    }
    (norm > 0.0).then_some(SliceComparison { re_center: x, re_width: w, relative_l1: diff / norm, n_eigenvalues: n })
}
