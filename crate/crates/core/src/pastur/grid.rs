use faer::c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{density_at, solve_homotopy, walk_z, GreenReduced, HomotopyOptions, PasturParams, PasturVariant};
use crate::error::{Error, Result};

/// Negative densities down to this are finite-difference noise and are
/// clipped to zero.
pub const CLIP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityGrid {
    pub re_axis: Vec<f64>,
    pub im_axis: Vec<f64>,
    /// Row-major over `im_axis`: `rho[j * re_axis.len() + i]`. NaN marks a
    /// point where continuation failed.
    pub rho: Vec<f64>,
    pub residual: Vec<f64>,
    pub im_residue: Vec<f64>,
    pub converged: Vec<bool>,
    pub variant: PasturVariant,
    pub params: PasturParams,
    /// Points with `-CLIP_TOLERANCE <= rho < 0` set to zero.
    pub clipped: usize,
    /// Most negative raw value seen (0 if none).
    pub most_negative: f64,
}

impl DensityGrid {
    pub fn shape(&self) -> (usize, usize) {
        (self.re_axis.len(), self.im_axis.len())
    }

    pub fn index(&self, i_re: usize, j_im: usize) -> usize {
        j_im * self.re_axis.len() + i_re
    }

    pub fn get(&self, i_re: usize, j_im: usize) -> Option<f64> {
        let k = self.index(i_re, j_im);
        self.converged[k].then_some(self.rho[k])
    }

    pub fn missing(&self) -> usize {
        self.converged.iter().filter(|&&c| !c).count()
    }

    fn spacing(axis: &[f64]) -> f64 {
        if axis.len() > 1 {
            (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64
        } else {
            0.0
        }
    }

    pub fn cell_area(&self) -> f64 {
        Self::spacing(&self.re_axis) * Self::spacing(&self.im_axis)
    }

    /// Riemann sum of the density over the grid, skipping missing points and
    /// rows with `|Im z| < exclude_im`.
    pub fn integral(&self, exclude_im: f64) -> f64 {
        let mut sum = 0.0;
        for (j, &y) in self.im_axis.iter().enumerate() {
            if y.abs() < exclude_im {
                continue;
            }
            for i in 0..self.re_axis.len() {
                if let Some(r) = self.get(i, j) {
                    sum += r;
                }
            }
        }
        sum * self.cell_area()
    }

    /// Bilinear lookup; `None` outside the grid or next to a missing point.
    pub fn interpolate(&self, z: c64) -> Option<f64> {
        let (i, fx) = locate(&self.re_axis, z.re)?;
        let (j, fy) = locate(&self.im_axis, z.im)?;
        let v = [self.get(i, j)?, self.get(i + 1, j)?, self.get(i, j + 1)?, self.get(i + 1, j + 1)?];
        Some((1.0 - fy) * ((1.0 - fx) * v[0] + fx * v[1]) + fy * ((1.0 - fx) * v[2] + fx * v[3]))
    }

    /// Largest density at the four corners of the cell containing `z`.
    pub fn cell_max(&self, z: c64) -> Option<f64> {
        let (i, _) = locate(&self.re_axis, z.re)?;
        let (j, _) = locate(&self.im_axis, z.im)?;
        [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)]
            .into_iter()
            .filter_map(|(a, b)| self.get(a, b))
            .reduce(f64::max)
    }
}

fn locate(axis: &[f64], x: f64) -> Option<(usize, f64)> {
    let n = axis.len();
    if n < 2 || !(x >= axis[0] && x <= axis[n - 1]) {
        return None;
    }
    let h = (axis[n - 1] - axis[0]) / (n - 1) as f64;
    let k = (((x - axis[0]) / h) as usize).min(n - 2);
    Some((k, (x - axis[k]) / h))
}

fn linspace((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn nearest_to_zero(axis: &[f64]) -> usize {
    (0..axis.len()).min_by(|&a, &b| axis[a].abs().total_cmp(&axis[b].abs())).unwrap_or(0)
}

#[derive(Clone, Copy)]
struct Cell {
    rho: f64,
    residual: f64,
    im_residue: f64,
    ok: bool,
}

const MISSING: Cell = Cell { rho: f64::NAN, residual: f64::NAN, im_residue: f64::NAN, ok: false };

/// Walks from `start` through `targets` in order, continuing from the last
/// converged point when one fails. Returns the solutions (None if failed).
fn sweep(
    start: (c64, GreenReduced),
    targets: &[c64],
    variant: PasturVariant,
    params: &PasturParams,
    opts: &HomotopyOptions,
) -> Vec<Option<GreenReduced>> {
    let (mut z_prev, mut g_prev) = start;
    targets
        .iter()
        .map(|&z| match walk_z(&g_prev, z_prev, z, variant, params, opts) {
            Ok(g) => {
                z_prev = z;
                g_prev = g;
                Some(g)
            }
            Err(_) => None,
        })
        .collect()
}

/// Mean density on a rectangular grid (endpoints included).
///
/// The column nearest `Re z = 0` is reached from the origin and walked
/// outward; every row then walks left and right from that column with warm
/// starts. Failed points are recorded as missing.
pub fn density_grid(
    region: Region,
    resolution: (usize, usize),
    variant: PasturVariant,
    params: &PasturParams,
    opts: &HomotopyOptions,
) -> Result<DensityGrid> {
    params.validate()?;
    let (nre, nim) = resolution;
    if nre == 0 || nim == 0 || !(region.re.0 <= region.re.1) || !(region.im.0 <= region.im.1) {
        return Err(Error::Domain("grid needs a nonempty region and resolution".into()));
    }
    let re_axis = linspace(region.re, nre);
    let im_axis = linspace(region.im, nim);
    let (ic, jc) = (nearest_to_zero(&re_axis), nearest_to_zero(&im_axis));
    let z_center = c64::new(re_axis[ic], im_axis[jc]);
    let g_center = solve_homotopy(z_center, variant, params, opts)?;

    let mut column: Vec<Option<GreenReduced>> = vec![None; nim];
    column[jc] = Some(g_center);
    let up: Vec<c64> = (jc + 1..nim).map(|j| c64::new(re_axis[ic], im_axis[j])).collect();
    for (k, g) in sweep((z_center, g_center), &up, variant, params, opts).into_iter().enumerate() {
        column[jc + 1 + k] = g;
    }
    let down: Vec<c64> = (0..jc).rev().map(|j| c64::new(re_axis[ic], im_axis[j])).collect();
    for (k, g) in sweep((z_center, g_center), &down, variant, params, opts).into_iter().enumerate() {
        column[jc - 1 - k] = g;
    }

    let rows: Vec<Vec<Cell>> = (0..nim)
        .into_par_iter()
        .map(|j| {
            let y = im_axis[j];
            let z_c = c64::new(re_axis[ic], y);
            // a missing column entry is reached from the nearest converged one
            let start = match column[j] {
                Some(g) => Some(g),
                None => (0..nim)
                    .filter(|&k| column[k].is_some())
                    .min_by_key(|&k| k.abs_diff(j))
                    .and_then(|k| {
                        let from = c64::new(re_axis[ic], im_axis[k]);
                        walk_z(&column[k].unwrap(), from, z_c, variant, params, opts).ok()
                    }),
            };
            let mut greens: Vec<Option<GreenReduced>> = vec![None; nre];
            if let Some(g) = start {
                greens[ic] = Some(g);
                let right: Vec<c64> = (ic + 1..nre).map(|i| c64::new(re_axis[i], y)).collect();
                for (k, r) in sweep((z_c, g), &right, variant, params, opts).into_iter().enumerate() {
                    greens[ic + 1 + k] = r;
                }
                let left: Vec<c64> = (0..ic).rev().map(|i| c64::new(re_axis[i], y)).collect();
                for (k, r) in sweep((z_c, g), &left, variant, params, opts).into_iter().enumerate() {
                    greens[ic - 1 - k] = r;
                }
            }
            greens
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    let Some(g) = g else { return MISSING };
                    let z = c64::new(re_axis[i], y);
                    match density_at(z, variant, params, g, &opts.solver) {
                        Ok(d) => Cell { rho: d.rho, residual: d.residual, im_residue: d.im_residue, ok: true },
                        Err(_) => MISSING,
                    }
                })
                .collect()
        })
        .collect();

    let mut grid = DensityGrid {
        re_axis,
        im_axis,
        rho: Vec::with_capacity(nre * nim),
        residual: Vec::with_capacity(nre * nim),
        im_residue: Vec::with_capacity(nre * nim),
        converged: Vec::with_capacity(nre * nim),
        variant,
        params: *params,
        clipped: 0,
        most_negative: 0.0,
    };
    for cell in rows.into_iter().flatten() {
        let mut rho = cell.rho;
        if cell.ok && rho < 0.0 {
            grid.most_negative = grid.most_negative.min(rho);
            if rho >= -CLIP_TOLERANCE {
                rho = 0.0;
                grid.clipped += 1;
            }
        }
        grid.rho.push(rho);
        grid.residual.push(cell.residual);
        grid.im_residue.push(cell.im_residue);
        grid.converged.push(cell.ok);
    }
    Ok(grid)
}
