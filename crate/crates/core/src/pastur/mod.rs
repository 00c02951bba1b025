//! Self-consistent reduced Green function of the coupled-resonator ensembles
//! and the mean eigenvalue density it implies.
//!
//! The 4x4 unknown `G` is indexed as (left, right) x (z, z*), i.e. the
//! diagonal of `u` reads `z + i mu, z - i mu, z* - i mu, z* + i mu`.

mod grid;
mod mat4;

pub use grid::{density_grid, DensityGrid, Region, CLIP_TOLERANCE};
pub use mat4::Mat4;

use std::f64::consts::PI;

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::ensembles::SymmetryClass;
use crate::error::{Error, Result};

/// Final regulator of the continuation.
pub const LAMBDA_TARGET: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PasturVariant {
    /// `S(G) = G`; GOOE and GUOE'.
    OO,
    /// `S(G) = P1 G P1 + P2 G P2`; GUOE.
    UO,
    /// `S(G) = G - R G R`, `R = mu diag(1, 1, -1, -1)`; GOAE.
    OA,
    /// `S(G) = G - R' G R'`, `R' = mu diag(1, -1, -1, 1)`; GOAE'.
    OAprime,
}

impl PasturVariant {
    pub const ALL: [PasturVariant; 4] = [Self::OO, Self::UO, Self::OA, Self::OAprime];

    pub fn for_class(class: SymmetryClass) -> Self {
        match class {
            SymmetryClass::OO | SymmetryClass::UOprime => Self::OO,
            SymmetryClass::UO => Self::UO,
            SymmetryClass::OA => Self::OA,
            SymmetryClass::OAprime => Self::OAprime,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::OO => "OO",
            Self::UO => "UO",
            Self::OA => "OA",
            Self::OAprime => "OA'",
        }
    }

    /// Whether `mu` enters through `u` (uniform absorption/amplification)
    /// rather than through the contractions of `A`.
    fn mu_in_u(self) -> bool {
        matches!(self, Self::OO | Self::UO)
    }

    /// `S(G)` is an entrywise mask for every variant: `S(G)_ij = w_ij G_ij`.
    fn weights(self, mu: f64) -> [[f64; 4]; 4] {
        let mut w = [[1.0; 4]; 4];
        let signs = match self {
            Self::OO => return w,
            Self::UO => {
                for (i, row) in w.iter_mut().enumerate() {
                    for (j, x) in row.iter_mut().enumerate() {
                        *x = if i % 2 == j % 2 { 1.0 } else { 0.0 };
                    }
                }
                return w;
            }
            Self::OA => [1.0, 1.0, -1.0, -1.0],
            Self::OAprime => [1.0, -1.0, -1.0, 1.0],
        };
        for (i, row) in w.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = 1.0 - mu * mu * signs[i] * signs[j];
            }
        }
        w
    }

    /// The self-energy map `S(G)`.
    pub fn self_energy(self, g: &Mat4, mu: f64) -> Mat4 {
        let w = self.weights(mu);
        Mat4::from_fn(|i, j| g[(i, j)] * w[i][j])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PasturParams {
    pub alpha: f64,
    pub gamma: f64,
    pub mu: f64,
    pub lambda: f64,
}

impl PasturParams {
    pub fn new(alpha: f64, gamma: f64, mu: f64) -> Result<Self> {
        let p = PasturParams { alpha, gamma, mu, lambda: LAMBDA_TARGET };
        p.validate()?;
        Ok(p)
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        PasturParams { lambda, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Domain(format!("alpha = {} outside [0, 1]", self.alpha)));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::Domain(format!("gamma = {} must be finite and >= 0", self.gamma)));
        }
        if !self.mu.is_finite() {
            return Err(Error::Domain("mu must be finite".into()));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::Domain(format!("lambda = {} must be > 0", self.lambda)));
        }
        Ok(())
    }
}

/// Spectral parameter plus model constants for one solve. `z_star` is
/// formally independent of `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PasturPoint {
    pub z: c64,
    pub z_star: c64,
    pub alpha: f64,
    pub gamma: f64,
    pub mu: f64,
    pub lambda: f64,
}

impl PasturPoint {
    pub fn at(z: c64, params: &PasturParams) -> Self {
        PasturPoint {
            z,
            z_star: z.conj(),
            alpha: params.alpha,
            gamma: params.gamma,
            mu: params.mu,
            lambda: params.lambda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenReduced {
    pub g: Mat4,
    /// Frobenius norm of the fixed-point defect.
    pub residual: f64,
}

fn u_with(p: &PasturPoint, gamma: f64, mu: f64) -> Mat4 {
    let i = c64::new(0.0, 1.0);
    let mut u = Mat4::diag([p.z + i * mu, p.z - i * mu, p.z_star - i * mu, p.z_star + i * mu]);
    let g = c64::new(-gamma, 0.0);
    let l = i * p.lambda;
    u[(0, 1)] = g;
    u[(1, 0)] = g;
    u[(2, 3)] = g;
    u[(3, 2)] = g;
    u[(0, 2)] = l;
    u[(2, 0)] = l;
    u[(1, 3)] = l;
    u[(3, 1)] = l;
    u
}

/// `u_gamma` for the given coupling; the A-type variants use `u` at `mu = 0`.
pub fn u_matrix(p: &PasturPoint, gamma_value: f64, variant: PasturVariant) -> Mat4 {
    let mu = if variant.mu_in_u() { p.mu } else { 0.0 };
    u_with(p, gamma_value, mu)
}

/// Decaying resolvent of the semicircle, `g(w) = (w - sqrt(w^2 - 4)) / 2`,
/// with the cut on `[-2, 2]`.
fn semicircle_g(w: c64) -> c64 {
    let s = (w - 2.0).sqrt() * (w + 2.0).sqrt();
    2.0 / (w + s)
}

/// Divided difference `(g(a) - g(b)) / (a - b)`, written without
/// cancellation when both points sit on the same sheet (and exact at a = b).
fn semicircle_divided(a: c64, b: c64) -> c64 {
    let sa = (a - 2.0).sqrt() * (a + 2.0).sqrt();
    let sb = (b - 2.0).sqrt() * (b + 2.0).sqrt();
    if (sa + sb).norm() >= (sa - sb).norm() {
        -2.0 * (1.0 + (a + b) / (sa + sb)) / ((a + sa) * (b + sb))
    } else {
        (semicircle_g(a) - semicircle_g(b)) / (a - b)
    }
}

/// `g` applied to the 2x2 matrix `[[a, b], [c, d]]` as `f0 I + f1 B`.
fn g_2x2(a: c64, b: c64, c: c64, d: c64) -> Result<[[c64; 2]; 2]> {
    let m = (a + d) * 0.5;
    let h = (a - d) * 0.5;
    let delta = (h * h + b * c).sqrt();
    let (ep, em) = (m + delta, m - delta);
    let f1 = semicircle_divided(ep, em);
    if !(f1.re.is_finite() && f1.im.is_finite()) {
        return Err(Error::ContinuationBreakdown {
            stage: "g0",
            at: format!("defective block at the spectral edge, w = {m}"),
        });
    }
    let f0 = semicircle_g(ep) - f1 * ep;
    Ok([[f0 + f1 * a, f1 * b], [f1 * c, f0 + f1 * d]])
}

/// Uncoupled solution `G0 = u0/2 + (u0^2/4 - 1)^{1/2}` on the branch that
/// tends to `-i sigma_x (x) 1` at `z = z* = 0`, `mu = 0`, `lambda -> 0`.
///
/// `u0` splits into the blocks on indices (0, 2) and (1, 3); on each block
/// `G0` is the semicircle resolvent of the block.
pub fn g0_uncoupled(p: &PasturPoint) -> Result<GreenReduced> {
    g0_for(p, PasturVariant::OO)
}

fn g0_for(p: &PasturPoint, variant: PasturVariant) -> Result<GreenReduced> {
    let u0 = u_matrix(p, 0.0, variant);
    let mut g = Mat4::zeros();
    for (x, y) in [(0, 2), (1, 3)] {
        let b = g_2x2(u0[(x, x)], u0[(x, y)], u0[(y, x)], u0[(y, y)])?;
        g[(x, x)] = b[0][0];
        g[(x, y)] = b[0][1];
        g[(y, x)] = b[1][0];
        g[(y, y)] = b[1][1];
    }
    let p0 = PasturPoint { alpha: 0.0, ..*p };
    let residual = pastur_residual(&g, &p0, variant)?.norm();
    Ok(GreenReduced { g, residual })
}

struct Inverses {
    coupled: Option<Mat4>,
    uncoupled: Option<Mat4>,
}

fn inverses(g: &Mat4, p: &PasturPoint, variant: PasturVariant) -> Result<Inverses> {
    let s = variant.self_energy(g, p.mu);
    let coupled = if p.alpha > 0.0 { Some((u_matrix(p, p.gamma, variant) - s).inverse()?) } else { None };
    let uncoupled = if p.alpha < 1.0 { Some((u_matrix(p, 0.0, variant) - s).inverse()?) } else { None };
    Ok(Inverses { coupled, uncoupled })
}

fn rhs_from(inv: &Inverses, alpha: f64) -> Mat4 {
    let mut r = Mat4::zeros();
    if let Some(x) = inv.coupled {
        r = r + x * alpha;
    }
    if let Some(x) = inv.uncoupled {
        r = r + x * (1.0 - alpha);
    }
    r
}

/// `F(G) = alpha (u_gamma - S(G))^-1 + (1 - alpha) (u_0 - S(G))^-1 - G`.
pub fn pastur_residual(g: &Mat4, p: &PasturPoint, variant: PasturVariant) -> Result<Mat4> {
    let inv = inverses(g, p, variant)?;
    Ok(rhs_from(&inv, p.alpha) - *g)
}

/// Complex Jacobian of `F` as a 16x16 row-major matrix acting on the
/// row-major vectorization of `dG`:
/// `dF = alpha Xg^-1 S(dG) Xg^-1 + (1 - alpha) X0^-1 S(dG) X0^-1 - dG`.
fn jacobian(inv: &Inverses, p: &PasturPoint, variant: PasturVariant) -> Vec<c64> {
    let w = variant.weights(p.mu);
    let mut jac = vec![c64::new(0.0, 0.0); 256];
    for k in 0..4 {
        for l in 0..4 {
            let col = 4 * k + l;
            let mut d = Mat4::zeros();
            let mut add = |x: &Mat4, c: f64| {
                // X E_kl X has entries X_ik X_lj
                let f = c * w[k][l];
                for i in 0..4 {
                    for j in 0..4 {
                        d[(i, j)] += x[(i, k)] * x[(l, j)] * f;
                    }
                }
            };
            if let Some(x) = &inv.coupled {
                add(x, p.alpha);
            }
            if let Some(x) = &inv.uncoupled {
                add(x, 1.0 - p.alpha);
            }
            d[(k, l)] -= 1.0;
            for (row, v) in d.to_vec16().into_iter().enumerate() {
                jac[16 * row + col] = v;
            }
        }
    }
    jac
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Accept when the Frobenius norm of `F` drops below this.
    pub tol: f64,
    pub max_newton: usize,
    pub max_fixed_point: usize,
    /// Relaxation `eta` of the fallback `G <- (1 - eta) G + eta RHS`.
    pub relaxation: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, max_newton: 40, max_fixed_point: 4000, relaxation: 0.5 }
    }
}

struct Solved {
    g: Mat4,
    residual: f64,
    iterations: usize,
}

fn newton(p: &PasturPoint, variant: PasturVariant, start: Mat4, tol: f64, max_iter: usize) -> Result<Solved> {
    let mut g = start;
    let mut inv = inverses(&g, p, variant)?;
    let mut f = rhs_from(&inv, p.alpha) - g;
    let mut r = f.norm();
    for it in 0..=max_iter {
        if r < tol {
            return Ok(Solved { g, residual: r, iterations: it });
        }
        if it == max_iter || !r.is_finite() {
            break;
        }
        let mut jac = jacobian(&inv, p, variant);
        let mut step: Vec<c64> = f.to_vec16().iter().map(|x| -x).collect();
        mat4::solve_in_place(&mut jac, 16, &mut step, 1)?;
        let dg = Mat4::from_vec16(&step);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let trial = g + dg * t;
            if let Ok(ti) = inverses(&trial, p, variant) {
                let tf = rhs_from(&ti, p.alpha) - trial;
                let tr = tf.norm();
                if tr.is_finite() && (tr < (1.0 - 1e-4 * t) * r || tr < tol) {
                    g = trial;
                    inv = ti;
                    f = tf;
                    r = tr;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Err(Error::NonConvergence { residual: r, iterations: max_iter })
}

fn fixed_point(p: &PasturPoint, variant: PasturVariant, start: Mat4, opts: &SolverOptions) -> Result<Mat4> {
    let eta = opts.relaxation;
    let mut g = start;
    let mut r = f64::INFINITY;
    for _ in 0..opts.max_fixed_point {
        let rhs = rhs_from(&inverses(&g, p, variant)?, p.alpha);
        let f = rhs - g;
        r = f.norm();
        if r < 1e-6 {
            return Ok(g);
        }
        g = g * (1.0 - eta) + rhs * eta;
    }
    Err(Error::NonConvergence { residual: r, iterations: opts.max_fixed_point })
}

/// Damped Newton from the warm start `from`, falling back to relaxed
/// fixed-point iteration when Newton stalls.
pub fn solve_point(p: &PasturPoint, variant: PasturVariant, from: &GreenReduced) -> Result<GreenReduced> {
    solve_point_with(p, variant, from, &SolverOptions::default())
}

pub fn solve_point_with(
    p: &PasturPoint,
    variant: PasturVariant,
    from: &GreenReduced,
    opts: &SolverOptions,
) -> Result<GreenReduced> {
    match newton(p, variant, from.g, opts.tol, opts.max_newton) {
        Ok(s) => Ok(GreenReduced { g: s.g, residual: s.residual }),
        Err(first) => {
            let Ok(g) = fixed_point(p, variant, from.g, opts) else { return Err(first) };
            let s = newton(p, variant, g, opts.tol, opts.max_newton)?;
            Ok(GreenReduced { g: s.g, residual: s.residual })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContinuationOrder {
    /// Anchor at `z0 = 0`, continue `alpha`, then `lambda`, then walk `z`.
    ZLast,
    /// Anchor at the target `z`, continue `alpha`, then `lambda`.
    LambdaLast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomotopyOptions {
    pub alpha_steps: usize,
    pub lambda_steps: usize,
    /// Initial step length when walking in the z plane.
    pub z_step: f64,
    /// Smallest step, as a fraction of a stage, before giving up.
    pub min_fraction: f64,
    /// Newton iterations allowed per continuation step; more means the
    /// step was too long.
    pub step_iterations: usize,
    pub order: ContinuationOrder,
    pub solver: SolverOptions,
}

impl Default for HomotopyOptions {
    fn default() -> Self {
        HomotopyOptions {
            alpha_steps: 10,
            lambda_steps: 10,
            z_step: 0.05,
            min_fraction: 1e-6,
            step_iterations: 12,
            order: ContinuationOrder::ZLast,
            solver: SolverOptions::default(),
        }
    }
}

/// Continues a solution along `path(s)`, `s` from 0 (where `start` solves
/// the equation) to 1, halving the step on failure.
fn continue_path(
    start: Mat4,
    path: impl Fn(f64) -> PasturPoint,
    steps: usize,
    variant: PasturVariant,
    opts: &HomotopyOptions,
    stage: &'static str,
) -> Result<Solved> {
    let max_ds = 1.0 / steps.max(1) as f64;
    let mut ds = max_ds;
    let mut s = 0.0;
    let mut g = start;
    let mut last = Solved { g, residual: f64::NAN, iterations: 0 };
    while s < 1.0 {
        let next = if s + ds > 1.0 - 1e-12 { 1.0 } else { s + ds };
        match newton(&path(next), variant, g, opts.solver.tol, opts.step_iterations) {
            Ok(solved) => {
                if solved.iterations <= 4 {
                    ds = (2.0 * ds).min(max_ds);
                }
                g = solved.g;
                s = next;
                last = solved;
            }
            Err(_) => {
                ds *= 0.5;
                if ds < opts.min_fraction {
                    let p = path(s);
                    return Err(Error::ContinuationBreakdown {
                        stage,
                        at: format!("s = {s:.6}, z = {}, alpha = {}, lambda = {}", p.z, p.alpha, p.lambda),
                    });
                }
            }
        }
    }
    Ok(last)
}

/// Walks a converged solution from `from` to `to` at fixed parameters.
pub fn walk_z(
    green: &GreenReduced,
    from: c64,
    to: c64,
    variant: PasturVariant,
    params: &PasturParams,
    opts: &HomotopyOptions,
) -> Result<GreenReduced> {
    if from == to {
        return Ok(*green);
    }
    let steps = ((to - from).norm() / opts.z_step).ceil() as usize;
    let path = |s: f64| PasturPoint::at(from + (to - from) * s, params);
    let solved = continue_path(green.g, path, steps, variant, opts, "z")?;
    Ok(GreenReduced { g: solved.g, residual: solved.residual })
}

/// Solution at `z` reached by continuation from the uncoupled problem.
pub fn solve_homotopy(
    z: c64,
    variant: PasturVariant,
    params: &PasturParams,
    opts: &HomotopyOptions,
) -> Result<GreenReduced> {
    params.validate()?;
    // A-type variants carry mu in the self-energy, so the uncoupled problem
    // is only solved by G0 at mu = 0; mu is then switched on with alpha.
    let a_type = !variant.mu_in_u();
    if params.alpha == 0.0 && !(a_type && params.mu != 0.0) {
        return g0_for(&PasturPoint::at(z, params), variant);
    }
    let anchor_lambda = if params.alpha > 0.0 { params.alpha } else { params.lambda };
    let z0 = match opts.order {
        ContinuationOrder::ZLast => c64::new(0.0, 0.0),
        ContinuationOrder::LambdaLast => z,
    };
    let base = PasturPoint::at(z0, &params.with_lambda(anchor_lambda));
    let mu_at = |s: f64| if a_type { s * params.mu } else { params.mu };
    let g0 = g0_for(&PasturPoint { alpha: 0.0, mu: mu_at(0.0), ..base }, variant)?;
    let stage_alpha = continue_path(
        g0.g,
        |s| PasturPoint { alpha: s * params.alpha, mu: mu_at(s), ..base },
        opts.alpha_steps,
        variant,
        opts,
        "alpha",
    )?;
    let ratio = params.lambda / anchor_lambda;
    let stage_lambda = continue_path(
        stage_alpha.g,
        |s| PasturPoint { lambda: anchor_lambda * ratio.powf(s), ..base },
        opts.lambda_steps,
        variant,
        opts,
        "lambda",
    )?;
    let green = GreenReduced { g: stage_lambda.g, residual: stage_lambda.residual };
    walk_z(&green, z0, z, variant, params, opts)
}

/// Mean density with the imaginary part of the difference quotient kept as
/// a diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub rho: f64,
    pub im_residue: f64,
    pub residual: f64,
}

/// `rho = (1/2pi) Re d/dz* (G11 + G22)` by a central difference in `z*`
/// at fixed `z`, starting from the converged `green` at `z`.
pub fn density_at(
    z: c64,
    variant: PasturVariant,
    params: &PasturParams,
    green: &GreenReduced,
    opts: &SolverOptions,
) -> Result<DensityPoint> {
    let h = 1e-5 * z.norm().max(1.0);
    let base = PasturPoint::at(z, params);
    let mut trace = [c64::new(0.0, 0.0); 2];
    let mut residual: f64 = green.residual;
    for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
        let p = PasturPoint { z_star: base.z_star + sign * h, ..base };
        let s = solve_point_with(&p, variant, green, opts)?;
        trace[k] = s.g[(0, 0)] + s.g[(1, 1)];
        residual = residual.max(s.residual);
    }
    let d = (trace[0] - trace[1]) / (2.0 * h) / (2.0 * PI);
    Ok(DensityPoint { rho: d.re, im_residue: d.im, residual })
}

/// Density at a single point, solving from scratch.
pub fn density(z: c64, variant: PasturVariant, params: &PasturParams, opts: &HomotopyOptions) -> Result<f64> {
    let green = solve_homotopy(z, variant, params, opts)?;
    Ok(density_at(z, variant, params, &green, &opts.solver)?.rho)
}
