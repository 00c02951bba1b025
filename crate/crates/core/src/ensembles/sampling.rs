use faer::{c64, Mat};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::seed;

#[inline]
fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Real symmetric Gaussian matrix with off-diagonal variance `1/M` and
/// diagonal variance `2/M` (semicircle of radius 2).
pub fn sample_goe(m: usize, seed: u64) -> Result<Mat<f64>> {
    check_dim(m)?;
    Ok(sample_goe_with(m, &mut seed::rng(seed)))
}

pub fn sample_goe_with<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Mat<f64> {
    let off = (1.0 / m as f64).sqrt();
    let diag = (2.0 / m as f64).sqrt();
    let mut h = Mat::<f64>::zeros(m, m);
    for i in 0..m {
        h[(i, i)] = diag * normal(rng);
        for j in (i + 1)..m {
            let x = off * normal(rng);
            h[(i, j)] = x;
            h[(j, i)] = x;
        }
    }
    h
}

/// Complex hermitian Gaussian matrix with `E|H_lm|^2 = 1/M` for every entry.
pub fn sample_gue(m: usize, seed: u64) -> Result<Mat<c64>> {
    check_dim(m)?;
    Ok(sample_gue_with(m, &mut seed::rng(seed)))
}

pub fn sample_gue_with<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Mat<c64> {
    let diag = (1.0 / m as f64).sqrt();
    let off = (0.5 / m as f64).sqrt();
    let mut h = Mat::<c64>::zeros(m, m);
    for i in 0..m {
        h[(i, i)] = c64::new(diag * normal(rng), 0.0);
        for j in (i + 1)..m {
            let x = c64::new(off * normal(rng), off * normal(rng));
            h[(i, j)] = x;
            h[(j, i)] = x.conj();
        }
    }
    h
}

/// Real antisymmetric Gaussian matrix normalized so that
/// `E[tr A A^T] / M = mu^2` exactly (per-element variance `mu^2/(M-1)`).
pub fn sample_antisym(m: usize, mu: f64, seed: u64) -> Result<Mat<f64>> {
    check_dim(m)?;
    if !(mu >= 0.0) {
        return Err(Error::Domain(format!("mu = {mu} must be nonnegative")));
    }
    if m < 2 && mu > 0.0 {
        return Err(Error::Domain("antisymmetric matrix with mu > 0 needs M >= 2".into()));
    }
    Ok(sample_antisym_with(m, mu, &mut seed::rng(seed)))
}

/// Draws the unit-normalized antisymmetric matrix and scales it by `mu`, so
/// the same random stream yields proportional matrices for every `mu`.
pub fn sample_antisym_with<R: Rng + ?Sized>(m: usize, mu: f64, rng: &mut R) -> Mat<f64> {
    let mut a = Mat::<f64>::zeros(m, m);
    if m < 2 {
        return a;
    }
    let sd = mu / ((m - 1) as f64).sqrt();
    for i in 0..m {
        for j in (i + 1)..m {
            let x = sd * normal(rng);
            a[(i, j)] = x;
            a[(j, i)] = -x;
        }
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircularKind {
    Coe,
    Cue,
}

/// Haar unitary (CUE) or `U^T U` with Haar `U` (COE).
pub fn sample_circular(m: usize, kind: CircularKind, seed: u64) -> Result<Mat<c64>> {
    check_dim(m)?;
    Ok(sample_circular_with(m, kind, &mut seed::rng(seed)))
}

pub fn sample_circular_with<R: Rng + ?Sized>(m: usize, kind: CircularKind, rng: &mut R) -> Mat<c64> {
    let u = haar_unitary(m, rng);
    match kind {
        CircularKind::Cue => u,
        CircularKind::Coe => {
            let f = u.transpose() * &u;
            // symmetrize so F = F^T holds bitwise
            Mat::from_fn(m, m, |i, j| (f[(i, j)] + f[(j, i)]) * 0.5)
        }
    }
}

fn haar_unitary<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Mat<c64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = Mat::<c64>::from_fn(m, m, |_, _| c64::new(s * normal(rng), s * normal(rng)));
    let qr = z.qr();
    let mut q = qr.compute_Q();
    let r = qr.R();
    // Q * diag(r_ii / |r_ii|) makes the factorization unique, which is what
    // turns QR of a Ginibre matrix into a Haar sample.
    for j in 0..m {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { c64::new(1.0, 0.0) };
        for i in 0..m {
            q[(i, j)] *= phase;
        }
    }
    q
}

fn check_dim(m: usize) -> Result<()> {
    if m == 0 {
        Err(Error::Domain("matrix dimension must be positive".into()))
    } else {
        Ok(())
    }
}
