//! Spectra of effective Hamiltonians and quantum maps, classification into
//! real eigenvalues and conjugate pairs, and the statistics built on them.

mod spacing;

pub use spacing::{
    gue_surmise_cdf, gue_surmise_pdf, ks_distance, spacing_histogram, wigner_surmise_cdf,
    wigner_surmise_pdf, SpacingConfig, SpacingHistogram, SpacingMode,
};

use std::cmp::Ordering;
use std::f64::consts::PI;

use faer::{c64, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::ensembles::{build_hamiltonian, build_quantum_map, EnsembleSpec, Family};
use crate::error::{Error, Result};

/// Relative threshold on `|Im E|` below which an eigenvalue from a complex
/// eigensolver counts as real; also the strict pairing tolerance.
pub const EPS_REAL: f64 = 1e-8;

/// Second-pass tolerance for pairing eigenvalues whose conditioning is poor
/// (close to a coalescence). Unpaired leftovers below it are taken as real.
pub const EPS_LOOSE: f64 = 1e-6;

/// Central window `|Re E| <= 0.5` used for the Gaussian family.
pub const CENTRAL_WINDOW: (f64, f64) = (-0.5, 0.5);

/// Borrowed dense input matrix.
#[derive(Clone, Copy)]
pub enum MatrixInput<'a> {
    Real(MatRef<'a, f64>),
    Complex(MatRef<'a, c64>),
}

/// Eigenvalues plus whether their realness is exact (real Schur or
/// self-adjoint path: real eigenvalues carry an imaginary part of exactly 0).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<c64>,
    pub exact_real: bool,
}

pub fn eigenvalues(input: MatrixInput<'_>) -> Result<Spectrum> {
    match input {
        MatrixInput::Real(m) => Ok(Spectrum { values: real_eigenvalues(m)?, exact_real: true }),
        MatrixInput::Complex(m) => complex_eigenvalues(m),
    }
}

fn square(rows: usize, cols: usize) -> Result<()> {
    if rows != cols {
        return Err(Error::Domain(format!("matrix is {rows}x{cols}, not square")));
    }
    Ok(())
}

fn finite_real(m: MatRef<'_, f64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::Domain("matrix has non-finite entries".into()));
            }
        }
    }
    Ok(())
}

/// Split point `k = n/2` if both off-diagonal blocks vanish exactly.
fn halves_decouple<T: PartialEq + Copy>(m: MatRef<'_, T>, zero: T) -> Option<usize> {
    let n = m.nrows();
    if n < 2 || n % 2 != 0 {
        return None;
    }
    let k = n / 2;
    for j in 0..n {
        for i in 0..n {
            if (i < k) != (j < k) && m[(i, j)] != zero {
                return None;
            }
        }
    }
    Some(k)
}

fn real_eigenvalues(m: MatRef<'_, f64>) -> Result<Vec<c64>> {
    square(m.nrows(), m.ncols())?;
    finite_real(m)?;
    if let Some(k) = halves_decouple(m, 0.0) {
        let mut out = real_eigenvalues(m.submatrix(0, 0, k, k))?;
        out.extend(real_eigenvalues(m.submatrix(k, k, k, k))?);
        return Ok(out);
    }
    let n = m.nrows();
    let fail = |_| Error::Convergence { rows: n, cols: n, kind: "real" };
    let symmetric = (0..n).all(|j| (0..j).all(|i| m[(i, j)] == m[(j, i)]));
    if symmetric {
        let vals = m.self_adjoint_eigenvalues(Side::Lower).map_err(fail)?;
        return Ok(vals.into_iter().map(|x| c64::new(x, 0.0)).collect());
    }
    m.eigenvalues().map_err(fail)
}

fn complex_eigenvalues(m: MatRef<'_, c64>) -> Result<Spectrum> {
    square(m.nrows(), m.ncols())?;
    let n = m.nrows();
    for j in 0..n {
        for i in 0..n {
            let x = m[(i, j)];
            if !(x.re.is_finite() && x.im.is_finite()) {
                return Err(Error::Domain("matrix has non-finite entries".into()));
            }
        }
    }
    if let Some(k) = halves_decouple(m, c64::new(0.0, 0.0)) {
        let a = complex_eigenvalues(m.submatrix(0, 0, k, k))?;
        let b = complex_eigenvalues(m.submatrix(k, k, k, k))?;
        let mut values = a.values;
        values.extend(b.values);
        return Ok(Spectrum { values, exact_real: a.exact_real && b.exact_real });
    }
    let fail = |_| Error::Convergence { rows: n, cols: n, kind: "complex" };
    let hermitian = (0..n).all(|j| (0..=j).all(|i| m[(i, j)] == m[(j, i)].conj()));
    if hermitian {
        let vals = m.self_adjoint_eigenvalues(Side::Lower).map_err(fail)?;
        return Ok(Spectrum { values: vals.into_iter().map(|x| c64::new(x, 0.0)).collect(), exact_real: true });
    }
    Ok(Spectrum { values: m.eigenvalues().map_err(fail)?, exact_real: false })
}

/// Indices of real eigenvalues and of conjugate pairs `(upper, lower)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Classification {
    pub real: Vec<usize>,
    pub pairs: Vec<(usize, usize)>,
}

impl Classification {
    pub fn n_real(&self) -> usize {
        self.real.len()
    }
}

fn spectral_scale(eigs: &[c64]) -> f64 {
    eigs.iter().map(|z| z.norm()).fold(1.0, f64::max)
}

/// Tolerance-based classification: an eigenvalue is real iff
/// `|Im E| < EPS_REAL * scale`; all others must pair with a conjugate.
pub fn classify(eigs: &[c64], scale: f64) -> Result<Classification> {
    let tol = EPS_REAL * scale;
    classify_by(eigs, |z| z.im.abs() < tol, scale)
}

/// Classification that trusts exact zeros from a real or self-adjoint solver.
pub fn classify_spectrum(spectrum: &Spectrum) -> Result<Classification> {
    let scale = spectral_scale(&spectrum.values);
    if spectrum.exact_real {
        classify_by(&spectrum.values, |z| z.im == 0.0, scale)
    } else {
        classify(&spectrum.values, scale)
    }
}

fn classify_by(eigs: &[c64], is_real: impl Fn(c64) -> bool, scale: f64) -> Result<Classification> {
    let mut out = Classification::default();
    let mut rest = Vec::new();
    for (i, &z) in eigs.iter().enumerate() {
        if is_real(z) {
            out.real.push(i);
        } else {
            rest.push(i);
        }
    }
    rest.sort_by(|&a, &b| {
        let (za, zb) = (eigs[a], eigs[b]);
        za.re.total_cmp(&zb.re).then(za.im.abs().total_cmp(&zb.im.abs())).then(a.cmp(&b))
    });
    let mut matched = vec![false; rest.len()];
    for tol in [EPS_REAL * scale, EPS_LOOSE * scale] {
        greedy_pairs(eigs, &rest, &mut matched, tol, &mut out.pairs);
    }
    for (k, &i) in rest.iter().enumerate() {
        if matched[k] {
            continue;
        }
        let z = eigs[i];
        if z.im.abs() < EPS_LOOSE * scale {
            out.real.push(i);
        } else {
            return Err(Error::SymmetryViolation {
                value: format!("{z}"),
                im: z.im.abs(),
                tolerance: EPS_LOOSE * scale,
            });
        }
    }
    out.real.sort_unstable();
    Ok(out)
}

/// Matches each unmatched entry with the nearest unmatched conjugate among
/// the entries whose real part lies within `tol` ahead of it.
fn greedy_pairs(eigs: &[c64], order: &[usize], matched: &mut [bool], tol: f64, pairs: &mut Vec<(usize, usize)>) {
    for k in 0..order.len() {
        if matched[k] {
            continue;
        }
        let zk = eigs[order[k]];
        let mut best: Option<(usize, f64)> = None;
        for j in (k + 1)..order.len() {
            let zj = eigs[order[j]];
            if zj.re - zk.re > tol {
                break;
            }
            if matched[j] || zj.im.signum() == zk.im.signum() {
                continue;
            }
            let d = (zk - zj.conj()).norm();
            if d < tol && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        if let Some((j, _)) = best {
            matched[k] = true;
            matched[j] = true;
            let (a, b) = (order[k], order[j]);
            pairs.push(if eigs[a].im > 0.0 { (a, b) } else { (b, a) });
        }
    }
}

/// Quasienergies `E = i ln(lambda)` (principal branch, `tau = 1`).
pub fn quasienergies(map_eigs: &[c64]) -> Result<Vec<c64>> {
    let i = c64::new(0.0, 1.0);
    map_eigs
        .iter()
        .map(|&l| if l.norm() == 0.0 { Err(Error::SingularMap) } else { Ok(i * l.ln()) })
        .collect()
}

/// Classification of quasienergies, whose real parts live on a circle of
/// circumference `2 pi`. The cut is moved into the widest gap first so
/// conjugate partners straddling `+-pi` stay adjacent.
pub fn classify_quasienergies(energies: &[c64]) -> Result<Classification> {
    if energies.is_empty() {
        return Ok(Classification::default());
    }
    let mut res: Vec<f64> = energies.iter().map(|e| e.re.rem_euclid(2.0 * PI)).collect();
    res.sort_by(f64::total_cmp);
    let mut cut = 0.0;
    let mut widest = -1.0;
    for k in 0..res.len() {
        let next = if k + 1 < res.len() { res[k + 1] } else { res[0] + 2.0 * PI };
        if next - res[k] > widest {
            widest = next - res[k];
            cut = res[k] + 0.5 * widest;
        }
    }
    let shifted: Vec<c64> =
        energies.iter().map(|e| c64::new((e.re - cut).rem_euclid(2.0 * PI), e.im)).collect();
    // |Im E| = |ln|lambda||; the scale is set by the phase range
    classify(&shifted, 2.0 * PI)
}

/// One draw's spectrum with its classification and provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSample {
    /// Energies; quasienergies for the circular family.
    pub eigenvalues: Vec<c64>,
    pub is_real: Vec<bool>,
    pub n_real: usize,
    pub pairs: Vec<(usize, usize)>,
    pub spec: EnsembleSpec,
    pub seed: u64,
}

impl SpectrumSample {
    pub fn from_classification(eigenvalues: Vec<c64>, class: Classification, spec: EnsembleSpec, seed: u64) -> Self {
        let mut is_real = vec![false; eigenvalues.len()];
        for &i in &class.real {
            is_real[i] = true;
        }
        SpectrumSample { n_real: class.real.len(), pairs: class.pairs, eigenvalues, is_real, spec, seed }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// Draws one member of the ensemble and classifies its spectrum.
pub fn sample_spectrum(spec: &EnsembleSpec, seed: u64) -> Result<SpectrumSample> {
    match spec.family {
        Family::Gaussian => {
            let h = build_hamiltonian(spec, seed)?;
            let spectrum = match &h.real_form {
                Some(r) => eigenvalues(MatrixInput::Real(r.as_ref()))?,
                None => eigenvalues(MatrixInput::Complex(h.matrix.as_ref()))?,
            };
            let class = classify_spectrum(&spectrum)?;
            Ok(SpectrumSample::from_classification(spectrum.values, class, *spec, seed))
        }
        Family::Circular => {
            let f = build_quantum_map(spec, seed)?;
            let lambdas = eigenvalues(MatrixInput::Complex(f.matrix.as_ref()))?;
            let energies = quasienergies(&lambdas.values)?;
            let class = classify_quasienergies(&energies)?;
            Ok(SpectrumSample::from_classification(energies, class, *spec, seed))
        }
    }
}

fn window_counts(sample: &SpectrumSample, window: Option<(f64, f64)>) -> Result<(usize, usize)> {
    let window = match sample.spec.family {
        Family::Gaussian => window,
        Family::Circular => None,
    };
    let mut total = 0;
    let mut complex = 0;
    for (z, &real) in sample.eigenvalues.iter().zip(&sample.is_real) {
        if let Some((lo, hi)) = window {
            if z.re < lo || z.re > hi {
                continue;
            }
        }
        total += 1;
        if !real {
            complex += 1;
        }
    }
    if total == 0 {
        let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
        return Err(Error::EmptyWindow { lo, hi });
    }
    Ok((complex, total))
}

/// Fraction of complex eigenvalues, restricted to `Re E` in `window` for
/// the Gaussian family (circular spectra always use all quasienergies).
pub fn complex_fraction(sample: &SpectrumSample, window: Option<(f64, f64)>) -> Result<f64> {
    let (c, t) = window_counts(sample, window)?;
    Ok(c as f64 / t as f64)
}

pub fn real_fraction(sample: &SpectrumSample, window: Option<(f64, f64)>) -> Result<f64> {
    Ok(1.0 - complex_fraction(sample, window)?)
}

pub(crate) fn sort_reals(v: &mut [f64]) {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
}
