use faer::{c64, Mat};

use super::sampling::{sample_antisym_with, sample_goe_with, sample_gue_with};
use super::{AntihermitianPart, EnsembleSpec, Family, HermitianPart, SymmetryClass};
use crate::error::{Error, Result};
use crate::seed;

/// Interface coupling `gamma = sqrt(T) / (1 + sqrt(1 - T))`.
pub fn coupling_gamma(t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("T = {t} out of [0,1]")));
    }
    Ok(t.sqrt() / (1.0 + (1.0 - t).sqrt()))
}

/// The random ingredients of one draw, split into real pieces so both the
/// complex matrix and (where it exists) a real similar matrix can be formed.
#[derive(Debug, Clone)]
struct Draw {
    h_re: Mat<f64>,
    /// `Im H` for U-type classes (antisymmetric).
    h_im: Option<Mat<f64>>,
    /// Antisymmetric `A` for A-type classes.
    a: Option<Mat<f64>>,
}

impl Draw {
    fn new(spec: &EnsembleSpec, seed: u64) -> Draw {
        let m = spec.m;
        let mut rng = seed::rng(seed);
        let (h_re, h_im) = match spec.class.hermitian_part() {
            HermitianPart::O => (sample_goe_with(m, &mut rng), None),
            HermitianPart::U => {
                let h = sample_gue_with(m, &mut rng);
                (
                    Mat::from_fn(m, m, |i, j| h[(i, j)].re),
                    Some(Mat::from_fn(m, m, |i, j| h[(i, j)].im)),
                )
            }
        };
        let a = match spec.class.antihermitian_part() {
            AntihermitianPart::AAntisym => Some(sample_antisym_with(m, spec.mu, &mut rng)),
            AntihermitianPart::OUniform => None,
        };
        Draw { h_re, h_im, a }
    }

    fn h(&self) -> Mat<c64> {
        let m = self.h_re.nrows();
        Mat::from_fn(m, m, |i, j| {
            c64::new(self.h_re[(i, j)], self.h_im.as_ref().map_or(0.0, |im| im[(i, j)]))
        })
    }
}

/// Resonator blocks of the effective Hamiltonian,
/// `[[H_L - i X_L, Gamma], [Gamma, H_R + i X_R]]`.
#[derive(Debug, Clone)]
pub struct HamiltonianParts {
    pub h_left: Mat<c64>,
    pub h_right: Mat<c64>,
    pub x_left: Mat<c64>,
    pub x_right: Mat<c64>,
    /// Diagonal of `Gamma`: `gamma` on the first `N` entries, zero after.
    pub coupling: Vec<f64>,
}

impl HamiltonianParts {
    pub fn assemble(&self) -> Mat<c64> {
        let m = self.h_left.nrows();
        let i = c64::new(0.0, 1.0);
        Mat::from_fn(2 * m, 2 * m, |r, c| match (r < m, c < m) {
            (true, true) => self.h_left[(r, c)] - i * self.x_left[(r, c)],
            (false, false) => self.h_right[(r - m, c - m)] + i * self.x_right[(r - m, c - m)],
            _ => {
                let (rr, cc) = (r % m, c % m);
                if rr == cc {
                    c64::new(self.coupling[rr], 0.0)
                } else {
                    c64::new(0.0, 0.0)
                }
            }
        })
    }
}

fn coupling_diag(spec: &EnsembleSpec) -> Result<Vec<f64>> {
    let g = coupling_gamma(spec.t)?;
    Ok((0..spec.m).map(|k| if k < spec.n { g } else { 0.0 }).collect())
}

fn check_gaussian(spec: &EnsembleSpec) -> Result<()> {
    spec.validate()?;
    if spec.family != Family::Gaussian {
        return Err(Error::Unconstructible(format!(
            "{} is a quantum-map ensemble; use build_quantum_map",
            spec.ensemble_name()
        )));
    }
    Ok(())
}

/// Resonator blocks for one draw, with the class constraints applied exactly.
pub fn hamiltonian_parts(spec: &EnsembleSpec, seed: u64) -> Result<HamiltonianParts> {
    check_gaussian(spec)?;
    let draw = Draw::new(spec, seed);
    Ok(parts_from_draw(spec, &draw)?)
}

fn parts_from_draw(spec: &EnsembleSpec, draw: &Draw) -> Result<HamiltonianParts> {
    let m = spec.m;
    let h = draw.h();
    let i = c64::new(0.0, 1.0);
    let conj = |x: &Mat<c64>| Mat::from_fn(m, m, |r, c| x[(r, c)].conj());
    let uniform = Mat::from_fn(m, m, |r, c| if r == c { c64::new(spec.mu, 0.0) } else { c64::new(0.0, 0.0) });
    let (h_right, x_left, x_right) = match spec.class {
        SymmetryClass::OO | SymmetryClass::UOprime => (h.clone(), uniform.clone(), uniform),
        SymmetryClass::UO => (conj(&h), uniform.clone(), uniform),
        SymmetryClass::OA | SymmetryClass::OAprime => {
            let a = draw.a.as_ref().expect("A-type draw carries A");
            // iX = -A  =>  X = iA
            let x = Mat::from_fn(m, m, |r, c| i * a[(r, c)]);
            if spec.class == SymmetryClass::OA {
                (h.clone(), x.clone(), conj(&x))
            } else {
                (h.clone(), x.clone(), x)
            }
        }
    };
    Ok(HamiltonianParts { h_left: h, h_right, x_left, x_right, coupling: coupling_diag(spec)? })
}

/// A `2M x 2M` effective Hamiltonian drawn from a Gaussian ensemble.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    pub matrix: Mat<c64>,
    pub spec: EnsembleSpec,
    pub seed: u64,
    /// Real matrix similar to `matrix`, for classes that admit one.
    pub real_form: Option<Mat<f64>>,
}

impl EffectiveHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn build_hamiltonian(spec: &EnsembleSpec, seed: u64) -> Result<EffectiveHamiltonian> {
    check_gaussian(spec)?;
    let draw = Draw::new(spec, seed);
    let matrix = parts_from_draw(spec, &draw)?.assemble();
    let real_form = real_form(spec, &draw)?;
    Ok(EffectiveHamiltonian { matrix, spec: *spec, seed, real_form })
}

/// Real similar matrices, obtained from the P-symmetric basis and (for
/// uniform amplification) a further conjugation by `diag(1, i)`:
///
/// * OO:  `[[H + G, mu], [-mu, H - G]]`
/// * UO:  `[[Re H + G, mu - Im H], [Im H - mu, Re H - G]]`
/// * OA:  `[[H + A + G, 0], [0, H + A - G]]`
/// * OA': `[[H + G, A], [A, H - G]]`
///
/// UO' has no real form of this kind.
fn real_form(spec: &EnsembleSpec, draw: &Draw) -> Result<Option<Mat<f64>>> {
    let m = spec.m;
    let g = coupling_diag(spec)?;
    let mu = spec.mu;
    let h = &draw.h_re;
    let gam = |r: usize, c: usize| if r == c { g[r] } else { 0.0 };
    let eye = |r: usize, c: usize| if r == c { 1.0 } else { 0.0 };
    let blocks: Box<dyn Fn(usize, usize, bool, bool) -> f64> = match spec.class {
        SymmetryClass::UOprime => return Ok(None),
        SymmetryClass::OO => Box::new(move |r, c, top, left| match (top, left) {
            (true, true) => h[(r, c)] + gam(r, c),
            (false, false) => h[(r, c)] - gam(r, c),
            (true, false) => mu * eye(r, c),
            (false, true) => -mu * eye(r, c),
        }),
        SymmetryClass::UO => {
            let im = draw.h_im.as_ref().expect("U-type draw carries Im H");
            Box::new(move |r, c, top, left| match (top, left) {
                (true, true) => h[(r, c)] + gam(r, c),
                (false, false) => h[(r, c)] - gam(r, c),
                (true, false) => mu * eye(r, c) - im[(r, c)],
                (false, true) => im[(r, c)] - mu * eye(r, c),
            })
        }
        SymmetryClass::OA => {
            let a = draw.a.as_ref().expect("A-type draw carries A");
            Box::new(move |r, c, top, left| match (top, left) {
                (true, true) => h[(r, c)] + a[(r, c)] + gam(r, c),
                (false, false) => h[(r, c)] + a[(r, c)] - gam(r, c),
                _ => 0.0,
            })
        }
        SymmetryClass::OAprime => {
            let a = draw.a.as_ref().expect("A-type draw carries A");
            Box::new(move |r, c, top, left| match (top, left) {
                (true, true) => h[(r, c)] + gam(r, c),
                (false, false) => h[(r, c)] - gam(r, c),
                _ => a[(r, c)],
            })
        }
    };
    Ok(Some(Mat::from_fn(2 * m, 2 * m, |r, c| blocks(r % m, c % m, r < m, c < m))))
}

/// `U H U` with `U = 2^{-1/2} (sigma_x + sigma_z) (x) 1_M`.
pub fn build_p_basis(h: &EffectiveHamiltonian) -> Result<Mat<c64>> {
    if h.spec.family != Family::Gaussian {
        return Err(Error::Unconstructible("P-basis transform needs a Gaussian ensemble".into()));
    }
    Ok(p_transform(&h.matrix))
}

pub(crate) fn p_transform(x: &Mat<c64>) -> Mat<c64> {
    let m = x.nrows() / 2;
    Mat::from_fn(2 * m, 2 * m, |r, c| {
        let (i, j) = (r % m, c % m);
        let a = x[(i, j)];
        let b = x[(i, j + m)];
        let cc = x[(i + m, j)];
        let d = x[(i + m, j + m)];
        let s = match (r < m, c < m) {
            (true, true) => a + b + cc + d,
            (true, false) => a - b + cc - d,
            (false, true) => a + b - cc - d,
            (false, false) => a - b - cc + d,
        };
        s * 0.5
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes() -> Vec<EnsembleSpec> {
        SymmetryClass::ALL
            .iter()
            .map(|&c| EnsembleSpec::gaussian(c, 12, 4, 0.6, 0.3).unwrap())
            .collect()
    }

    fn max_diff(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
        let mut w: f64 = 0.0;
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                w = w.max((a[(i, j)] - b[(i, j)]).norm());
            }
        }
        w
    }

    #[test]
    fn gamma_values() {
        assert_eq!(coupling_gamma(1.0).unwrap(), 1.0);
        assert_eq!(coupling_gamma(0.0).unwrap(), 0.0);
        // sqrt(0.96) / (1 + 0.2)
        let g = coupling_gamma(0.96).unwrap();
        assert!((g - 0.816_496_580_927_726).abs() < 1e-12, "{g}");
        assert!((g - 0.96f64.sqrt() / 1.2).abs() < 1e-15);
        assert!(coupling_gamma(1.01).is_err());
        assert!(coupling_gamma(-0.01).is_err());
        let mut prev = -1.0;
        for k in 0..=100 {
            let g = coupling_gamma(k as f64 / 100.0).unwrap();
            assert!(g > prev && (0.0..=1.0).contains(&g));
            prev = g;
        }
    }

    #[test]
    fn symmetry_constraints_hold_exactly() {
        for spec in classes() {
            let p = hamiltonian_parts(&spec, 5).unwrap();
            let m = spec.m;
            for i in 0..m {
                for j in 0..m {
                    match spec.class.time_reversal() {
                        super::super::TimeReversal::PT => {
                            assert_eq!(p.h_left[(i, j)], p.h_right[(i, j)].conj());
                            assert_eq!(p.x_left[(i, j)], p.x_right[(i, j)].conj());
                        }
                        super::super::TimeReversal::PTTprime => {
                            assert_eq!(p.h_left[(i, j)], p.h_right[(i, j)]);
                            assert_eq!(p.x_left[(i, j)], p.x_right[(i, j)]);
                        }
                    }
                    // hermitian parts
                    assert_eq!(p.h_left[(i, j)], p.h_left[(j, i)].conj());
                    assert_eq!(p.x_left[(i, j)], p.x_left[(j, i)].conj());
                }
            }
            let h = build_hamiltonian(&spec, 5).unwrap();
            assert_eq!(max_diff(&h.matrix, &p.assemble()), 0.0);
        }
    }

    #[test]
    fn coupling_matrix_structure() {
        let spec = EnsembleSpec::gaussian(SymmetryClass::OO, 10, 3, 0.5, 0.1).unwrap();
        let p = hamiltonian_parts(&spec, 1).unwrap();
        let g = coupling_gamma(0.5).unwrap();
        assert_eq!(p.coupling.iter().filter(|&&x| x != 0.0).count(), 3);
        assert!(p.coupling[..3].iter().all(|&x| x == g));
        assert!(p.coupling.iter().all(|&x| x >= 0.0));
        let h = build_hamiltonian(&spec, 1).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let expect = if i == j { p.coupling[i] } else { 0.0 };
                assert_eq!(h.matrix[(i, j + 10)], c64::new(expect, 0.0));
                assert_eq!(h.matrix[(i + 10, j)], c64::new(expect, 0.0));
            }
        }
    }

    #[test]
    fn p_basis_closed_forms() {
        let i = c64::new(0.0, 1.0);
        // OO: [[H + G, -i mu], [-i mu, H - G]]
        let spec = EnsembleSpec::gaussian(SymmetryClass::OO, 8, 3, 0.7, 0.25).unwrap();
        let h = build_hamiltonian(&spec, 2).unwrap();
        let p = build_p_basis(&h).unwrap();
        let parts = hamiltonian_parts(&spec, 2).unwrap();
        let m = 8;
        for r in 0..m {
            for c in 0..m {
                let g = if r == c { parts.coupling[r] } else { 0.0 };
                let hrc = parts.h_left[(r, c)];
                assert!((p[(r, c)] - (hrc + g)).norm() < 1e-15);
                assert!((p[(r + m, c + m)] - (hrc - g)).norm() < 1e-15);
                let off = if r == c { -i * 0.25 } else { c64::new(0.0, 0.0) };
                assert!((p[(r, c + m)] - off).norm() < 1e-15);
                assert!((p[(r + m, c)] - off).norm() < 1e-15);
            }
        }

        // OA: block diagonal [[H + A + G, 0], [0, H + A - G]]
        let spec = EnsembleSpec::gaussian(SymmetryClass::OA, 8, 3, 0.7, 0.25).unwrap();
        let h = build_hamiltonian(&spec, 2).unwrap();
        let p = build_p_basis(&h).unwrap();
        let parts = hamiltonian_parts(&spec, 2).unwrap();
        for r in 0..m {
            for c in 0..m {
                let g = if r == c { parts.coupling[r] } else { 0.0 };
                // H + A = H_L - i X_L
                let ha = parts.h_left[(r, c)] - i * parts.x_left[(r, c)];
                assert!((p[(r, c)] - (ha + g)).norm() < 1e-15);
                assert!((p[(r + m, c + m)] - (ha - g)).norm() < 1e-15);
                assert!(p[(r, c + m)].norm() < 1e-15);
                assert!(p[(r + m, c)].norm() < 1e-15);
            }
        }

        // OA': [[H + G, A], [A, H - G]]; UO: off-diagonal i Im H - i mu
        let spec = EnsembleSpec::gaussian(SymmetryClass::UO, 8, 3, 0.7, 0.25).unwrap();
        let h = build_hamiltonian(&spec, 2).unwrap();
        let p = build_p_basis(&h).unwrap();
        let parts = hamiltonian_parts(&spec, 2).unwrap();
        for r in 0..m {
            for c in 0..m {
                let hh = parts.h_left[(r, c)];
                let mu = if r == c { 0.25 } else { 0.0 };
                let expect = i * hh.im - i * mu;
                assert!((p[(r, c + m)] - expect).norm() < 1e-15);
                assert!((p[(r + m, c)] - expect).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn p_basis_offdiagonal_at_hermitian_limit() {
        for class in SymmetryClass::ALL {
            let spec = EnsembleSpec::gaussian(class, 10, 4, 0.5, 0.0).unwrap();
            let h = build_hamiltonian(&spec, 3).unwrap();
            let p = build_p_basis(&h).unwrap();
            let parts = hamiltonian_parts(&spec, 3).unwrap();
            let m = 10;
            let mut off: f64 = 0.0;
            let mut im_h: f64 = 0.0;
            for r in 0..m {
                for c in 0..m {
                    off = off.max(p[(r, c + m)].norm()).max(p[(r + m, c)].norm());
                    im_h = im_h.max(parts.h_left[(r, c)].im.abs());
                    if class == SymmetryClass::UO {
                        assert!((p[(r, c + m)] - c64::new(0.0, parts.h_left[(r, c)].im)).norm() < 1e-15);
                    }
                }
            }
            if class == SymmetryClass::UO {
                assert!((off - im_h).abs() < 1e-15 && off > 0.0);
            } else {
                assert!(off < 1e-15, "{class:?}: {off}");
            }
        }
    }

    #[test]
    fn real_form_presence() {
        for spec in classes() {
            let h = build_hamiltonian(&spec, 4).unwrap();
            assert_eq!(h.real_form.is_some(), spec.class != SymmetryClass::UOprime);
        }
    }

    #[test]
    fn circular_spec_rejected() {
        let spec = EnsembleSpec::circular(SymmetryClass::OO, 8, 2, 0.5, 0.1).unwrap();
        assert!(matches!(build_hamiltonian(&spec, 0), Err(Error::Unconstructible(_))));
    }
}
