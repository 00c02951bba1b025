use faer::{c64, Mat};

use super::sampling::{sample_circular_with, CircularKind};
use super::{AntihermitianPart, EnsembleSpec, Family, HermitianPart, SymmetryClass};
use crate::error::{Error, Result};
use crate::seed;

/// `sqrt(sqrt(R) + i sqrt(T))` with `R = 1 - T`, principal branch.
pub fn gamma_tilde(t: f64) -> Result<c64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("T = {t} out of [0,1]")));
    }
    Ok(c64::new((1.0 - t).sqrt(), t.sqrt()).sqrt())
}

/// Diagonal blocks of `sqrt(C) = [[d, o], [o, d]]`: `d = Re(g) P + Q`,
/// `o = -i Im(g) P`.
fn sqrt_coupling_diagonals(m: usize, n: usize, t: f64) -> Result<(Vec<c64>, Vec<c64>)> {
    let g = gamma_tilde(t)?;
    let d = (0..m).map(|k| if k < n { c64::new(g.re, 0.0) } else { c64::new(1.0, 0.0) }).collect();
    let o = (0..m).map(|k| if k < n { c64::new(0.0, -g.im) } else { c64::new(0.0, 0.0) }).collect();
    Ok((d, o))
}

/// Dense `sqrt(C)` of dimension `2M`.
pub fn sqrt_coupling(m: usize, n: usize, t: f64) -> Result<Mat<c64>> {
    let (d, o) = sqrt_coupling_diagonals(m, n, t)?;
    Ok(Mat::from_fn(2 * m, 2 * m, |r, c| {
        if r % m != c % m {
            c64::new(0.0, 0.0)
        } else if (r < m) == (c < m) {
            d[r % m]
        } else {
            o[r % m]
        }
    }))
}

/// One-period evolution operator of the coupled resonators.
#[derive(Debug, Clone)]
pub struct QuantumMap {
    pub matrix: Mat<c64>,
    pub spec: EnsembleSpec,
    pub seed: u64,
}

/// `F = sqrt(C) diag(e^{-mu} F_L, e^{mu} F_R) sqrt(C)` with `F_L = F_R^T` (PT)
/// or `F_L = F_R` (PTT'), `F` drawn from the COE (O) or CUE (U).
pub fn build_quantum_map(spec: &EnsembleSpec, seed: u64) -> Result<QuantumMap> {
    spec.validate()?;
    if spec.family != Family::Circular {
        return Err(Error::Unconstructible(format!(
            "{} is a Hamiltonian ensemble; use build_hamiltonian",
            spec.ensemble_name()
        )));
    }
    if spec.class.antihermitian_part() != AntihermitianPart::OUniform {
        return Err(Error::Unconstructible("quantum maps need uniform amplification".into()));
    }
    let m = spec.m;
    let kind = match spec.class.hermitian_part() {
        HermitianPart::O => CircularKind::Coe,
        HermitianPart::U => CircularKind::Cue,
    };
    let f_left = sample_circular_with(m, kind, &mut seed::rng(seed));
    let f_right = match spec.class {
        SymmetryClass::UOprime => f_left.clone(),
        _ => f_left.transpose().to_owned(),
    };
    let (d, o) = sqrt_coupling_diagonals(m, spec.n, spec.t)?;
    let loss = (-spec.mu).exp();
    let gain = spec.mu.exp();
    // with diagonal blocks, each entry of sqrt(C) D sqrt(C) is a sum of two
    // rescaled entries of F_L and F_R
    let matrix = Mat::from_fn(2 * m, 2 * m, |r, c| {
        let (i, j) = (r % m, c % m);
        let left = |a: c64, b: c64| a * loss * f_left[(i, j)] * b;
        let right = |a: c64, b: c64| a * gain * f_right[(i, j)] * b;
        match (r < m, c < m) {
            (true, true) => left(d[i], d[j]) + right(o[i], o[j]),
            (true, false) => left(d[i], o[j]) + right(o[i], d[j]),
            (false, true) => left(o[i], d[j]) + right(d[i], o[j]),
            (false, false) => left(o[i], o[j]) + right(d[i], d[j]),
        }
    });
    Ok(QuantumMap { matrix, spec: *spec, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unitarity(u: &Mat<c64>) -> f64 {
        let p = u.adjoint() * u;
        let mut w: f64 = 0.0;
        for i in 0..p.nrows() {
            for j in 0..p.ncols() {
                let t = if i == j { 1.0 } else { 0.0 };
                w = w.max((p[(i, j)] - c64::new(t, 0.0)).norm());
            }
        }
        w
    }

    #[test]
    fn gamma_tilde_at_full_transparency() {
        let g = gamma_tilde(1.0).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((g.re - s).abs() < 1e-15 && (g.im - s).abs() < 1e-15);
        assert_eq!(gamma_tilde(0.0).unwrap(), c64::new(1.0, 0.0));
        assert!(gamma_tilde(2.0).is_err());
    }

    #[test]
    fn coupling_square_is_unitary() {
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            let s = sqrt_coupling(6, 3, t).unwrap();
            let c = &s * &s;
            assert!(unitarity(&c) < 1e-14, "T = {t}");
            // C = [[sqrt(R) P + Q, -i sqrt(T) P], ...]
            assert!((c[(0, 6)] - c64::new(0.0, -t.sqrt())).norm() < 1e-14);
            assert!((c[(0, 0)] - c64::new((1.0 - t).sqrt(), 0.0)).norm() < 1e-14);
            assert!((c[(5, 5)] - c64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn unitary_at_zero_mu() {
        for class in [SymmetryClass::OO, SymmetryClass::UO, SymmetryClass::UOprime] {
            let spec = EnsembleSpec::circular(class, 40, 10, 0.7, 0.0).unwrap();
            let f = build_quantum_map(&spec, 3).unwrap();
            assert!(unitarity(&f.matrix) < 1e-12, "{class:?}");
        }
    }

    #[test]
    fn decoupled_when_no_channels() {
        let spec = EnsembleSpec::circular(SymmetryClass::UO, 10, 0, 0.5, 0.2).unwrap();
        assert_eq!(sqrt_coupling(10, 0, 0.5).unwrap(), Mat::<c64>::identity(20, 20));
        let f = build_quantum_map(&spec, 1).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                assert_eq!(f.matrix[(i, j + 10)], c64::new(0.0, 0.0));
                assert_eq!(f.matrix[(i + 10, j)], c64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn matches_dense_product() {
        let spec = EnsembleSpec::circular(SymmetryClass::UO, 7, 3, 0.4, 0.3).unwrap();
        let f = build_quantum_map(&spec, 21).unwrap();
        let fl = sample_circular_with(7, CircularKind::Cue, &mut seed::rng(21));
        let fr = fl.transpose().to_owned();
        let mut d = Mat::<c64>::zeros(14, 14);
        for i in 0..7 {
            for j in 0..7 {
                d[(i, j)] = fl[(i, j)] * (-0.3f64).exp();
                d[(i + 7, j + 7)] = fr[(i, j)] * 0.3f64.exp();
            }
        }
        let s = sqrt_coupling(7, 3, 0.4).unwrap();
        let dense = &s * &d * &s;
        for i in 0..14 {
            for j in 0..14 {
                assert!((dense[(i, j)] - f.matrix[(i, j)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn gaussian_spec_rejected() {
        let spec = EnsembleSpec::gaussian(SymmetryClass::OO, 8, 2, 0.5, 0.1).unwrap();
        assert!(build_quantum_map(&spec, 0).is_err());
    }
}
