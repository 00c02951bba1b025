//! Fixed-size 4x4 complex matrices and a small dense linear solver.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
const ONE: c64 = c64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat4(pub [[c64; 4]; 4]);

impl Mat4 {
    pub const fn zeros() -> Self {
        Mat4([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        Self::diag([ONE; 4])
    }

    pub fn diag(d: [c64; 4]) -> Self {
        let mut m = Self::zeros();
        for (i, x) in d.into_iter().enumerate() {
            m.0[i][i] = x;
        }
        m
    }

    pub fn from_fn(f: impl Fn(usize, usize) -> c64) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn scale(&self, s: c64) -> Self {
        Self::from_fn(|i, j| self.0[i][j] * s)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i])
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn inverse(&self) -> Result<Self> {
        let mut a: Vec<c64> = self.0.iter().flatten().copied().collect();
        let mut b: Vec<c64> = Self::identity().0.iter().flatten().copied().collect();
        solve_in_place(&mut a, 4, &mut b, 4)?;
        Ok(Self::from_fn(|i, j| b[4 * i + j]))
    }

    pub fn to_vec16(&self) -> [c64; 16] {
        let mut v = [ZERO; 16];
        for i in 0..4 {
            for j in 0..4 {
                v[4 * i + j] = self.0[i][j];
            }
        }
        v
    }

    pub fn from_vec16(v: &[c64]) -> Self {
        Self::from_fn(|i, j| v[4 * i + j])
    }
}

impl Index<(usize, usize)> for Mat4 {
    type Output = c64;
    fn index(&self, (i, j): (usize, usize)) -> &c64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat4 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut c64 {
        &mut self.0[i][j]
    }
}

impl Add for Mat4 {
    type Output = Mat4;
    fn add(self, rhs: Mat4) -> Mat4 {
        Mat4::from_fn(|i, j| self.0[i][j] + rhs.0[i][j])
    }
}

impl Sub for Mat4 {
    type Output = Mat4;
    fn sub(self, rhs: Mat4) -> Mat4 {
        Mat4::from_fn(|i, j| self.0[i][j] - rhs.0[i][j])
    }
}

impl Mul for Mat4 {
    type Output = Mat4;
    fn mul(self, rhs: Mat4) -> Mat4 {
        Mat4::from_fn(|i, j| (0..4).map(|k| self.0[i][k] * rhs.0[k][j]).sum())
    }
}

impl Mul<f64> for Mat4 {
    type Output = Mat4;
    fn mul(self, s: f64) -> Mat4 {
        Mat4::from_fn(|i, j| self.0[i][j] * s)
    }
}

/// Solves `A X = B` by Gaussian elimination with partial pivoting.
/// `a` is `n x n` and `b` is `n x m`, both row-major; `b` is overwritten by X.
pub(crate) fn solve_in_place(a: &mut [c64], n: usize, b: &mut [c64], m: usize) -> Result<()> {
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::SingularInversion);
    }
    for col in 0..n {
        let (p, best) = (col..n)
            .map(|r| (r, a[r * n + col].norm()))
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= 1e-14 * scale {
            return Err(Error::SingularInversion);
        }
        if p != col {
            for k in 0..n {
                a.swap(col * n + k, p * n + k);
            }
            for k in 0..m {
                b.swap(col * m + k, p * m + k);
            }
        }
        let inv = a[col * n + col].inv();
        for r in (col + 1)..n {
            let f = a[r * n + col] * inv;
            if f == ZERO {
                continue;
            }
            for k in col..n {
                let t = a[col * n + k];
                a[r * n + k] -= f * t;
            }
            for k in 0..m {
                let t = b[col * m + k];
                b[r * m + k] -= f * t;
            }
        }
    }
    for col in (0..n).rev() {
        let inv = a[col * n + col].inv();
        for k in 0..m {
            let mut s = b[col * m + k];
            for j in (col + 1)..n {
                s -= a[col * n + j] * b[j * m + k];
            }
            b[col * m + k] = s * inv;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(seed: u64) -> Mat4 {
        let mut s = seed;
        let mut next = || {
            s = crate::seed::mix64(s);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut m = Mat4::zeros();
        for z in m.0.iter_mut().flatten() {
            *z = c64::new(next(), next());
        }
        m
    }

    #[test]
    fn inverse_round_trip() {
        for seed in 0..20 {
            let a = sample(seed);
            let ai = a.inverse().unwrap();
            assert!((a * ai - Mat4::identity()).norm() < 1e-11);
            assert!((ai * a - Mat4::identity()).norm() < 1e-11);
        }
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let p = Mat4::from_fn(|i, j| if (i + 1) % 4 == j { ONE } else { ZERO });
        let pi = p.inverse().unwrap();
        assert_eq!(pi, p.transpose());
    }

    #[test]
    fn singular_is_reported() {
        let mut a = sample(3);
        for j in 0..4 {
            a[(3, j)] = a[(0, j)] * 2.0;
        }
        assert!(matches!(a.inverse(), Err(Error::SingularInversion)));
        assert!(matches!(Mat4::zeros().inverse(), Err(Error::SingularInversion)));
    }
}
