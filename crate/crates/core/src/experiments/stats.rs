use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Weighted least-squares monotone (nondecreasing) fit, pool-adjacent-violators.
pub fn isotonic(y: &[f64], w: &[f64]) -> Vec<f64> {
    // blocks of (mean, weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&v, &wt) in y.iter().zip(w) {
        blocks.push((v, wt, 1));
        while blocks.len() > 1 {
            let (b, a) = (blocks[blocks.len() - 1], blocks[blocks.len() - 2]);
            if a.0 <= b.0 {
                break;
            }
            let wsum = a.1 + b.1;
            let merged = ((a.0 * a.1 + b.0 * b.1) / wsum, wsum, a.2 + b.2);
            blocks.pop();
            *blocks.last_mut().unwrap() = merged;
        }
    }
    blocks.into_iter().flat_map(|(m, _, len)| std::iter::repeat_n(m, len)).collect()
}

/// Where the piecewise-linear curve through `(x, y)` first reaches `level`.
pub fn crossing(x: &[f64], y: &[f64], level: f64) -> Result<f64> {
    let out = || Error::OutOfRange {
        lo: y.iter().cloned().fold(f64::INFINITY, f64::min),
        hi: y.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    };
    let k = y.iter().position(|&v| v >= level).ok_or_else(out)?;
    if k == 0 {
        return if y[0] == level { Ok(x[0]) } else { Err(out()) };
    }
    let (x0, x1, y0, y1) = (x[k - 1], x[k], y[k - 1], y[k]);
    Ok(x0 + (level - y0) / (y1 - y0) * (x1 - x0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
}

/// Ordinary least squares `y = intercept + slope x` with the usual slope
/// standard error. Needs at least four points and some spread in `y`.
pub fn linear_fit(x: Vec<f64>, y: Vec<f64>) -> Result<ScalingFit> {
    let n = x.len();
    if n < 4 || y.len() != n {
        return Err(Error::DegenerateFit(format!("need >= 4 points, got {n}")));
    }
    if x.iter().chain(&y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit("non-finite input".into()));
    }
    let nf = n as f64;
    let (mx, my) = (x.iter().sum::<f64>() / nf, y.iter().sum::<f64>() / nf);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all x equal".into()));
    }
    if syy == 0.0 {
        return Err(Error::DegenerateFit("all y equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_stderr = (ssr / (nf - 2.0) / sxx).sqrt();
    Ok(ScalingFit { x, y, slope, slope_stderr, intercept })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mean_and_error() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_stderr(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn pava_examples() {
        let w = [1.0; 5];
        assert_eq!(isotonic(&[1.0, 3.0, 2.0, 4.0, 5.0], &w), vec![1.0, 2.5, 2.5, 4.0, 5.0]);
        assert_eq!(isotonic(&[3.0, 2.0, 1.0, 0.0, 5.0], &w), vec![1.5, 1.5, 1.5, 1.5, 5.0]);
        assert_eq!(isotonic(&[2.0, 1.0], &[3.0, 1.0]), vec![1.75, 1.75]);
    }

    #[test]
    fn crossing_by_hand() {
        assert_eq!(crossing(&[0.0, 1.0, 2.0], &[0.0, 0.5, 1.0], 0.5).unwrap(), 1.0);
        assert_eq!(crossing(&[0.0, 2.0], &[0.0, 1.0], 0.25).unwrap(), 0.5);
        assert!(matches!(crossing(&[0.0, 1.0], &[0.0, 0.4], 0.5), Err(Error::OutOfRange { .. })));
        assert!(crossing(&[0.0, 1.0], &[0.6, 0.9], 0.5).is_err());
    }

    #[test]
    fn exact_line_fit() {
        let x: Vec<f64> = (0..6).map(|k| k as f64).collect();
        let y: Vec<f64> = x.iter().map(|a| 1.5 - 0.5 * a).collect();
        let f = linear_fit(x, y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14 && f.slope_stderr < 1e-12);
        assert!((f.intercept - 1.5).abs() < 1e-14);
        assert!(linear_fit(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]).is_err());
        assert!(linear_fit(vec![1.0, 2.0, 3.0, 4.0], vec![1.0; 4]).is_err());
    }

    #[test]
    fn slope_error_matches_textbook() {
        // y = x + (+-1 alternating): residuals known, slope stderr closed form
        let x = vec![0.0, 1.0, 2.0, 3.0];
        let y = vec![1.0, 0.0, 3.0, 2.0];
        let f = linear_fit(x, y).unwrap();
        assert!((f.slope - 0.6).abs() < 1e-14);
        let ssr: f64 = [0.4f64, -1.2, 1.2, -0.4].iter().map(|r| r * r).sum();
        assert!((f.slope_stderr - (ssr / 2.0 / 5.0).sqrt()).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn isotonic_is_monotone_and_mean_preserving(y in prop::collection::vec(-5.0f64..5.0, 1..40)) {
            let w = vec![1.0; y.len()];
            let fit = isotonic(&y, &w);
            prop_assert_eq!(fit.len(), y.len());
            prop_assert!(fit.windows(2).all(|p| p[0] <= p[1] + 1e-12));
            let (a, b): (f64, f64) = (y.iter().sum(), fit.iter().sum());
            prop_assert!((a - b).abs() < 1e-9);
            // already sorted input is a fixed point
            let mut s = y.clone();
            s.sort_by(f64::total_cmp);
            prop_assert_eq!(isotonic(&s, &w), s);
        }
    }
}
