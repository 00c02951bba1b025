use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::sort_reals;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpacingMode {
    /// All sequences of a sample merged into one spectrum.
    Superposed,
    /// Only the first sequence of each sample.
    SingleSequence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacingConfig {
    /// Levels outside this interval are dropped; `None` keeps everything.
    pub window: Option<(f64, f64)>,
    pub bins: usize,
    pub s_max: f64,
    /// Period for levels on a circle (quasienergies); the wrap-around
    /// spacing is then included.
    pub period: Option<f64>,
}

impl Default for SpacingConfig {
    fn default() -> Self {
        SpacingConfig { window: Some(super::CENTRAL_WINDOW), bins: 40, s_max: 4.0, period: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpacingHistogram {
    pub bin_edges: Vec<f64>,
    /// Probability densities per bin.
    pub counts: Vec<f64>,
    /// Mean raw spacing used to rescale to unit mean.
    pub mean_spacing: f64,
    pub mode: SpacingMode,
    /// Rescaled spacings, sorted ascending.
    pub spacings: Vec<f64>,
    /// Spacings beyond `s_max`, excluded from the densities.
    pub overflow: usize,
}

impl SpacingHistogram {
    pub fn bin_width(&self) -> f64 {
        self.bin_edges[1] - self.bin_edges[0]
    }

    pub fn integral(&self) -> f64 {
        self.counts.iter().sum::<f64>() * self.bin_width()
    }

    /// First moment computed from bin midpoints.
    pub fn histogram_mean(&self) -> f64 {
        let w = self.bin_width();
        self.counts.iter().enumerate().map(|(k, p)| (self.bin_edges[k] + 0.5 * w) * p * w).sum()
    }

    pub fn sample_mean(&self) -> f64 {
        self.spacings.iter().sum::<f64>() / self.spacings.len() as f64
    }

    pub fn sample_stderr(&self) -> f64 {
        let n = self.spacings.len() as f64;
        let mean = self.sample_mean();
        let var = self.spacings.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    }
}

fn raw_spacings(levels: &[f64], config: &SpacingConfig, out: &mut Vec<f64>) {
    let mut kept: Vec<f64> = levels
        .iter()
        .copied()
        .filter(|&e| config.window.is_none_or(|(lo, hi)| e >= lo && e <= hi))
        .collect();
    sort_reals(&mut kept);
    out.extend(kept.windows(2).map(|w| w[1] - w[0]));
    if let (Some(p), Some(first), Some(last)) = (config.period, kept.first(), kept.last()) {
        if kept.len() > 1 {
            out.push(first + p - last);
        }
    }
}

/// Nearest-neighbour spacing distribution pooled over samples.
///
/// Each entry of `samples` holds one draw's level sequences (e.g. the
/// spectra of `H + Gamma` and `H - Gamma`). Spacings are taken within the
/// window, rescaled by their pooled mean and histogrammed on `[0, s_max]`.
pub fn spacing_histogram(
    samples: &[Vec<Vec<f64>>],
    mode: SpacingMode,
    config: &SpacingConfig,
) -> Result<SpacingHistogram> {
    if config.bins == 0 || !(config.s_max > 0.0) {
        return Err(Error::Domain("histogram needs bins > 0 and s_max > 0".into()));
    }
    let mut raw = Vec::new();
    let mut levels_seen = 0;
    for sample in samples {
        let merged: Vec<f64> = match mode {
            SpacingMode::Superposed => sample.iter().flatten().copied().collect(),
            SpacingMode::SingleSequence => sample.first().cloned().unwrap_or_default(),
        };
        let before = raw.len();
        raw_spacings(&merged, config, &mut raw);
        levels_seen += raw.len() - before;
    }
    if raw.is_empty() {
        return Err(Error::TooFewLevels(levels_seen));
    }
    let mean_spacing = raw.iter().sum::<f64>() / raw.len() as f64;
    if !(mean_spacing > 0.0) {
        // fully degenerate input: every spacing is zero
        return Err(Error::Domain("all spacings vanish; cannot rescale".into()));
    }
    let mut spacings: Vec<f64> = raw.iter().map(|s| s / mean_spacing).collect();
    sort_reals(&mut spacings);
    let width = config.s_max / config.bins as f64;
    let mut hist = vec![0usize; config.bins];
    let mut overflow = 0;
    for &s in &spacings {
        let k = (s / width) as usize;
        if k < config.bins {
            hist[k] += 1;
        } else if s == config.s_max {
            hist[config.bins - 1] += 1;
        } else {
            overflow += 1;
        }
    }
    let inside = (spacings.len() - overflow).max(1) as f64;
    Ok(SpacingHistogram {
        bin_edges: (0..=config.bins).map(|k| k as f64 * width).collect(),
        counts: hist.iter().map(|&c| c as f64 / (inside * width)).collect(),
        mean_spacing,
        mode,
        spacings,
        overflow,
    })
}

/// GOE Wigner surmise `(pi/2) s exp(-pi s^2/4)`.
pub fn wigner_surmise_pdf(s: f64) -> f64 {
    0.5 * PI * s * (-0.25 * PI * s * s).exp()
}

pub fn wigner_surmise_cdf(s: f64) -> f64 {
    1.0 - (-0.25 * PI * s * s).exp()
}

/// GUE surmise `(32/pi^2) s^2 exp(-4 s^2/pi)`.
pub fn gue_surmise_pdf(s: f64) -> f64 {
    32.0 / (PI * PI) * s * s * (-4.0 * s * s / PI).exp()
}

pub fn gue_surmise_cdf(s: f64) -> f64 {
    let a = 2.0 * s / PI.sqrt();
    libm_erf(a) - 4.0 * s / PI * (-4.0 * s * s / PI).exp()
}

// Abramowitz-Stegun 7.1.26 is too coarse for a KS check; use the
// Numerical-Recipes erfc Chebyshev fit (|err| < 1.2e-7).
fn libm_erf(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.265_512_23
            + t * (1.000_023_68
                + t * (0.374_091_96
                    + t * (0.096_784_18
                        + t * (-0.186_288_06
                            + t * (0.278_868_07
                                + t * (-1.135_203_98
                                    + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
            .exp();
    if x >= 0.0 {
        1.0 - ans
    } else {
        ans - 1.0
    }
}

/// Kolmogorov-Smirnov distance `sup |F_n(s) - F(s)|` of sorted samples.
pub fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        (0..=n).map(|k| {
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            w * f(a + k as f64 * h)
        }).sum::<f64>() * h
    }

    #[test]
    fn surmises_are_normalized_with_unit_mean() {
        for pdf in [wigner_surmise_pdf as fn(f64) -> f64, gue_surmise_pdf] {
            assert!((trapezoid(pdf, 0.0, 12.0, 200_000) - 1.0).abs() < 1e-9);
            assert!((trapezoid(|s| s * pdf(s), 0.0, 12.0, 200_000) - 1.0).abs() < 1e-9);
        }
        // CDFs against quadrature of the densities
        for s in [0.1, 0.5, 1.0, 2.0, 3.0] {
            assert!((wigner_surmise_cdf(s) - trapezoid(wigner_surmise_pdf, 0.0, s, 100_000)).abs() < 1e-9);
            assert!((gue_surmise_cdf(s) - trapezoid(gue_surmise_pdf, 0.0, s, 100_000)).abs() < 1e-6);
        }
    }

    #[test]
    fn equally_spaced_levels_give_a_spike_at_one() {
        let levels: Vec<f64> = (0..100).map(|k| -0.5 + k as f64 * 0.01).collect();
        let cfg = SpacingConfig { window: None, bins: 40, s_max: 4.0, period: None };
        let h = spacing_histogram(&[vec![levels]], SpacingMode::SingleSequence, &cfg).unwrap();
        assert!((h.mean_spacing - 0.01).abs() < 1e-12);
        let peak = h.counts.iter().cloned().fold(0.0, f64::max);
        let k = h.counts.iter().position(|&c| c == peak).unwrap();
        assert!(h.bin_edges[k] <= 1.0 && 1.0 <= h.bin_edges[k + 1] + 1e-12);
        assert!((h.integral() - 1.0).abs() < 1e-12);
        assert!(h.counts.iter().filter(|&&c| c > 0.0).count() <= 2);
    }

    #[test]
    fn superposed_merges_sequences() {
        let a: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let b: Vec<f64> = (0..10).map(|k| k as f64 + 0.5).collect();
        let cfg = SpacingConfig { window: None, bins: 10, s_max: 5.0, period: None };
        let sup = spacing_histogram(&[vec![a.clone(), b.clone()]], SpacingMode::Superposed, &cfg).unwrap();
        assert!((sup.mean_spacing - 0.5).abs() < 1e-12);
        let single = spacing_histogram(&[vec![a, b]], SpacingMode::SingleSequence, &cfg).unwrap();
        assert!((single.mean_spacing - 1.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_levels_wrap() {
        let p = 2.0 * PI;
        let levels: Vec<f64> = (0..8).map(|k| k as f64 * p / 8.0).collect();
        let cfg = SpacingConfig { window: None, bins: 8, s_max: 4.0, period: Some(p) };
        let h = spacing_histogram(&[vec![levels]], SpacingMode::Superposed, &cfg).unwrap();
        assert_eq!(h.spacings.len(), 8);
        assert!(h.spacings.iter().all(|&s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn too_few_levels() {
        let cfg = SpacingConfig::default();
        assert!(matches!(
            spacing_histogram(&[vec![vec![0.1]]], SpacingMode::Superposed, &cfg),
            Err(Error::TooFewLevels(_))
        ));
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        // inverse-CDF samples of the surmise have KS distance 1/(2n)
        let n = 1000;
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) / n as f64;
                (-4.0 * (1.0 - u).ln() / PI).sqrt()
            })
            .collect();
        let d = ks_distance(&xs, wigner_surmise_cdf);
        assert!((d - 0.5 / n as f64).abs() < 1e-12, "{d}");
    }
}
