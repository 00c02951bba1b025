use faer::Mat;

use super::*;
use crate::ensembles::build_hamiltonian;
use crate::pastur::{HomotopyOptions, Region};
use crate::spectral::{eigenvalues, MatrixInput};

fn gauss(class: SymmetryClass, m: usize, n: usize, t: f64, mu: f64) -> EnsembleSpec {
    EnsembleSpec::gaussian(class, m, n, t, mu).unwrap()
}

#[test]
fn mu_zero_values() {
    let s = gauss(SymmetryClass::OO, 200, 40, 1.0, 0.0);
    assert!((mu_zero(&s) - 40f64.sqrt() / 400.0).abs() < 1e-15);
    let s = gauss(SymmetryClass::OO, 400, 80, 1.0, 0.0);
    assert!((s.scales().e_thouless - 0.1).abs() < 1e-15);
    let a = mu_zero(&gauss(SymmetryClass::OA, 200, 20, 0.5, 0.0));
    let b = mu_zero(&gauss(SymmetryClass::OAprime, 200, 80, 0.5, 0.0));
    assert_eq!(a, b);
    assert!((a - 200f64.sqrt() / 400.0).abs() < 1e-15);
}

#[test]
fn default_grid_shape() {
    let g = default_mu_grid();
    assert_eq!(g.len(), 26);
    assert_eq!(g[0], 0.0);
    assert!((g[1] - 0.05).abs() < 1e-15 && (g[25] - 5.0).abs() < 1e-12);
    assert!(g.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn mu_pt_of_a_piecewise_linear_curve() {
    let mut c = TransitionCurve {
        template: gauss(SymmetryClass::OO, 10, 2, 1.0, 0.0),
        t: 1.0,
        mu0: 1.0,
        mu_grid: vec![0.0, 1.0, 2.0],
        fc_mean: vec![0.0, 0.5, 1.0],
        fc_stderr: vec![0.0; 3],
        n_samples: 1,
        cell_errors: vec![None; 3],
        mu_pt: None,
        g_of_t: None,
    };
    assert_eq!(find_mu_pt(&mut c).unwrap(), 1.0);
    assert_eq!(c.g_of_t, Some(1.0));
    // a local dip is pooled away before interpolating
    c.mu_grid = vec![0.0, 1.0, 2.0, 3.0];
    c.fc_mean = vec![0.0, 0.6, 0.4, 1.0];
    assert_eq!(find_mu_pt(&mut c).unwrap(), 1.0);
    c.fc_mean = vec![0.0, 0.1, 0.2, 0.3];
    assert!(matches!(find_mu_pt(&mut c), Err(Error::OutOfRange { .. })));
}

#[test]
fn small_transition_sweep() {
    let template = gauss(SymmetryClass::OO, 30, 6, 1.0, 0.0);
    let grid = [0.0, 0.5, 2.0, 8.0];
    let curves = run_transition(&template, &[0.5, 1.0], &grid, 12, 7).unwrap();
    assert_eq!(curves.len(), 2);
    for c in &curves {
        assert_eq!(c.fc_mean[0], 0.0);
        assert_eq!(c.fc_stderr[0], 0.0);
        assert!(c.fc_mean.iter().all(|f| (0.0..=1.0).contains(f)));
        assert_eq!(c.failed_cells(), 0);
        assert!(c.fc_mean[3] > 0.5);
    }
    let again = run_transition(&template, &[0.5, 1.0], &grid, 12, 7).unwrap();
    assert_eq!(curves[1].fc_mean, again[1].fc_mean);
    assert!(run_transition(&template, &[0.5], &[0.0, 1.0, 1.0], 3, 7).is_err());
    assert!(run_transition(&template, &[1.5], &grid, 3, 7).is_err());
    assert!(run_transition(&template, &[0.5], &grid, 0, 7).is_err());
}

#[test]
fn circular_cells_run() {
    let template = EnsembleSpec::circular(SymmetryClass::UOprime, 20, 4, 1.0, 0.0).unwrap();
    let c = &run_transition(&template, &[1.0], &[0.0, 20.0], 6, 3).unwrap()[0];
    assert_eq!(c.fc_mean[0], 0.0);
    assert!(c.fc_mean[1] > 0.5);
}

#[test]
fn predicted_scaling_limits() {
    let g = |c, t, n| predicted_scaling(c, t, n).value().unwrap();
    assert!((g(SymmetryClass::OO, 1.0, 10_000) - 1.0).abs() < 1e-4);
    let nt: f64 = 40.0 * 1e-4;
    assert!((g(SymmetryClass::OO, 1e-4, 40) / nt.sqrt() - 1.0).abs() < 0.01);
    assert_eq!(g(SymmetryClass::UOprime, 0.5, 40), g(SymmetryClass::OO, 0.5, 40));
    assert_eq!(g(SymmetryClass::UO, 0.25, 40), 0.5);
    assert_eq!(g(SymmetryClass::OA, 1e-6, 40), 1.0);
    assert_eq!(g(SymmetryClass::OAprime, 0.25, 40), 1.0);
    assert_eq!(predicted_scaling(SymmetryClass::OAprime, 1e-4, 40), PredictedScaling::AnomalousWeakCoupling);
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn spacing_levels_are_the_hermitian_spectrum() {
    for class in SymmetryClass::ALL {
        let spec = gauss(class, 24, 5, 0.7, 0.3);
        let levels = spacing_levels(&spec, 11).unwrap();
        let merged = sorted(levels.concat());
        let h = build_hamiltonian(&spec.with_mu(0.0), 11).unwrap();
        let full = sorted(eigenvalues(MatrixInput::Complex(h.matrix.as_ref())).unwrap().values.iter().map(|z| z.re).collect());
        assert_eq!(merged.len(), 48);
        let err = merged.iter().zip(&full).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{class:?}: {err}");
        assert_eq!(levels.len(), if class == SymmetryClass::UO { 1 } else { 2 });
    }
}

#[test]
fn uncoupled_superposition_is_doubly_degenerate() {
    let template = gauss(SymmetryClass::OO, 40, 8, 0.0, 0.0);
    let cfg = SpacingConfig { bins: 20, s_max: 4.0, ..Default::default() };
    let h = &run_spacing(&template, &[0.0], 20, SpacingMode::Superposed, &cfg, 5).unwrap()[0];
    let zeros = h.spacings.iter().filter(|&&s| s < 1e-9).count();
    // every level appears twice, so about half the spacings vanish
    assert!(zeros * 2 + 40 >= h.spacings.len(), "{zeros} of {}", h.spacings.len());
    let peak = h.counts.iter().cloned().fold(0.0, f64::max);
    assert_eq!(h.counts[0], peak);
    let single = &run_spacing(&template, &[0.0], 20, SpacingMode::SingleSequence, &cfg, 5).unwrap()[0];
    assert!(single.spacings.iter().all(|&s| s > 1e-9));
}

#[test]
fn spacing_rejects_maps() {
    let c = EnsembleSpec::circular(SymmetryClass::OO, 10, 2, 1.0, 0.0).unwrap();
    assert!(run_spacing(&c, &[1.0], 2, SpacingMode::Superposed, &SpacingConfig::default(), 1).is_err());
}

/// Closed forms of the expected real count through double-factorial
/// ratios `c(j) = (2j-1)!! / (2j)!!`.
fn ginibre_oracle(m: usize) -> f64 {
    let c = |j: usize| (1..=j).map(|i| (2 * i - 1) as f64 / (2 * i) as f64).product::<f64>();
    let s2 = 2f64.sqrt();
    if m % 2 == 0 {
        s2 * (0..m / 2).map(|k| c(2 * k)).sum::<f64>()
    } else {
        1.0 + s2 * (1..=(m - 1) / 2).map(|k| c(2 * k - 1)).sum::<f64>()
    }
}

#[test]
fn ginibre_expectation() {
    assert!((ginibre_expected_real(1) - 1.0).abs() < 1e-14);
    assert!((ginibre_expected_real(2) - 2f64.sqrt()).abs() < 1e-14);
    for m in [3, 4, 7, 50, 100, 151, 200, 400] {
        let (a, b) = (ginibre_expected_real(m), ginibre_oracle(m));
        assert!((a - b).abs() < 1e-10 * b, "M = {m}: {a} vs {b}");
    }
    assert!((ginibre_expected_real(100) - 8.448906448).abs() < 1e-8);
}

#[test]
fn ginibre_small_sample() {
    let (mean, se) = ginibre_real_count(2, 4000, 1).unwrap();
    assert!(mean > 1.0 && mean < 2.0);
    assert!((mean - 2f64.sqrt()).abs() < 4.0 * se, "{mean} +- {se}");
    let (mean, se) = ginibre_real_count(20, 600, 2).unwrap();
    assert!((mean - ginibre_expected_real(20)).abs() < 4.0 * se, "{mean} +- {se}");
    assert!(ginibre_real_count(1, 10, 0).is_err());
}

#[test]
fn hermitian_sizes_give_a_degenerate_fit() {
    let r = run_m_scaling(SymmetryClass::OO, 0.2, 1.0, 0.0, &[20, 30, 40, 50], 2, 1);
    assert!(matches!(r, Err(Error::DegenerateFit(_))));
}

#[test]
fn real_axis_both_ways_without_coupling() {
    let spec = gauss(SymmetryClass::OO, 60, 0, 1.0, 0.0);
    let region = Region { re: (-2.5, 2.5), im: (-0.5, 0.5) };
    let cmp = run_density_comparison(&spec, region, (21, 11), 4, 9, &HomotopyOptions::default()).unwrap();
    assert_eq!(cmp.n_complex, 0);
    assert_eq!(cmp.fraction_outside, 0.0);
    for (j, &y) in cmp.grid.im_axis.iter().enumerate() {
        if y.abs() > 0.2 {
            assert!((0..21).all(|i| cmp.grid.get(i, j).unwrap() < 1e-4));
        }
    }
}

#[test]
fn small_density_comparison() {
    let spec = gauss(SymmetryClass::OO, 100, 20, 1.0, 0.2);
    let region = Region { re: (-3.0, 3.0), im: (-0.6, 0.6) };
    let cmp = run_density_comparison(&spec, region, (61, 31), 6, 4, &HomotopyOptions::default()).unwrap();
    assert!(cmp.n_complex > 100);
    assert!(cmp.fraction_outside < 0.1, "{}", cmp.fraction_outside);
    assert!(!cmp.slices.is_empty());
}

#[test]
fn ginibre_draw_matches_generic_classifier() {
    // the exact-zero count agrees with tolerance classification
    let mut r = crate::seed::rng(5);
    use rand_distr::{Distribution, StandardNormal};
    let a = Mat::<f64>::from_fn(30, 30, |_, _| StandardNormal.sample(&mut r));
    let e = eigenvalues(MatrixInput::Real(a.as_ref())).unwrap();
    let by_tol = crate::spectral::classify(&e.values, 10.0).unwrap();
    assert_eq!(by_tol.n_real(), e.values.iter().filter(|z| z.im == 0.0).count());
}
