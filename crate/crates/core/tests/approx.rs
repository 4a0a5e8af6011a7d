use std::sync::Arc;

use num_rational::Ratio;
use shearlab::approx::*;
use shearlab::generators::*;
use shearlab::geometry::*;
use shearlab::phantom::{ball_phantom, linear_edge_phantom};
use shearlab::transform::*;

fn system(n: usize) -> ShearletSystem {
    let g = Arc::new(GeneratorModel::filter_based(FilterDesign::new(15, 10).unwrap(), DEFAULT_J_PHI).unwrap());
    let alpha = Anisotropy::rational(2, 1).unwrap();
    let cfg = SystemConfig::new(alpha, LatticeConstants::new(0.25, 0.125).unwrap(), n).unwrap();
    ShearletSystem::new(cfg, g).unwrap()
}

fn tau_float(a: f64) -> f64 {
    3.0 * (2.0 - a) * (a - 1.0) * (a + 2.0) / (2.0 * (9.0 * a * a + 17.0 * a - 10.0))
}

#[test]
fn tau_at_three_halves_is_exact() {
    // 3·(1/2)·(1/2)·(7/2) = 21/8 over 2·(81/4 + 51/2 − 10) = 143/2
    let t = tau_exact(Ratio::new(3, 2)).unwrap();
    assert_eq!(t, Ratio::new(21, 572));
    assert_eq!(tau(1.5).unwrap(), 21.0 / 572.0);
}

#[test]
fn tau_vanishes_only_at_endpoints() {
    assert_eq!(tau(1.0).unwrap(), 0.0);
    assert_eq!(tau(2.0).unwrap(), 0.0);
    assert!(tau(2.5).is_err());
    let (zeros, max) = tau_sign_scan(1000).unwrap();
    assert_eq!(zeros, 2);
    let brute = (1..1000).map(|i| tau_float(1.0 + i as f64 / 1000.0)).fold(0.0f64, f64::max);
    assert!((max - brute).abs() < 1e-12);
    assert!(max < 0.04);
}

#[test]
fn tau_float_matches_formula_off_rationals() {
    let a = std::f64::consts::SQRT_2;
    assert!((tau(a).unwrap() - tau_float(a)).abs() < 1e-15);
}

#[test]
fn optimal_rate_examples() {
    assert_eq!(optimal_rate(2.0, 2.0, 3).unwrap(), 1.0);
    assert!((optimal_rate(1.6, 1.2, 3).unwrap() - 0.8).abs() < 1e-15);
    assert!(optimal_rate(2.0, 2.0, 100).unwrap() < 0.03);
    assert!(optimal_rate(2.5, 2.0, 3).is_err());
}

#[test]
fn counting_exponent_at_two() {
    assert!((counting_exponent(2.0) + 1.0).abs() < 1e-15);
}

#[test]
fn weak_lp_examples() {
    assert_eq!(weak_lp_norm(&[3.0, 2.0, 1.0], 1.0).unwrap(), (4.0, 2));
    let harmonic: Vec<f64> = (1..=100).map(|n| 1.0 / n as f64).collect();
    let (v, _) = weak_lp_norm(&harmonic, 1.0).unwrap();
    assert!((v - 1.0).abs() < 1e-12);
    assert!(weak_lp_norm(&harmonic, 0.0).is_err());
}

#[test]
fn rearrangement_preserves_energy_and_orders() {
    let c = [0.3, -2.0, 0.0, 1.5, -0.7];
    let r = rearranged_coefficients(&c);
    assert_eq!(r, vec![2.0, 1.5, 0.7, 0.3, 0.0]);
    let e: f64 = c.iter().map(|v| v * v).sum();
    assert_eq!(r.iter().map(|v| v * v).sum::<f64>(), e);
    assert_eq!(greedy_order(&c, 3), vec![1, 3, 4]);
    assert!(greedy_order(&c, 0).is_empty());
}

#[test]
fn fit_rate_recovers_power_laws() {
    let ns = log_spaced(10, 1000, 12);
    let curve = ErrorCurve::new("t", "p", ns.iter().map(|&n| (n, 1.0 / n as f64)).collect()).unwrap();
    let fit = fit_rate(&curve, (10, 1000)).unwrap();
    assert!((fit.slope + 1.0).abs() < 1e-12);
    let curve = ErrorCurve::new("t", "p", ns.iter().map(|&n| (n, 7.0 * (n as f64).powf(-0.5))).collect()).unwrap();
    let fit = fit_rate(&curve, (10, 1000)).unwrap();
    assert!((fit.slope + 0.5).abs() < 1e-12);
    assert!((fit.intercept - 7f64.ln()).abs() < 1e-12);
    assert!(fit_rate(&curve, (500, 1000)).is_err());
}

#[test]
fn error_curve_flags_growth_and_order() {
    let c = ErrorCurve::new("t", "p", vec![(1, 1.0), (2, 0.5), (3, 0.6)]).unwrap();
    assert_eq!(c.monotonicity_flags, vec![2]);
    assert!(ErrorCurve::new("t", "p", vec![(2, 1.0), (2, 0.5)]).is_err());
}

#[test]
fn greedy_extremes() {
    let sys = system(16);
    let f = ball_phantom([0.5; 3], 0.3, 16).unwrap();
    let c = sys.analyze(&f).unwrap();
    let (keep, v, _) = greedy_nterm(&sys, &c, 0, 1e-10, 500).unwrap();
    assert!(keep.is_empty());
    assert!(v.data().iter().all(|x| *x == 0.0));
    let (_, v, _) = greedy_nterm(&sys, &c, c.len(), 1e-10, 500).unwrap();
    assert!(f.sub(&v).norm_sq() <= 1e-8 * f.norm_sq());
    assert!(greedy_nterm(&sys, &c, c.len() + 1, 1e-10, 500).is_err());
}

#[test]
fn error_respects_tail_bound() {
    let sys = system(16);
    let f = ball_phantom([0.5; 3], 0.3, 16).unwrap();
    let bounds = sys.empirical_frame_bounds(200, 1e-8, 3).unwrap();
    let curve = error_curve(&f, &sys, &[100, 1000], "ball", bounds.a * 0.99, 1e-10, 500).unwrap();
    assert!(curve.tail_violations().is_empty(), "{curve:?}");
    assert!(curve.curve.points[1].1 < curve.curve.points[0].1);
}

#[test]
fn orthonormal_baselines_on_trivial_inputs() {
    let n = 16;
    let constant = Volume::from_fn(n, |_| 1.0).unwrap();
    // the coarsest band is 4³ equal scaling coefficients
    let w = wavelet_baseline(&constant, &[1, 32, 64], "const").unwrap();
    assert!((w.points[0].1 - 63.0 / 64.0).abs() < 1e-12, "{:?}", w.points);
    assert!((w.points[1].1 - 0.5).abs() < 1e-12);
    assert!(w.points[2].1 < 1e-20);
    let wave = Volume::from_fn(n, |x| (2.0 * std::f64::consts::PI * 3.0 * x[1]).cos()).unwrap();
    let fo = fourier_baseline(&wave, &[1, 2, 3], "cos").unwrap();
    assert!((fo.points[0].1 - 0.25).abs() < 1e-12, "{:?}", fo.points);
    assert!(fo.points[1].1 < 1e-20);
}

#[test]
fn significant_count_on_power_law() {
    // c_n = n^{-2} gives |Λ(ε)| ≈ ε^{-1/2}
    let mags: Vec<f64> = (1..=100_000).map(|n| (n as f64).powi(-2)).collect();
    let eps: Vec<f64> = (1..=6).map(|i| 10f64.powf(-(i as f64))).collect();
    let r = significant_count(&mags, &eps, 2.0).unwrap();
    assert!((r.exponent + 0.5).abs() < 0.01, "{}", r.exponent);
    assert!(r.counts.windows(2).all(|w| w[1].1 >= w[0].1));
    let none = significant_count(&mags, &[2.0], 2.0).unwrap();
    assert_eq!(none.counts[0].1, 0);
    assert!(significant_count(&mags, &[1e-3, 1e-2], 2.0).is_err());
}

#[test]
fn shear_decay_peaks_at_aligned_shear() {
    let sys = system(32);
    let j = 4;
    for (s, aligned) in [((0.0, 0.0), (0i64, 0i64)), ((0.25, 0.0), (-1, 0))] {
        let f = linear_edge_phantom([-1.0, s.0, s.1], 0.5, 32).unwrap();
        let r = shear_decay_experiment(&sys, &f, s, j).unwrap();
        let best = r.rows.iter().max_by(|a, b| a.max_coef.total_cmp(&b.max_coef)).unwrap();
        assert_eq!(best.k, aligned, "s {s:?}");
    }
}
