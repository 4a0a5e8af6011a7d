use std::f64::consts::PI;
use std::sync::Arc;

use shearlab::generators::*;
use shearlab::geometry::PyramidPair;

fn design() -> FilterDesign {
    FilterDesign::new(15, 10).unwrap()
}

fn model() -> GeneratorModel {
    GeneratorModel::filter_based(design(), DEFAULT_J_PHI).unwrap()
}

/// `cos^{2K}(πx) Σ_{n<L} C(K−1+n, n) sin^{2n}(πx)` with binomials from
/// factorial ratios and powers by repeated multiplication.
fn m0_sq_oracle(x: f64, k: u32, l: u32) -> f64 {
    let c = (PI * x).cos().powi(2);
    let s = (PI * x).sin().powi(2);
    let mut ck = 1.0;
    for _ in 0..k {
        ck *= c;
    }
    let mut sum = 0.0;
    for n in 0..l {
        let mut binom = 1.0;
        for i in 1..=n {
            binom *= (k - 1 + i) as f64 / i as f64;
        }
        let mut sn = 1.0;
        for _ in 0..n {
            sn *= s;
        }
        sum += binom * sn;
    }
    ck * sum
}

fn phi_oracle(t: f64, factors: u32) -> f64 {
    (0..factors)
        .map(|j| m0_sq_oracle(t / 2f64.powi(j as i32), 15, 10).sqrt())
        .product()
}

#[test]
fn filter_endpoints_exact() {
    let f = LowPassFilter::new(design());
    assert_eq!(f.m0_sq(0.0), 1.0);
    assert_eq!(f.m1_sq(0.0), 0.0);
}

#[test]
fn m0_matches_polynomial_oracle() {
    let f = LowPassFilter::new(design());
    let expect = m0_sq_oracle(0.1, 15, 10);
    assert!((f.m0_sq(0.1) - expect).abs() <= 1e-14 * expect);
    for x in [0.03, 0.27, 0.41, 0.5, 0.66, 0.93] {
        let e = m0_sq_oracle(x, 15, 10);
        assert!((f.m0_sq(x) - e).abs() <= 1e-13, "x={x}");
        let e1 = m0_sq_oracle(x + 0.5, 15, 10);
        assert!((f.m1_sq(x) - e1).abs() <= 1e-13, "x={x}");
    }
}

#[test]
fn scaling_function_identities() {
    let phi = ScalingFunction::new(LowPassFilter::new(design()), 24).unwrap();
    assert_eq!(phi.eval(0.0), 1.0);
    let t = 0.3;
    let refined = phi.filter().m0(2.0 * t) * phi.eval(t);
    assert!((phi.eval(2.0 * t) - refined).abs() < 1e-12);
    assert!((phi.eval(t) - phi_oracle(t, 24)).abs() < 1e-12);
}

#[test]
fn scaling_product_truncation() {
    let phi = ScalingFunction::new(LowPassFilter::new(design()), 24).unwrap();
    for i in 0..=256 {
        let t = -64.0 + 0.5 * i as f64;
        assert!((phi.eval_with(t, 24) - phi.eval_with(t, 32)).abs() <= 1e-10, "t={t}");
    }
}

#[test]
fn shearlet_vanishes_on_cross_plane() {
    assert_eq!(model().psi_hat([0.0, 0.3, -0.7]), 0.0);
}

#[test]
fn shearlet_axis_value_matches_product_oracle() {
    let g = model();
    // m1(4·0.125) = m0(1) = 1 up to the oracle's rounding
    let expect = m0_sq_oracle(0.5 + 0.5, 15, 10).sqrt() * phi_oracle(0.125, 24);
    let got = g.psi_hat([0.125, 0.0, 0.0]);
    assert!((got - expect).abs() <= 1e-12, "{got} vs {expect}");
}

#[test]
fn shearlet_factorizes() {
    let g = model();
    let phi = g.scaling_function().unwrap().clone();
    let xi = [0.2, 0.1, 0.4];
    let expect = phi.filter().m1(4.0 * xi[0]) * phi.eval(xi[0]) * phi.eval(2.0 * xi[1]) * phi.eval(2.0 * xi[2]);
    assert!((g.psi_hat(xi) - expect).abs() < 1e-14);
}

#[test]
fn pair_generators_permute_coordinates() {
    let g = model();
    let xi = [0.31, -0.12, 0.07];
    assert_eq!(g.psi_hat_pair(PyramidPair::P, xi), g.psi_hat(xi));
    assert_eq!(g.psi_hat_pair(PyramidPair::PTilde, xi), g.psi_hat([xi[1], xi[0], xi[2]]));
    assert_eq!(g.psi_hat_pair(PyramidPair::PBreve, xi), g.psi_hat([xi[2], xi[1], xi[0]]));
}

#[test]
fn separable_reproduces_filter_based() {
    let g = model();
    let phi = g.scaling_function().unwrap().clone();
    let sep = separable_generator(
        Profile1d::FilterBandPass(phi.clone()),
        Profile1d::Scaling { phi, dilation: 2.0 },
    );
    let xi = [0.2, 0.1, -0.3];
    assert!((sep.psi_hat(xi) - g.psi_hat(xi)).abs() < 1e-15);
}

#[test]
fn feasibility_passes_for_filter_generator() {
    let grid = FeasibilityGrid::interleaved_log(64, 1e-3, 32.0).unwrap();
    assert_eq!(grid.calibration.axes[0].len(), 64);
    assert_eq!(grid.holdout.axes[0].len(), 64);
    let r = verify_feasibility(&model(), &FeasibilityProfile::filter_default(), &grid).unwrap();
    assert!(r.passes, "{r:?}");
    assert!(r.worst_ratio <= 1.0 + FEASIBILITY_SLACK);
}

#[test]
fn feasibility_of_zero_generator() {
    let grid = FeasibilityGrid::interleaved_log(16, 1e-3, 32.0).unwrap();
    let r = verify_feasibility(&GeneratorModel::zero(), &FeasibilityProfile::filter_default(), &grid).unwrap();
    assert!(r.passes);
    assert_eq!(r.worst_ratio, 0.0);
}

#[test]
fn feasibility_fails_for_steep_tail() {
    let grid = FeasibilityGrid::interleaved_log(64, 1e-3, 32.0).unwrap();
    let steep = FeasibilityProfile::new(8.5, 50.0, 16.0, 4.0, 8.0, 8.0).unwrap();
    let r = verify_feasibility(&model(), &steep, &grid).unwrap();
    assert!(!r.passes);
    // the violation sits far out on the cross axis where the bound collapses
    let outer = grid.holdout.axes[1].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(r.worst_point[1].abs() >= outer / 4.0, "{:?}", r.worst_point);
}

#[test]
fn vanishing_moment_of_monomial() {
    let phi = model().scaling_function().unwrap().clone();
    let cross = Profile1d::Scaling { phi, dilation: 2.0 };
    let g = separable_generator(Profile1d::Monomial { power: 1.0 }, cross.clone());
    let d = vanishing_moment_order(&g).unwrap();
    assert!((d - 1.0).abs() <= 0.01);
    let scaled = separable_generator(
        Profile1d::Custom {
            label: "7t".into(),
            eval: Arc::new(|t| 7.0 * t),
        },
        cross,
    );
    assert!((vanishing_moment_order(&scaled).unwrap() - d).abs() < 1e-9);
}

#[test]
fn vanishing_moment_of_filter_generator() {
    assert!(vanishing_moment_order(&model()).unwrap() >= 8.0);
}

#[test]
fn descriptor_round_trip() {
    let g = model();
    let d = g.descriptor(Some(FeasibilityProfile::filter_default()));
    let text = serde_json::to_string(&d).unwrap();
    let back: GeneratorDescriptor = serde_json::from_str(&text).unwrap();
    assert_eq!(back, d);
    let rebuilt = back.rebuild().unwrap();
    assert_eq!(rebuilt.psi_hat([0.3, 0.1, 0.2]), g.psi_hat([0.3, 0.1, 0.2]));
}
