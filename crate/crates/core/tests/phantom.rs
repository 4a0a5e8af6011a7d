use std::f64::consts::PI;

use shearlab::phantom::*;
use shearlab::transform::Volume;

fn smooth_star(seed: u64) -> RadiusField {
    RadiusField::new(RadiusKind::SmoothStar, 2.0, 1.0, 1, seed).unwrap()
}

fn mean(v: &Volume) -> f64 {
    v.data().iter().sum::<f64>() / v.data().len() as f64
}

/// Voxels whose value differs from a face neighbour.
fn boundary_voxels(v: &Volume) -> usize {
    let n = v.n();
    let mut count = 0;
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let c = v.get([x, y, z]);
                let nb = [
                    [(x + 1) % n, y, z],
                    [(x + n - 1) % n, y, z],
                    [x, (y + 1) % n, z],
                    [x, (y + n - 1) % n, z],
                    [x, y, (z + 1) % n],
                    [x, y, (z + n - 1) % n],
                ];
                if nb.iter().any(|p| v.get(*p) != c) {
                    count += 1;
                }
            }
        }
    }
    count
}

#[test]
fn constant_radius_has_zero_seminorm() {
    let f = RadiusField::constant(0.3).unwrap();
    let (n1, n2) = HOLDER_GRID;
    assert_eq!(f.patch_seminorm(n1, n2).unwrap(), 0.0);
    assert_eq!(f.extremes(), (0.3, 0.3));
    f.validate().unwrap();
}

#[test]
fn smooth_star_respects_budget() {
    let f = smooth_star(7);
    let (n1, n2) = HOLDER_GRID;
    let est = f.patch_seminorm(n1, n2).unwrap();
    assert!(est > 0.0 && est <= 1.0, "{est}");
    let (lo, hi) = f.extremes();
    assert!(lo > 0.0 && hi <= RHO0);
    f.validate().unwrap();
}

#[test]
fn piecewise_star_is_smooth_per_patch_only() {
    let f = RadiusField::new(RadiusKind::PiecewiseStar, 2.0, 1.0, 4, 3).unwrap();
    let (n1, n2) = HOLDER_GRID;
    let patch = f.patch_seminorm(n1, n2).unwrap();
    let global = f.global_seminorm(n1, n2).unwrap();
    assert!(patch <= 1.0, "{patch}");
    assert!(global > patch, "{global} vs {patch}");
    f.validate().unwrap();
}

#[test]
fn seminorm_of_sine_profile() {
    let eps = 0.01;
    let s = AngularSamples::from_fn(HOLDER_GRID.0, HOLDER_GRID.1, |t1, _| eps * t1.sin());
    let est = holder_seminorm_estimate(&s, 2.0).unwrap();
    assert!((est - eps).abs() <= 0.05 * eps, "{est}");
    let tripled = holder_seminorm_estimate(&s.scaled(3.0), 2.0).unwrap();
    assert!((tripled - 3.0 * est).abs() <= 1e-12 * tripled);
}

#[test]
fn seminorm_rejects_coarse_grid_and_bad_alpha() {
    let s = AngularSamples::from_fn(32, 16, |t1, _| t1.sin());
    assert!(holder_seminorm_estimate(&s, 2.0).is_err());
    let s = AngularSamples::from_fn(64, 32, |t1, _| t1.sin());
    assert!(holder_seminorm_estimate(&s, 2.5).is_err());
}

#[test]
fn ball_volume_fraction() {
    let v = ball_phantom([0.5; 3], 0.3, 64).unwrap();
    let expect = 4.0 / 3.0 * PI * 0.3f64.powi(3);
    assert!((mean(&v) - expect).abs() <= 0.02 * expect, "{} vs {expect}", mean(&v));
}

#[test]
fn degenerate_cartoons_are_zero() {
    assert!(ball_phantom([0.5; 3], 0.0, 16).unwrap().data().iter().all(|v| *v == 0.0));
    let mut spec = CartoonSpec::binary(smooth_star(1), [0.5; 3]);
    spec.f1 = SmoothPart::constant(0.0);
    let v = rasterize_cartoon(&spec, 16).unwrap();
    assert!(v.data().iter().all(|x| *x == 0.0));
}

#[test]
fn ball_outside_margin_is_rejected() {
    assert!(ball_phantom([0.2, 0.5, 0.5], 0.3, 16).is_err());
}

#[test]
fn centred_ball_is_flip_symmetric() {
    let n = 32;
    let v = ball_phantom([0.5; 3], 0.3, n).unwrap();
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                assert_eq!(v.get([x, y, z]), v.get([n - 1 - x, y, z]));
                assert_eq!(v.get([x, y, z]), v.get([x, z, y]));
            }
        }
    }
}

#[test]
fn star_mean_is_resolution_stable() {
    let spec = CartoonSpec::binary(smooth_star(7), [0.5; 3]);
    let coarse = mean(&rasterize_cartoon(&spec, 64).unwrap());
    let fine = mean(&rasterize_cartoon(&spec, 128).unwrap());
    assert!((coarse - fine).abs() <= 0.01 * fine, "{coarse} vs {fine}");
}

#[test]
fn boundary_voxels_scale_like_a_surface() {
    let pts: Vec<(f64, f64)> = [32usize, 64, 128]
        .iter()
        .map(|&n| {
            let v = ball_phantom([0.5; 3], 0.3, n).unwrap();
            ((n as f64).ln(), (boundary_voxels(&v) as f64).ln())
        })
        .collect();
    let slope = (pts[2].1 - pts[0].1) / (pts[2].0 - pts[0].0);
    assert!((slope - 2.0).abs() <= 0.1, "{slope}");
}

#[test]
fn holder_bump_hypercube() {
    let beta = 2.0;
    let mut deltas = Vec::new();
    for m in [2usize, 4, 8] {
        let fx = hypercube_fixture(m, HypercubeMode::HolderBump, beta, 1.0, 64).unwrap();
        assert_eq!(fx.atoms.len(), m * m * m);
        assert_eq!(fx.max_cross_inner(), 0.0);
        assert!(fx.spread() <= 1.5);
        assert!(fx.f0.data().iter().all(|v| *v == 0.0));
        deltas.push(((m as f64).ln(), fx.delta.ln()));
    }
    // height m^{-β} over a support of volume m^{-3}
    let slope = (deltas[2].1 - deltas[0].1) / (deltas[2].0 - deltas[0].0);
    assert!((slope + beta + 1.5).abs() <= 0.1, "{slope}");
}

#[test]
fn binary_surface_hypercube() {
    let fx = hypercube_fixture(4, HypercubeMode::BinarySurface, 2.0, 0.4, 64).unwrap();
    assert_eq!(fx.atoms.len(), 16);
    assert_eq!(fx.max_cross_inner(), 0.0);
    assert!(fx.spread() <= 1.5);
    // atoms sit outside the base ball
    let base = &fx.f0;
    for a in &fx.atoms {
        assert!(a.indices.iter().all(|&i| base.data()[i] == 0.0));
        assert!(a.values.iter().all(|&v| v == 1.0));
    }
}

#[test]
fn hypercube_rejects_unresolved_grids() {
    assert!(hypercube_fixture(8, HypercubeMode::HolderBump, 2.0, 1.0, 32).is_err());
    assert!(hypercube_fixture(1, HypercubeMode::HolderBump, 2.0, 1.0, 32).is_err());
}

#[test]
fn linear_edge_halves_the_window() {
    let n = 64;
    let window = Volume::from_fn(n, margin_window).unwrap();
    let v = linear_edge_phantom([1.0, 0.5, -0.25], 0.5, n).unwrap();
    let w = mean(&window);
    assert!((mean(&v) - w / 2.0).abs() <= 0.01 * w, "{} vs {}", mean(&v), w / 2.0);
    let c = linear_edge_phantom([-1.0, -0.5, 0.25], 0.5, n).unwrap();
    for i in 0..n * n * n {
        assert!((v.data()[i] + c.data()[i] - window.data()[i]).abs() <= 1e-15);
    }
}

#[test]
fn linear_edge_rejects_steep_normals() {
    assert!(linear_edge_phantom([1.0, 5.0, 0.0], 0.5, 16).is_err());
    assert!(linear_edge_phantom([0.0, 0.0, 0.0], 0.5, 16).is_err());
}

#[test]
fn generation_is_deterministic_per_seed() {
    let a = smooth_star(11);
    assert_eq!(a, smooth_star(11));
    assert_ne!(a, smooth_star(12));
    let spec = PhantomSpec::Star {
        radius_kind: RadiusKind::PiecewiseStar,
        alpha: 2.0,
        beta: 2.0,
        nu: 1.0,
        mu: 1.0,
        patches: 3,
        center: [0.5; 3],
        smooth_parts: true,
        seed: 5,
        amplitude: None,
    };
    assert_eq!(spec.render(16).unwrap(), spec.render(16).unwrap());
}

#[test]
fn phantom_spec_validation() {
    let bad = PhantomSpec::Star {
        radius_kind: RadiusKind::SmoothStar,
        alpha: 2.0,
        beta: 1.5,
        nu: 1.0,
        mu: 1.0,
        patches: 1,
        center: [0.5; 3],
        smooth_parts: false,
        seed: 1,
        amplitude: None,
    };
    assert!(bad.validate().is_err());
    let huge = PhantomSpec::Star {
        radius_kind: RadiusKind::SmoothStar,
        alpha: 2.0,
        beta: 2.0,
        nu: 1.0,
        mu: 1.0,
        patches: 1,
        center: [0.5; 3],
        smooth_parts: false,
        seed: 1,
        amplitude: Some(10.0),
    };
    assert!(huge.validate().is_err());
    let text = serde_json::to_string(&bad).unwrap();
    assert_eq!(serde_json::from_str::<PhantomSpec>(&text).unwrap(), bad);
}
