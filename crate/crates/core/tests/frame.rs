use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shearlab::frame::*;
use shearlab::generators::*;
use shearlab::geometry::*;

const APERY: f64 = 1.202_056_903_159_594_2;

fn alpha2() -> Anisotropy {
    Anisotropy::rational(2, 1).unwrap()
}

fn model() -> GeneratorModel {
    GeneratorModel::filter_based(FilterDesign::new(15, 10).unwrap(), DEFAULT_J_PHI).unwrap()
}

fn fitted_profile(gen: &GeneratorModel) -> FeasibilityProfile {
    let grid = FeasibilityGrid::interleaved_log(48, 1e-3, 1e3).unwrap();
    let p = FeasibilityProfile::filter_default();
    let r = verify_feasibility(gen, &p, &grid).unwrap();
    assert!(r.passes);
    p.with_fit(r.c_fit, r.worst_ratio)
}

/// Small pyramid policy with `xi_max = 4` so brute-force oracles stay cheap.
fn small_policy(n: usize) -> TruncationPolicy {
    let mut p = TruncationPolicy::standard(alpha2(), n, CertificateDomain::Pyramid);
    p.xi_grid.xi_max = 4.0;
    p.j_max_sum = TruncationPolicy::required_j(alpha2(), 4.0).max(8);
    p
}

/// `Σ_j Σ_k |ψ̂(S^T_{−k} A_{2^{−j}} ξ)|·|ψ̂(S^T_{−k} A_{2^{−j}} ξ + ω)|` with
/// explicit matrices.
fn phi_oracle(gen: &GeneratorModel, xi: [f64; 3], omega: [f64; 3], j_max: u32) -> f64 {
    let a = alpha2();
    let mut sum = 0.0;
    for j in 0..=j_max {
        let s = scaling_matrix(j, a, PyramidPair::P);
        let inv = [[1.0 / s[0][0], 0.0, 0.0], [0.0, 1.0 / s[1][1], 0.0], [0.0, 0.0, 1.0 / s[2][2]]];
        let kmax = shear_range(j, a);
        for k1 in -kmax..=kmax {
            for k2 in -kmax..=kmax {
                let st = transpose(&shear_matrix((-k1, -k2), PyramidPair::P));
                let eta = mat_vec(&mat_mul(&st, &inv), xi);
                let shifted = [eta[0] + omega[0], eta[1] + omega[1], eta[2] + omega[2]];
                sum += gen.psi_hat(eta).abs() * gen.psi_hat(shifted).abs();
            }
        }
    }
    sum
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + i as f64 / (n - 1) as f64 * (hi.ln() - lo.ln())).exp())
        .collect()
}

/// Points of the pyramid sampling grid: `ξ1` log-spaced and cross ratios linear.
fn pyramid_points(p: &TruncationPolicy) -> Vec<[f64; 3]> {
    let g = p.xi_grid;
    let x1 = log_space(1.0, g.xi_max, g.n_axis);
    let ratios: Vec<f64> = (0..g.n_cross)
        .map(|i| -1.0 + 2.0 * i as f64 / (g.n_cross - 1) as f64)
        .collect();
    let mut out = Vec::new();
    for &x in &x1 {
        for &b in &ratios {
            for &c in &ratios {
                out.push([x, b * x, c * x]);
            }
        }
    }
    out
}

#[test]
fn c_gamma_spot_values() {
    assert!((c_gamma(4.0).unwrap() - 11.0 / 3.0).abs() < 1e-15);
    assert_eq!(c_gamma(2.0).unwrap(), 5.0);
    assert!((c_gamma(1e6).unwrap() - 3.0).abs() < 1e-5);
    assert!(c_gamma(1.0).is_err());
    assert!(c_gamma(0.3).is_err());
}

#[test]
fn zeta_spot_values() {
    assert!((zeta(4.0).unwrap() - PI.powi(4) / 90.0).abs() < 1e-12);
    assert!((zeta(2.0).unwrap() - PI * PI / 6.0).abs() < 1e-12);
    assert!((zeta(3.0).unwrap() - APERY).abs() < 1e-12);
    assert!((zeta(6.0).unwrap() - PI.powi(6) / 945.0).abs() < 1e-12);
    assert!(zeta(1.0).is_err());
}

#[test]
fn dyadic_sum_identities() {
    for iota in [0.5, 1.0, 3.0] {
        for t in [0.125, 0.5, 1.0] {
            let mut above = 0.0;
            let mut below = 0.0;
            for j in 0..200 {
                let x = 2f64.powi(-j);
                if x >= t {
                    above += x.powf(-iota);
                }
                if x <= t {
                    below += x.powf(iota);
                }
            }
            assert!((dyadic_sum_above(t, iota) - above).abs() <= 1e-12 * above);
            assert!((dyadic_sum_below(t, iota) - below).abs() <= 1e-12 * below);
            assert!(above <= dyadic_bound_above(t, iota) * (1.0 + 1e-12), "iota {iota} t {t}");
            assert!(below <= dyadic_bound_below(t, iota) * (1.0 + 1e-12), "iota {iota} t {t}");
        }
    }
}

#[test]
fn overlap_of_zero_generator() {
    let z = GeneratorModel::zero();
    let p = small_policy(6);
    assert_eq!(phi_overlap([2.0, 0.5, -1.0], [0.0; 3], &z, alpha2(), &p), 0.0);
    assert_eq!(gamma_sup([1.0, 0.0, 0.0], &z, alpha2(), &p).unwrap().value, 0.0);
    let lb = l_bounds(&z, alpha2(), &p, LatticeConstants::new(0.25, 0.125).unwrap()).unwrap();
    assert_eq!((lb.l_inf.value, lb.l_sup.value), (0.0, 0.0));
    let r = r_of_c(LatticeConstants::new(0.25, 0.125).unwrap(), &z, alpha2(), &p).unwrap();
    assert_eq!(r.value, 0.0);
    assert!(!covering_check(&z, alpha2(), 0.1, &p).unwrap());
}

#[test]
fn overlap_dominates_first_term() {
    let g = model();
    let p = small_policy(6);
    for xi in [[1.3, 0.2, -0.4], [3.0, 2.5, 1.0], [0.2, 0.1, 0.0]] {
        let v = phi_overlap(xi, [0.0; 3], &g, alpha2(), &p);
        assert!(v >= g.psi_hat(xi).powi(2));
    }
}

#[test]
fn overlap_matches_double_loop_oracle() {
    let g = model();
    let mut p = TruncationPolicy::standard(alpha2(), 16, CertificateDomain::Pyramid);
    p.j_max_sum = 12;
    let got = phi_overlap([4.0, 0.0, 0.0], [0.0; 3], &g, alpha2(), &p);
    let expect = phi_oracle(&g, [4.0, 0.0, 0.0], [0.0; 3], 12);
    assert!(expect > 0.0);
    assert!((got - expect).abs() <= 1e-12 * expect, "{got} vs {expect}");
    let off = [2.7, -1.1, 0.6];
    let w = [0.3, 0.05, -0.2];
    let got = phi_overlap(off, w, &g, alpha2(), &p);
    let expect = phi_oracle(&g, off, w, 12);
    assert!((got - expect).abs() <= 1e-12 * expect.max(1e-300));
}

#[test]
fn overlap_monotone_in_cutoff() {
    let g = model();
    let mut p = small_policy(6);
    let xi = [3.5, 1.0, -2.0];
    let a = phi_overlap(xi, [0.1, 0.0, 0.0], &g, alpha2(), &p);
    p.j_max_sum += 3;
    assert!(phi_overlap(xi, [0.1, 0.0, 0.0], &g, alpha2(), &p) >= a);
}

#[test]
fn gamma_at_zero_is_l_sup() {
    let g = model();
    let p = small_policy(8);
    let gamma = gamma_sup([0.0; 3], &g, alpha2(), &p).unwrap();
    let lb = l_bounds(&g, alpha2(), &p, LatticeConstants::new(0.25, 0.125).unwrap()).unwrap();
    assert_eq!(gamma.value, lb.l_sup.value);
    assert!(lb.l_inf.value > 0.0 && lb.l_inf.value <= lb.l_sup.value);
}

#[test]
fn gamma_matches_exhaustive_scan() {
    let g = model();
    let p = small_policy(6);
    let omega = [10.0, 0.0, 0.0];
    let neg = [-10.0, 0.0, 0.0];
    let mut best = 0.0f64;
    for xi in pyramid_points(&p) {
        best = best.max(phi_oracle(&g, xi, omega, p.j_max_sum));
        // the mirrored pyramid through Φ(−ξ, ω) = Φ(ξ, −ω)
        best = best.max(phi_oracle(&g, xi, neg, p.j_max_sum));
    }
    let got = gamma_sup(omega, &g, alpha2(), &p).unwrap().value;
    assert!((got - best).abs() <= 1e-10 * best, "{got} vs {best}");
}

#[test]
fn analytic_lsup_limit() {
    let p = FeasibilityProfile::new(50.0, 4.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    let c8 = 3.0 + 2.0 / 7.0;
    let expect = c8 * c8 * (1.0 / (1.0 - 2f64.powi(-98)) + 0.0 + 1.0);
    let got = analytic_lsup_bound(&p, alpha2()).unwrap();
    assert!((got - expect).abs() <= 1e-14 * expect);
    assert!((got - 2.0 * c8 * c8).abs() < 1e-12);
}

#[test]
fn analytic_lsup_monotone_and_finite() {
    let equal = FeasibilityProfile::new(8.5, 4.0, 4.0, 4.0, 4.0, 4.0).unwrap();
    let wide = FeasibilityProfile::new(8.5, 4.0, 4.0, 1.0, 4.0, 4.0).unwrap();
    assert!(analytic_lsup_bound(&wide, alpha2()).unwrap() > analytic_lsup_bound(&equal, alpha2()).unwrap());
    let near_iso = Anisotropy::new(1.01).unwrap();
    let v = analytic_lsup_bound(&FeasibilityProfile::filter_default(), near_iso).unwrap();
    assert!(v.is_finite() && v > 0.0);
    let bad = FeasibilityProfile::new(1.0, 4.0, 4.0, 4.0, 4.0, 4.0).unwrap();
    assert!(analytic_lsup_bound(&bad, alpha2()).is_err());
}

#[test]
fn analytic_rc_scaling_law() {
    let p = FeasibilityProfile::filter_default();
    let gp = default_gamma_prime(p.gamma);
    let c = LatticeConstants::new(0.4, 0.2).unwrap();
    let half = LatticeConstants::new(0.2, 0.1).unwrap();
    let a = analytic_rc_bound(c, &p, alpha2(), gp).unwrap();
    let b = analytic_rc_bound(half, &p, alpha2(), gp).unwrap();
    assert!(((a.t1 / b.t1).log2() - p.gamma).abs() < 1e-12);
    assert!(((a.t3 / b.t3).log2() - p.gamma).abs() < 1e-12);
    assert!(((a.t2 / b.t2).log2() - (p.gamma - gp)).abs() < 1e-12);
}

#[test]
fn analytic_rc_dual_path() {
    let p = FeasibilityProfile::new(9.0, 4.0, 1.0, 0.5, 0.5, 0.5).unwrap();
    let c = LatticeConstants::new(0.25, 0.125).unwrap();
    let gp = 1.5;
    let got = analytic_rc_bound(c, &p, alpha2(), gp).unwrap();
    // γ = 4: C(4) = 11/3, C(1.5) = 7, ζ(2), ζ(3), ζ(4) in closed form
    let (g, d) = (4.0f64, 9.0f64);
    let (cg, cgp) = (11.0 / 3.0, 7.0);
    let pre = 1.0 / (0.5 * 0.5);
    let log_term = 1.0; // ⌈log2(1/0.5)⌉
    let geo = |e: f64| 1.0 / (1.0 - 2f64.powf(e));
    let t1 = pre * cg * cg * (2.0 * 0.25 / 0.5f64).powf(g) * (log_term + geo(-d + 2.0 * g) + geo(-g));
    let t2 = pre
        * cg
        * cgp
        * (2.0 * 1.0 * 0.125 / (0.5 * 0.5f64)).powf(g - gp)
        * (2.0 * log_term + geo(-d + 2.0 * g) + geo(-g) + geo(-d + g + gp) + geo(-gp));
    let t3 = pre * cg * cg * (2.0 * 0.25 / 0.5f64).powf(g) * geo(-g);
    let (z2, z3, z4) = (PI * PI / 6.0, APERY, PI.powi(4) / 90.0);
    let ratio = 2.0; // min(⌈0.25/0.125⌉, 2)
    let total = t1 * (8.0 * z2 - 4.0 * z3 + 2.0 * z4) + 3.0 * ratio * t2 * (16.0 * z2 - 4.0 * z3) + t3 * (24.0 * z2 + 2.0 * z4);
    for (a, b) in [(got.t1, t1), (got.t2, t2), (got.t3, t3), (got.total, total)] {
        assert!((a - b).abs() <= 1e-12 * b, "{a} vs {b}");
    }
}

#[test]
fn analytic_rc_hypotheses() {
    let c = LatticeConstants::new(0.25, 0.125).unwrap();
    let weak = FeasibilityProfile::new(7.0, 4.0, 16.0, 4.0, 8.0, 8.0).unwrap();
    assert!(analytic_rc_bound(c, &weak, alpha2(), 1.5).is_err());
    let p = FeasibilityProfile::filter_default();
    assert!(analytic_rc_bound(c, &p, alpha2(), 1.0).is_err());
    assert!(analytic_rc_bound(c, &p, alpha2(), 2.0).is_err());
    assert_eq!(default_gamma_prime(4.0), 1.5);
}

#[test]
fn r_of_c_shrinks_with_lattice() {
    let g = model();
    let p = small_policy(6);
    let coarse = r_of_c(LatticeConstants::new(0.9, 0.45).unwrap(), &g, alpha2(), &p).unwrap();
    let fine = r_of_c(LatticeConstants::new(0.45, 0.225).unwrap(), &g, alpha2(), &p).unwrap();
    assert!(fine.value <= coarse.value);
    assert!(coarse.value > 0.0);
}

#[test]
fn grid_quantities_below_analytic_bounds() {
    let g = model();
    let prof = fitted_profile(&g);
    let c = LatticeConstants::new(0.25, 0.125).unwrap();
    let p = TruncationPolicy::standard(alpha2(), 16, CertificateDomain::Pyramid);
    let c2 = prof.c_fit * prof.c_fit;
    let lb = l_bounds(&g, alpha2(), &p, c).unwrap();
    assert!(lb.l_sup.value <= c2 * analytic_lsup_bound(&prof, alpha2()).unwrap() * 1.05);
    let r = r_of_c(c, &g, alpha2(), &p).unwrap();
    let bound = analytic_rc_bound(c, &prof, alpha2(), default_gamma_prime(prof.gamma)).unwrap();
    assert!(r.value <= c2 * bound.total * 1.05);
}

#[test]
fn covering_implies_lower_calderon() {
    let g = model();
    let p = TruncationPolicy::standard(alpha2(), 16, CertificateDomain::Pyramid);
    let rho = 0.1;
    assert!(covering_check(&g, alpha2(), rho, &p).unwrap());
    let lb = l_bounds(&g, alpha2(), &p, LatticeConstants::new(0.25, 0.125).unwrap()).unwrap();
    assert!(lb.l_inf.value > rho * rho);
    assert!(covering_check(&g, alpha2(), 0.0, &p).is_err());
}

#[test]
fn zero_generator_certificate() {
    let p = small_policy(6);
    let c = LatticeConstants::new(0.25, 0.125).unwrap();
    let cert = frame_bound_interval(&GeneratorModel::zero(), alpha2(), c, &p, None).unwrap();
    assert!(cert.no_lower_bound);
    assert_eq!((cert.l_inf, cert.l_sup, cert.r_c, cert.lower, cert.upper), (0.0, 0.0, 0.0, 0.0, 0.0));
}

#[test]
fn standard_certificate_is_positive() {
    let g = model();
    let prof = fitted_profile(&g);
    let c = LatticeConstants::new(0.25, 0.125).unwrap();
    let p = TruncationPolicy::standard(alpha2(), 16, CertificateDomain::Pyramid);
    let cert = frame_bound_interval(&g, alpha2(), c, &p, Some(&prof)).unwrap();
    assert!(!cert.no_lower_bound);
    assert!(cert.lower > 0.0 && cert.lower < cert.upper);
    assert_eq!(cert.det_mc, 0.25 * 0.125 * 0.125);
    assert!((cert.lower - (cert.l_inf - cert.r_c) / cert.det_mc).abs() <= 1e-12 * cert.lower);
    assert!(cert.invariants_hold(0.05));
    let text = serde_json::to_string(&cert).unwrap();
    let back: FrameCertificate = serde_json::from_str(&text).unwrap();
    assert_eq!(back, cert);
}

#[test]
fn coarse_lattice_loses_lower_bound() {
    let g = model();
    let c = LatticeConstants::new(5.0, 5.0).unwrap();
    let p = small_policy(6);
    let cert = frame_bound_interval(&g, alpha2(), c, &p, None).unwrap();
    assert!(cert.no_lower_bound);
    assert!(cert.lower <= 0.0);
}

#[test]
fn certificate_invariants_on_random_configs() {
    let g = model();
    let prof = fitted_profile(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let alphas = [(2, 1), (3, 2), (7, 4), (5, 4)];
    for _ in 0..10 {
        let (num, den) = alphas[rng.gen_range(0..alphas.len())];
        let a = Anisotropy::rational(num, den).unwrap();
        let c1 = rng.gen_range(0.1..0.6);
        let c2 = c1 * rng.gen_range(0.3..1.0);
        let c = LatticeConstants::new(c1, c2).unwrap();
        let mut p = TruncationPolicy::standard(a, 6, CertificateDomain::Pyramid);
        p.xi_grid.xi_max = 4.0;
        p.j_max_sum = TruncationPolicy::required_j(a, 4.0).max(8);
        let cert = frame_bound_interval(&g, a, c, &p, Some(&prof)).unwrap();
        assert!(cert.invariants_hold(0.05), "alpha {num}/{den} c ({c1}, {c2})");
        assert_eq!(cert.no_lower_bound, cert.r_c >= cert.l_inf);
    }
}

#[test]
fn policy_validation() {
    let mut p = TruncationPolicy::standard(alpha2(), 8, CertificateDomain::Pyramid);
    assert!(p.validate(alpha2()).is_ok());
    p.j_max_sum = 7;
    assert!(p.validate(alpha2()).is_err());
    let mut p = TruncationPolicy::standard(alpha2(), 8, CertificateDomain::Pyramid);
    p.lattice_radius = 3;
    assert!(p.validate(alpha2()).is_err());
    let r = p.xi_grid.refined();
    assert_eq!(r.n_axis, 15);
}
