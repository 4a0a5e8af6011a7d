use proptest::prelude::*;
use shearlab::geometry::*;

fn alpha(p: i64, q: i64) -> Anisotropy {
    Anisotropy::rational(p, q).unwrap()
}

/// Smallest integer `K` with `K^{2q} ≥ 2^{j(p−q)}`, i.e. `⌈2^{j(p/q−1)/2}⌉`
/// in exact integer arithmetic.
fn shear_range_oracle(j: u32, p: u32, q: u32) -> i64 {
    let target: u128 = 1u128 << (j * (p - q));
    let mut k: u128 = 1;
    while k.pow(2 * q) < target {
        k += 1;
    }
    k as i64
}

#[test]
fn scaling_matrix_identity_at_scale_zero() {
    for pair in PyramidPair::ALL {
        for a in [alpha(11, 10), alpha(3, 2), alpha(2, 1)] {
            assert_eq!(scaling_matrix(0, a, pair), IDENTITY);
        }
    }
}

#[test]
fn scaling_matrix_parabolic() {
    let m = scaling_matrix(2, alpha(2, 1), PyramidPair::P);
    assert_eq!(m, [[4.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]]);
}

#[test]
fn scaling_matrix_breve_exponents() {
    // 2^{1.5} squared is 8 and 2^{2.25} to the fourth is 512, both exact
    let m = scaling_matrix(3, alpha(3, 2), PyramidPair::PBreve);
    for d in [m[0][0], m[1][1]] {
        assert!((d * d - 8.0).abs() < 1e-13);
    }
    assert!((m[2][2].powi(4) - 512.0).abs() < 1e-11);
    for (i, row) in m.iter().enumerate() {
        for (l, v) in row.iter().enumerate() {
            if i != l {
                assert_eq!(*v, 0.0);
            }
        }
    }
}

#[test]
fn shear_matrix_examples() {
    for pair in PyramidPair::ALL {
        assert_eq!(shear_matrix((0, 0), pair), IDENTITY);
    }
    assert_eq!(
        shear_matrix((1, 2), PyramidPair::P),
        [[1.0, 1.0, 2.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    );
}

#[test]
fn shears_are_unimodular_and_compose_additively() {
    for pair in PyramidPair::ALL {
        for k in [(-3, 2), (1, 1), (4, -4)] {
            let s = shear_matrix(k, pair);
            assert_eq!(det(&s), 1.0);
            let inv = shear_matrix((-k.0, -k.1), pair);
            assert_eq!(mat_mul(&s, &inv), IDENTITY);
            let sum = shear_matrix((k.0 + 1, k.1 - 2), pair);
            assert_eq!(mat_mul(&s, &shear_matrix((1, -2), pair)), sum);
        }
    }
}

#[test]
fn classify_examples() {
    assert_eq!(classify_frequency([2.0, 1.0, 0.0]), PyramidId::P1);
    assert_eq!(classify_frequency([0.5, 0.5, 0.5]), PyramidId::CenterCube);
    let matching: Vec<PyramidId> = PyramidId::ALL
        .iter()
        .copied()
        .filter(|p| *p != PyramidId::CenterCube && p.contains([-1.0, -1.0, -1.0]))
        .collect();
    assert_eq!(matching, vec![PyramidId::P4, PyramidId::P5, PyramidId::P6]);
    assert_eq!(classify_frequency([-1.0, -1.0, -1.0]), matching[0]);
}

#[test]
fn shear_range_examples() {
    assert_eq!(shear_range(0, alpha(7, 4)), 1);
    assert_eq!(shear_range(4, alpha(2, 1)), 4);
    assert_eq!(shear_range(5, alpha(3, 2)), 3);
    assert_eq!(shear_range_oracle(5, 3, 2), 3);
}

#[test]
fn shear_range_matches_integer_oracle() {
    for (p, q) in [(2u32, 1u32), (3, 2), (5, 4), (7, 4), (6, 5)] {
        for j in 0..=12 {
            assert_eq!(
                shear_range(j, alpha(p as i64, q as i64)),
                shear_range_oracle(j, p, q),
                "alpha {p}/{q}, j {j}"
            );
        }
    }
}

#[test]
fn shear_cell_counts() {
    let keys = band_keys(0, 0, alpha(2, 1));
    for pair in PyramidPair::ALL {
        assert_eq!(keys.iter().filter(|k| k.pair == pair).count(), 9);
    }
    let keys = band_keys(4, 4, alpha(2, 1));
    assert_eq!(keys.iter().filter(|k| k.pair == PyramidPair::P).count(), 81);
}

#[test]
fn enumeration_is_ordered_and_sized() {
    let lat = LatticeConstants::new(0.25, 0.125).unwrap();
    let a = alpha(2, 1);
    let idx = enumerate_indices(0, 2, a, lat, 16, 2.0);
    let mut sorted = idx.clone();
    sorted.sort();
    assert_eq!(sorted, idx);
    let expect: usize = band_keys(0, 2, a)
        .iter()
        .map(|k| snapped_lattice_shape(k.j, a, lat, k.pair, 16, 2.0).iter().product::<usize>())
        .sum();
    assert_eq!(idx.len(), expect);
}

#[test]
fn lattice_determinant() {
    let c = LatticeConstants::new(0.25, 0.125).unwrap();
    assert_eq!(c.det(), 0.25 * 0.125 * 0.125);
    assert!(LatticeConstants::new(0.1, 0.2).is_err());
    assert!(LatticeConstants::new(0.0, 0.0).is_err());
}

proptest! {
    #[test]
    fn classification_partitions_space(x in -8.0f64..8.0, y in -8.0f64..8.0, z in -8.0f64..8.0) {
        let xi = [x, y, z];
        let id = classify_frequency(xi);
        prop_assert!(id.contains(xi));
        let first = PyramidId::ALL.iter().copied().find(|p| p.contains(xi)).unwrap();
        prop_assert_eq!(id, first);
        let max = x.abs().max(y.abs()).max(z.abs());
        prop_assert_eq!(id == PyramidId::CenterCube, max < 1.0);
    }

    #[test]
    fn scaling_determinant_law(j in 0u32..16, p in 11i64..=20) {
        let a = alpha(p, 10);
        for pair in PyramidPair::ALL {
            let d = det(&scaling_matrix(j, a, pair));
            let expect = (j as f64 * (a.value() + 2.0) / 2.0).exp2();
            prop_assert!((d - expect).abs() <= 1e-12 * expect);
        }
    }
}
