//! Scaling and shear matrices, the six-pyramid frequency partition and the
//! index sets of the pyramid-adapted hybrid system.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShearletError};

pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|l| a[i][l] * b[l][j]).sum();
        }
    }
    out
}

pub fn mat_vec(a: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn det(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Anisotropy exponent `alpha` in (1, 2]. When built from a rational the
/// exact value is kept alongside the float.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anisotropy {
    value: f64,
    rational: Option<(i64, i64)>,
}

impl Anisotropy {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(ShearletError::Constraint(format!(
                "anisotropy alpha must lie in (1, 2], got {alpha}"
            )));
        }
        Ok(Anisotropy {
            value: alpha,
            rational: None,
        })
    }

    pub fn rational(num: i64, den: i64) -> Result<Self> {
        if den <= 0 {
            return Err(ShearletError::Constraint(format!(
                "anisotropy denominator must be positive, got {den}"
            )));
        }
        let r = Ratio::new(num, den);
        let mut a = Self::new(*r.numer() as f64 / *r.denom() as f64)?;
        a.rational = Some((*r.numer(), *r.denom()));
        Ok(a)
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn as_ratio(&self) -> Option<Ratio<i64>> {
        self.rational.map(|(p, q)| Ratio::new(p, q))
    }

    /// True when `2^{j(alpha-1)/2}` is an integer for the given scale, i.e.
    /// when shears at scale `j` act exactly on the integer lattice.
    pub fn integer_shear_step(&self, j: u32) -> Option<i64> {
        let (p, q) = self.rational?;
        let num = j as i64 * (p - q);
        let den = 2 * q;
        if num % den == 0 {
            let e = num / den;
            if (0..62).contains(&e) {
                return Some(1i64 << e);
            }
        }
        None
    }
}

/// The six frequency pyramids and the centre cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PyramidId {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    CenterCube,
}

impl PyramidId {
    pub const ALL: [PyramidId; 7] = [
        PyramidId::P1,
        PyramidId::P2,
        PyramidId::P3,
        PyramidId::P4,
        PyramidId::P5,
        PyramidId::P6,
        PyramidId::CenterCube,
    ];

    /// Membership test for the closed pyramid (or open centre cube).
    pub fn contains(&self, xi: [f64; 3]) -> bool {
        let max_norm = xi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let pyramid = |axis: usize, sign: f64| {
            let lead = sign * xi[axis];
            lead >= 1.0 && (0..3).all(|i| i == axis || xi[i].abs() <= lead)
        };
        match self {
            PyramidId::P1 => pyramid(0, 1.0),
            PyramidId::P2 => pyramid(1, 1.0),
            PyramidId::P3 => pyramid(2, 1.0),
            PyramidId::P4 => pyramid(0, -1.0),
            PyramidId::P5 => pyramid(1, -1.0),
            PyramidId::P6 => pyramid(2, -1.0),
            PyramidId::CenterCube => max_norm < 1.0,
        }
    }

    pub fn pair(&self) -> Option<PyramidPair> {
        match self {
            PyramidId::P1 | PyramidId::P4 => Some(PyramidPair::P),
            PyramidId::P2 | PyramidId::P5 => Some(PyramidPair::PTilde),
            PyramidId::P3 | PyramidId::P6 => Some(PyramidPair::PBreve),
            PyramidId::CenterCube => None,
        }
    }
}

/// Pyramid pairs `P = P1 ∪ P4`, `P̃ = P2 ∪ P5`, `P̆ = P3 ∪ P6`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PyramidPair {
    P,
    PTilde,
    PBreve,
}

impl PyramidPair {
    pub const ALL: [PyramidPair; 3] = [PyramidPair::P, PyramidPair::PTilde, PyramidPair::PBreve];

    /// Coordinate along which the pair's pyramids open.
    pub fn axis(&self) -> usize {
        match self {
            PyramidPair::P => 0,
            PyramidPair::PTilde => 1,
            PyramidPair::PBreve => 2,
        }
    }

    /// The two remaining coordinates, in increasing order.
    pub fn cross_axes(&self) -> [usize; 2] {
        match self {
            PyramidPair::P => [1, 2],
            PyramidPair::PTilde => [0, 2],
            PyramidPair::PBreve => [0, 1],
        }
    }

    /// Maps a frequency of this pair's system to the coordinates of the
    /// reference pair `P` (pyramid axis first). The maps are the coordinate
    /// swaps defining `ψ̃` and `ψ̆` and are their own inverses.
    pub fn to_reference(&self, xi: [f64; 3]) -> [f64; 3] {
        match self {
            PyramidPair::P => xi,
            PyramidPair::PTilde => [xi[1], xi[0], xi[2]],
            PyramidPair::PBreve => [xi[2], xi[1], xi[0]],
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PyramidPair::P => "P",
            PyramidPair::PTilde => "Ptilde",
            PyramidPair::PBreve => "Pbreve",
        }
    }
}

/// Diagonal scaling matrix of the pair at scale `j`.
pub fn scaling_matrix(j: u32, alpha: Anisotropy, pair: PyramidPair) -> Mat3 {
    let (lead, cross) = scale_factors(j as f64, alpha);
    let mut m = [[0.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = if i == pair.axis() { lead } else { cross };
    }
    m
}

/// `(2^{jα/2}, 2^{j/2})`; negative `j` gives the inverse factors.
pub fn scale_factors(j: f64, alpha: Anisotropy) -> (f64, f64) {
    (
        (j * alpha.value() / 2.0).exp2(),
        (j / 2.0).exp2(),
    )
}

/// Unimodular shear matrix; `k` sits in the pyramid-axis row.
pub fn shear_matrix(k: (i64, i64), pair: PyramidPair) -> Mat3 {
    let mut m = IDENTITY;
    let axis = pair.axis();
    let [c0, c1] = pair.cross_axes();
    m[axis][c0] = k.0 as f64;
    m[axis][c1] = k.1 as f64;
    m
}

/// Pyramid containing `xi`. Boundary points shared by several pyramids go
/// to the lowest-numbered one.
pub fn classify_frequency(xi: [f64; 3]) -> PyramidId {
    PyramidId::ALL
        .iter()
        .copied()
        .find(|p| p.contains(xi))
        // non-finite input falls through every test
        .unwrap_or(PyramidId::CenterCube)
}

/// `⌈2^{j(α−1)/2}⌉`, exact for rational alpha.
pub fn shear_range(j: u32, alpha: Anisotropy) -> i64 {
    if let Some(step) = alpha.integer_shear_step(j) {
        return step;
    }
    let v = (j as f64 * (alpha.value() - 1.0) / 2.0).exp2();
    let r = v.round();
    if (v - r).abs() <= 1e-12 * v {
        r as i64
    } else {
        v.ceil() as i64
    }
}

/// Translation step sizes `(c1, c2)` of the lattice `M_c Z³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeConstants {
    pub c1: f64,
    pub c2: f64,
}

impl LatticeConstants {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1 > 0.0 && c2 > 0.0 && c1.is_finite() && c2.is_finite()) {
            return Err(ShearletError::Constraint(format!(
                "lattice constants must be positive, got ({c1}, {c2})"
            )));
        }
        if c2 > c1 {
            return Err(ShearletError::Constraint(format!(
                "lattice constants need c2 <= c1, got ({c1}, {c2})"
            )));
        }
        Ok(LatticeConstants { c1, c2 })
    }

    /// `det M_c = c1·c2²`.
    pub fn det(&self) -> f64 {
        self.c1 * self.c2 * self.c2
    }

    /// Diagonal of `M_c` for the given pair (the long step sits on the pair axis).
    pub fn diagonal(&self, pair: PyramidPair) -> [f64; 3] {
        let mut d = [self.c2; 3];
        d[pair.axis()] = self.c1;
        d
    }
}

/// One shear cell `(pair, j, k)` of the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BandKey {
    pub pair: PyramidPair,
    pub j: u32,
    pub k: (i64, i64),
}

/// A full shearlet index: shear cell plus lattice position on the band's grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ShearletIndex {
    pub pair: PyramidPair,
    pub j: u32,
    pub k: (i64, i64),
    pub m: [usize; 3],
}

/// Shear cells ordered by pair, then ascending scale, then lexicographic shear.
pub fn band_keys(j_min: u32, j_max: u32, alpha: Anisotropy) -> Vec<BandKey> {
    let mut keys = Vec::new();
    if j_min > j_max {
        return keys;
    }
    for pair in PyramidPair::ALL {
        for j in j_min..=j_max {
            let kmax = shear_range(j, alpha);
            for k1 in -kmax..=kmax {
                for k2 in -kmax..=kmax {
                    keys.push(BandKey { pair, j, k: (k1, k2) });
                }
            }
        }
    }
    keys
}

fn next_pow2_at_least(v: f64) -> usize {
    let target = v.ceil().max(1.0) as usize;
    target.next_power_of_two()
}

/// Per-axis size of the digital translation lattice for scale `j`: the
/// lattice `(S_k A_{2^j})^{-1} M_c Z³` snapped to the smallest power-of-two
/// grid at least as dense along each axis, capped at `grid_n`.
/// `freq_scale` is the number of grid frequency units per unit of continuum
/// frequency.
pub fn snapped_lattice_shape(
    j: u32,
    alpha: Anisotropy,
    lattice: LatticeConstants,
    pair: PyramidPair,
    grid_n: usize,
    freq_scale: f64,
) -> [usize; 3] {
    let (lead, cross) = scale_factors(j as f64, alpha);
    let mut shape = [0usize; 3];
    for (axis, s) in shape.iter_mut().enumerate() {
        let density = if axis == pair.axis() {
            freq_scale * lead / lattice.c1
        } else {
            freq_scale * cross / lattice.c2
        };
        *s = next_pow2_at_least(density).min(grid_n);
    }
    shape
}

/// Full index list in canonical order (pair, j, k, then m lexicographic)
/// using the snapped lattice of [`snapped_lattice_shape`].
pub fn enumerate_indices(
    j_min: u32,
    j_max: u32,
    alpha: Anisotropy,
    lattice: LatticeConstants,
    grid_n: usize,
    freq_scale: f64,
) -> Vec<ShearletIndex> {
    let mut out = Vec::new();
    for key in band_keys(j_min, j_max, alpha) {
        let shape = snapped_lattice_shape(key.j, alpha, lattice, key.pair, grid_n, freq_scale);
        for m0 in 0..shape[0] {
            for m1 in 0..shape[1] {
                for m2 in 0..shape[2] {
                    out.push(ShearletIndex {
                        pair: key.pair,
                        j: key.j,
                        k: key.k,
                        m: [m0, m1, m2],
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(v: f64) -> Anisotropy {
        Anisotropy::new(v).unwrap()
    }

    #[test]
    fn scaling_matrix_examples() {
        assert_eq!(scaling_matrix(0, a(1.3), PyramidPair::P), IDENTITY);
        let m = scaling_matrix(2, a(2.0), PyramidPair::P);
        assert_eq!(m, [[4.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]]);
        // 2^{1.5} and 2^{2.25} checked against exact powers of roots of two
        let m = scaling_matrix(3, Anisotropy::rational(3, 2).unwrap(), PyramidPair::PBreve);
        let two_1_5 = 2.0 * std::f64::consts::SQRT_2;
        let two_2_25 = 4.0 * 2f64.sqrt().sqrt();
        assert!((m[0][0] - two_1_5).abs() < 1e-14);
        assert!((m[1][1] - two_1_5).abs() < 1e-14);
        assert!((m[2][2] - two_2_25).abs() < 1e-14);
    }

    #[test]
    fn scaling_determinant() {
        for alpha in [1.01, 1.5, 1.77, 2.0] {
            for j in 0..20 {
                for pair in PyramidPair::ALL {
                    let d = det(&scaling_matrix(j, a(alpha), pair));
                    let expect = (j as f64 * (alpha + 2.0) / 2.0).exp2();
                    assert!((d - expect).abs() <= 1e-12 * expect);
                }
            }
        }
    }

    #[test]
    fn shear_matrix_examples() {
        assert_eq!(shear_matrix((0, 0), PyramidPair::PTilde), IDENTITY);
        let s = shear_matrix((1, 2), PyramidPair::P);
        assert_eq!(s, [[1.0, 1.0, 2.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let s = shear_matrix((1, 2), PyramidPair::PTilde);
        assert_eq!(s, [[1.0, 0.0, 0.0], [1.0, 1.0, 2.0], [0.0, 0.0, 1.0]]);
        let s = shear_matrix((1, 2), PyramidPair::PBreve);
        assert_eq!(s, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 2.0, 1.0]]);
        for pair in PyramidPair::ALL {
            let p = mat_mul(&shear_matrix((-3, 5), pair), &shear_matrix((3, -5), pair));
            assert_eq!(p, IDENTITY);
            assert_eq!(det(&shear_matrix((-3, 5), pair)), 1.0);
        }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_frequency([2.0, 1.0, 0.0]), PyramidId::P1);
        assert_eq!(classify_frequency([0.5, 0.5, 0.5]), PyramidId::CenterCube);
        // (-1,-1,-1) lies in P4, P5 and P6
        let matching: Vec<_> = PyramidId::ALL
            .iter()
            .filter(|p| p.contains([-1.0, -1.0, -1.0]))
            .collect();
        assert_eq!(matching, vec![&PyramidId::P4, &PyramidId::P5, &PyramidId::P6]);
        assert_eq!(classify_frequency([-1.0, -1.0, -1.0]), PyramidId::P4);
        assert_eq!(classify_frequency([0.0, 0.0, -3.0]), PyramidId::P6);
    }

    #[test]
    fn shear_range_examples() {
        assert_eq!(shear_range(0, a(1.7)), 1);
        assert_eq!(shear_range(4, a(2.0)), 4);
        // 2^{1.25} = 2.378...
        assert_eq!(shear_range(5, Anisotropy::rational(3, 2).unwrap()), 3);
        assert_eq!(shear_range(5, a(1.5)), 3);
        assert_eq!(shear_range(6, Anisotropy::rational(2, 1).unwrap()), 8);
    }

    #[test]
    fn enumerate_counts() {
        let lat = LatticeConstants::new(0.25, 0.125).unwrap();
        let keys = band_keys(0, 0, a(2.0));
        assert_eq!(keys.len(), 3 * 9);
        let keys4 = band_keys(4, 4, a(2.0));
        assert_eq!(keys4.iter().filter(|k| k.pair == PyramidPair::P).count(), 81);
        assert!(band_keys(3, 2, a(2.0)).is_empty());
        let small = enumerate_indices(0, 0, a(2.0), lat, 8, 1.0);
        let per_cell: usize = snapped_lattice_shape(0, a(2.0), lat, PyramidPair::P, 8, 1.0)
            .iter()
            .product();
        assert_eq!(small.len(), 3 * 9 * per_cell);
        let mut last = 0;
        for jmax in 0..4 {
            let c = enumerate_indices(0, jmax, a(2.0), lat, 8, 1.0).len();
            assert!(c >= last);
            last = c;
        }
        // canonical order
        let mut sorted = small.clone();
        sorted.sort();
        assert_eq!(sorted, small);
    }
}
