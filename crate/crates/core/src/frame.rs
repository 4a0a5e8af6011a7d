//! Covering quantities of the shearlet system and frame-bound certificates.
//!
//! `Φ(ξ,ω)` sums products of shifted generator moduli over all scales and
//! shears, `Γ(ω)` is its supremum over the pyramid, `L_inf`/`L_sup` are the
//! extremes of `Φ(ξ,0)` and `R(c)` collects the lattice cross terms. Essential
//! extrema become extrema over deterministic sample grids.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShearletError};
use crate::generators::{FeasibilityProfile, GeneratorModel};
use crate::geometry::{scale_factors, shear_range, Anisotropy, LatticeConstants};

/// `C(γ) = 3 + 2/(γ−1)`.
pub fn c_gamma(gamma: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(ShearletError::Domain(format!("C(gamma) needs gamma > 1, got {gamma}")));
    }
    Ok(3.0 + 2.0 / (gamma - 1.0))
}

/// Riemann zeta for real `s > 1`: partial sum plus Euler–Maclaurin tail.
pub fn zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(ShearletError::Domain(format!("zeta needs s > 1, got {s}")));
    }
    const N: usize = 32;
    // B_{2k}/(2k)!
    const B: [f64; 6] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
    ];
    let n = N as f64;
    let mut sum: f64 = (1..N).map(|k| (k as f64).powf(-s)).sum();
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // rising factorial s(s+1)...(s+2k-2) times N^{-s-2k+1}
    let mut rising = s;
    let mut power = n.powf(-s - 1.0);
    for (k, b) in B.iter().enumerate() {
        sum += b * rising * power;
        let m = 2.0 * k as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        power /= n * n;
    }
    Ok(sum)
}

/// `Σ_{j≥0, 2^{−j} ≥ t} (2^{−j})^{−ι}`, summed directly.
pub fn dyadic_sum_above(t: f64, iota: f64) -> f64 {
    let mut sum = 0.0;
    let mut j = 0i32;
    while (-j as f64).exp2() >= t {
        sum += (j as f64 * iota).exp2();
        j += 1;
    }
    sum
}

/// Closed-form bound `(t^{−ι} − 2^{−ι})/(1 − 2^{−ι})` for `t ∈ (0, 1]`, zero for `t > 1`.
pub fn dyadic_bound_above(t: f64, iota: f64) -> f64 {
    if t > 1.0 {
        return 0.0;
    }
    (t.powf(-iota) - (-iota).exp2()) / (1.0 - (-iota).exp2())
}

/// `Σ_{j≥0, 2^{−j} ≤ t} (2^{−j})^{ι}`, summed until the terms underflow.
pub fn dyadic_sum_below(t: f64, iota: f64) -> f64 {
    let mut sum = 0.0;
    for j in 0..4000 {
        let x = (-(j as f64)).exp2();
        if x <= t {
            let term = x.powf(iota);
            if term == 0.0 {
                break;
            }
            sum += term;
        }
    }
    sum
}

/// Closed-form bound `t^ι/(1 − 2^{−ι})`; equals `1/(1 − 2^{−ι})` for `t > 1`.
pub fn dyadic_bound_below(t: f64, iota: f64) -> f64 {
    if t > 1.0 {
        return 1.0 / (1.0 - (-iota).exp2());
    }
    t.powf(iota) / (1.0 - (-iota).exp2())
}

/// Which set the essential extrema run over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateDomain {
    /// The pyramid `P`, for one pyramid-pair system.
    Pyramid,
    /// All of `R³`, for the full hybrid system with low-pass part.
    Full,
}

/// Sampling grid for the essential extrema.
///
/// Pyramid domain: `ξ1` log-spaced on `[1, xi_max]` with `n_axis` points,
/// `ξ2/ξ1` and `ξ3/ξ1` linear on `[−1, 1]` with `n_cross` points.
/// Full domain: each coordinate takes `0` and `n_axis − 1` log-spaced values
/// on `[xi_min_full, xi_max]` (the quantities are even in each coordinate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiGrid {
    pub xi_max: f64,
    pub n_axis: usize,
    pub n_cross: usize,
    pub xi_min_full: f64,
}

impl XiGrid {
    /// Nested refinement: every old sample is kept and midpoints are added.
    pub fn refined(&self) -> XiGrid {
        XiGrid {
            n_axis: 2 * self.n_axis - 1,
            n_cross: 2 * self.n_cross - 1,
            ..*self
        }
    }
}

/// Truncation of the infinite sums and suprema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Last scale kept in the scale sum of `Φ`.
    pub j_max_sum: u32,
    /// Minimal max-norm radius of the lattice sum in `R(c)`.
    pub lattice_radius: u32,
    /// Hard cap on the lattice radius while chasing the shell criterion.
    pub lattice_radius_cap: u32,
    pub xi_grid: XiGrid,
    pub domain: CertificateDomain,
}

/// Scale-sum terms whose axis factor falls below this are skipped.
const NEGLIGIBLE: f64 = 1e-30;
/// Relative size of the last lattice shell at which the `R(c)` sum stops.
const SHELL_TOL: f64 = 1e-6;

impl TruncationPolicy {
    /// Smallest scale cutoff for which `2^{−jα/2}·xi_max ≤ 2^{−6}`, i.e. every
    /// grid frequency has passed below the generator's vanishing-moment zone.
    pub fn required_j(alpha: Anisotropy, xi_max: f64) -> u32 {
        ((2.0 / alpha.value()) * (xi_max.log2() + 6.0)).ceil().max(0.0) as u32
    }

    /// The standard grid of `n³` points with the scale cutoff set from the grid.
    pub fn standard(alpha: Anisotropy, n: usize, domain: CertificateDomain) -> Self {
        let xi_max = match domain {
            CertificateDomain::Pyramid => 8.0,
            CertificateDomain::Full => 8.0,
        };
        TruncationPolicy {
            j_max_sum: Self::required_j(alpha, xi_max).max(8),
            lattice_radius: 4,
            lattice_radius_cap: 12,
            xi_grid: XiGrid {
                xi_max,
                n_axis: n,
                n_cross: n,
                xi_min_full: 1.0 / 64.0,
            },
            domain,
        }
    }

    pub fn validate(&self, alpha: Anisotropy) -> Result<()> {
        let g = &self.xi_grid;
        if self.j_max_sum < 8 {
            return Err(ShearletError::Constraint(format!(
                "j_max_sum must be >= 8, got {}",
                self.j_max_sum
            )));
        }
        if self.lattice_radius < 4 || self.lattice_radius_cap < self.lattice_radius {
            return Err(ShearletError::Constraint(format!(
                "lattice radius must be >= 4 and below its cap, got {} (cap {})",
                self.lattice_radius, self.lattice_radius_cap
            )));
        }
        if g.n_axis < 2 || g.n_cross < 2 || !(g.xi_max > 1.0) || !(g.xi_min_full > 0.0 && g.xi_min_full < g.xi_max) {
            return Err(ShearletError::Constraint(format!("invalid xi grid {g:?}")));
        }
        let need = Self::required_j(alpha, g.xi_max);
        if self.j_max_sum < need {
            return Err(ShearletError::Constraint(format!(
                "j_max_sum {} does not reach past the grid (needs >= {need} for xi_max {})",
                self.j_max_sum, g.xi_max
            )));
        }
        Ok(())
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let u = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
            (lo.ln() + u * (hi.ln() - lo.ln())).exp()
        })
        .collect()
}

fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Tensor sample grid. In the ratio layout the cross coordinates are
/// `ratio·ξ1`; in the absolute layout they are independent of `ξ1`.
#[derive(Debug, Clone)]
struct SampleGrid {
    x1: Vec<f64>,
    cross: Vec<f64>,
    ratio: bool,
}

impl SampleGrid {
    fn pyramid(g: &XiGrid) -> Self {
        SampleGrid {
            x1: log_space(1.0, g.xi_max, g.n_axis),
            cross: lin_space(-1.0, 1.0, g.n_cross),
            ratio: true,
        }
    }

    fn octant(g: &XiGrid) -> Self {
        let mut axis = vec![0.0];
        axis.extend(log_space(g.xi_min_full, g.xi_max, g.n_axis - 1));
        SampleGrid {
            x1: axis.clone(),
            cross: axis,
            ratio: false,
        }
    }

    fn cross_at(&self, i: usize, b: usize) -> f64 {
        if self.ratio {
            self.cross[b] * self.x1[i]
        } else {
            self.cross[b]
        }
    }

    fn point(&self, i: usize, b: usize, c: usize) -> [f64; 3] {
        [self.x1[i], self.cross_at(i, b), self.cross_at(i, c)]
    }

    fn len(&self) -> usize {
        self.x1.len() * self.cross.len() * self.cross.len()
    }
}

/// Tabulated evaluation of `Φ_P(·,ω)` on a tensor grid. The generator is
/// separable, so per scale
/// `Φ_j(ξ,ω) = G_{ω1}(a1)·H_{ω2}(a1,a2)·H_{ω3}(a1,a3)` with
/// `a = A_{2^{−j}}ξ`, `G_w(a1) = |ψ̂_1(a1)||ψ̂_1(a1+w)|` and
/// `H_w(a1,a2) = Σ_{|k|≤K_j} |ψ̂_2(a2−k a1)||ψ̂_2(a2−k a1+w)|`.
struct OverlapEngine<'a> {
    gen: &'a GeneratorModel,
    alpha: Anisotropy,
    j_max: u32,
    grid: SampleGrid,
    /// `|ψ̂_1(a1)|` per scale and `ξ1` sample.
    axis_abs: Vec<Vec<f64>>,
    g_cache: HashMap<u64, Vec<Vec<f64>>>,
    h_cache: HashMap<u64, Vec<Vec<f64>>>,
}

impl<'a> OverlapEngine<'a> {
    fn new(gen: &'a GeneratorModel, alpha: Anisotropy, j_max: u32, grid: SampleGrid) -> Self {
        let axis_abs = (0..=j_max)
            .map(|j| {
                let (lead, _) = scale_factors(j as f64, alpha);
                grid.x1.iter().map(|&x| gen.axis.eval(x / lead).abs()).collect()
            })
            .collect();
        OverlapEngine {
            gen,
            alpha,
            j_max,
            grid,
            axis_abs,
            g_cache: HashMap::new(),
            h_cache: HashMap::new(),
        }
    }

    fn active(&self, j: usize, i: usize) -> bool {
        self.axis_abs[j][i] >= NEGLIGIBLE
    }

    fn g_table(&mut self, w: f64) -> &Vec<Vec<f64>> {
        let key = w.to_bits();
        if !self.g_cache.contains_key(&key) {
            let table: Vec<Vec<f64>> = (0..=self.j_max as usize)
                .map(|j| {
                    let (lead, _) = scale_factors(j as f64, self.alpha);
                    self.grid
                        .x1
                        .iter()
                        .enumerate()
                        .map(|(i, &x)| {
                            if !self.active(j, i) {
                                return 0.0;
                            }
                            let a1 = x / lead;
                            let shifted = if w == 0.0 {
                                self.axis_abs[j][i]
                            } else {
                                self.gen.axis.eval(a1 + w).abs()
                            };
                            self.axis_abs[j][i] * shifted
                        })
                        .collect()
                })
                .collect();
            self.g_cache.insert(key, table);
        }
        &self.g_cache[&key]
    }

    fn h_table(&mut self, w: f64) -> &Vec<Vec<f64>> {
        let key = w.to_bits();
        if !self.h_cache.contains_key(&key) {
            let n1 = self.grid.x1.len();
            let n2 = self.grid.cross.len();
            let mut table = Vec::with_capacity(self.j_max as usize + 1);
            for j in 0..=self.j_max as usize {
                let (lead, cross) = scale_factors(j as f64, self.alpha);
                let kmax = shear_range(j as u32, self.alpha);
                let mut t = vec![0.0; n1 * n2];
                for i in 0..n1 {
                    if !self.active(j, i) {
                        continue;
                    }
                    let a1 = self.grid.x1[i] / lead;
                    for b in 0..n2 {
                        let a2 = self.grid.cross_at(i, b) / cross;
                        t[i * n2 + b] = shear_sum(self.gen, a1, a2, w, kmax);
                    }
                }
                table.push(t);
            }
            self.h_cache.insert(key, table);
        }
        &self.h_cache[&key]
    }

    /// `Φ_P(ξ,ω)` at every grid point, laid out `[i][b][c]`.
    fn assemble(&mut self, omega: [f64; 3]) -> Vec<f64> {
        self.g_table(omega[0]);
        self.h_table(omega[1]);
        self.h_table(omega[2]);
        let g = &self.g_cache[&omega[0].to_bits()];
        let h2 = &self.h_cache[&omega[1].to_bits()];
        let h3 = &self.h_cache[&omega[2].to_bits()];
        let n1 = self.grid.x1.len();
        let n = self.grid.cross.len();
        let mut out = vec![0.0; n1 * n * n];
        for i in 0..n1 {
            let acc = &mut out[i * n * n..(i + 1) * n * n];
            for j in 0..=self.j_max as usize {
                let gj = g[j][i];
                if gj == 0.0 {
                    continue;
                }
                let row2 = &h2[j][i * n..(i + 1) * n];
                let row3 = &h3[j][i * n..(i + 1) * n];
                for b in 0..n {
                    let gb = gj * row2[b];
                    if gb == 0.0 {
                        continue;
                    }
                    let dst = &mut acc[b * n..(b + 1) * n];
                    for c in 0..n {
                        dst[c] += gb * row3[c];
                    }
                }
            }
        }
        out
    }
}

/// `Σ_{|k|≤kmax} |ψ̂_2(a2−k a1)|·|ψ̂_2(a2−k a1+w)|`.
fn shear_sum(gen: &GeneratorModel, a1: f64, a2: f64, w: f64, kmax: i64) -> f64 {
    (-kmax..=kmax)
        .map(|k| {
            let e = a2 - k as f64 * a1;
            let v = gen.cross.eval(e).abs();
            if v == 0.0 {
                return 0.0;
            }
            if w == 0.0 {
                v * v
            } else {
                v * gen.cross.eval(e + w).abs()
            }
        })
        .sum()
}

/// `Φ(ξ,ω)` at a single point for the reference pair `P`, summing scales
/// `0..=j_max_sum` and all shears `|k_i| ≤ ⌈2^{j(α−1)/2}⌉`.
pub fn phi_overlap(
    xi: [f64; 3],
    omega: [f64; 3],
    gen: &GeneratorModel,
    alpha: Anisotropy,
    policy: &TruncationPolicy,
) -> f64 {
    (0..=policy.j_max_sum)
        .map(|j| {
            let (lead, cross) = scale_factors(j as f64, alpha);
            let kmax = shear_range(j, alpha);
            let a1 = xi[0] / lead;
            let g = gen.axis.eval(a1).abs() * gen.axis.eval(a1 + omega[0]).abs();
            if g == 0.0 {
                return 0.0;
            }
            g * shear_sum(gen, a1, xi[1] / cross, omega[1], kmax)
                * shear_sum(gen, a1, xi[2] / cross, omega[2], kmax)
        })
        .sum()
}

/// A grid extremum and where it was attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridExtremum {
    pub value: f64,
    pub at: [f64; 3],
}

fn arg_extreme(values: &[f64], grid: &SampleGrid, max: bool) -> GridExtremum {
    let n = grid.cross.len();
    let mut best = if max { f64::NEG_INFINITY } else { f64::INFINITY };
    let mut idx = 0;
    for (p, &v) in values.iter().enumerate() {
        if (max && v > best) || (!max && v < best) {
            best = v;
            idx = p;
        }
    }
    let (i, b, c) = (idx / (n * n), (idx / n) % n, idx % n);
    GridExtremum {
        value: best,
        at: grid.point(i, b, c),
    }
}

/// `Γ(ω) = sup_{ξ∈P} Φ(ξ,ω)` on the policy's pyramid grid. The grid covers
/// `P1`; `P4` is reached through `Φ(−ξ,ω) = Φ(ξ,−ω)`, which holds because
/// the generator modulus is even in every coordinate.
pub fn gamma_sup(
    omega: [f64; 3],
    gen: &GeneratorModel,
    alpha: Anisotropy,
    policy: &TruncationPolicy,
) -> Result<GridExtremum> {
    policy.validate(alpha)?;
    let grid = SampleGrid::pyramid(&policy.xi_grid);
    let mut engine = OverlapEngine::new(gen, alpha, policy.j_max_sum, grid);
    let pos = arg_extreme(&engine.assemble(omega), &engine.grid, true);
    let neg_omega = [-omega[0], -omega[1], -omega[2]];
    let neg = arg_extreme(&engine.assemble(neg_omega), &engine.grid, true);
    Ok(if neg.value > pos.value {
        GridExtremum {
            value: neg.value,
            at: [-neg.at[0], -neg.at[1], -neg.at[2]],
        }
    } else {
        pos
    })
}

/// Grid extremes of `Φ(ξ,0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LBounds {
    pub l_inf: GridExtremum,
    pub l_sup: GridExtremum,
    /// Set when an extremum sits on the outer `ξ1` face of the grid, where
    /// truncation of the scale sum or the grid range may bias it.
    pub boundary_warning: bool,
}

fn pyramid_l_bounds(
    gen: &GeneratorModel,
    alpha: Anisotropy,
    j_max: u32,
    grid: &XiGrid,
) -> (LBounds, Vec<f64>, SampleGrid) {
    let sg = SampleGrid::pyramid(grid);
    let mut engine = OverlapEngine::new(gen, alpha, j_max, sg);
    let phi = engine.assemble([0.0; 3]);
    let sg = engine.grid.clone();
    let l_inf = arg_extreme(&phi, &sg, false);
    let l_sup = arg_extreme(&phi, &sg, true);
    let top = *sg.x1.last().unwrap_or(&0.0);
    let warn = l_inf.at[0] == top || l_sup.at[0] == top;
    (
        LBounds {
            l_inf,
            l_sup,
            boundary_warning: warn,
        },
        phi,
        sg,
    )
}

/// Combined `Φ` of the full system on the octant grid: the three pairs plus
/// the low-pass term weighted by `(c2/c1)²`, all normalized by `det M_c`.
fn full_phi(
    gen: &GeneratorModel,
    alpha: Anisotropy,
    j_max: u32,
    grid: &XiGrid,
    lowpass_weight: f64,
) -> (Vec<f64>, Vec<f64>, SampleGrid) {
    let sg = SampleGrid::octant(grid);
    let mut engine = OverlapEngine::new(gen, alpha, j_max, sg);
    let single = engine.assemble([0.0; 3]);
    let sg = engine.grid.clone();
    let n = sg.x1.len();
    let low: Vec<f64> = sg.x1.iter().map(|&t| gen.phi_hat_1d(t).abs()).collect();
    let mut total = vec![0.0; n * n * n];
    for i in 0..n {
        for b in 0..n {
            for c in 0..n {
                let p = (i * n + b) * n + c;
                // pair P̃ swaps axes 1,2 and pair P̆ swaps axes 1,3
                let tilde = single[(b * n + i) * n + c];
                let breve = single[(c * n + b) * n + i];
                let phi_low = low[i] * low[b] * low[c];
                total[p] = single[p] + tilde + breve + lowpass_weight * phi_low * phi_low;
            }
        }
    }
    (total, single, sg)
}

/// `L_inf`, `L_sup` on the policy grid for the policy's domain.
pub fn l_bounds(
    gen: &GeneratorModel,
    alpha: Anisotropy,
    policy: &TruncationPolicy,
    lattice: LatticeConstants,
) -> Result<LBounds> {
    policy.validate(alpha)?;
    Ok(match policy.domain {
        CertificateDomain::Pyramid => pyramid_l_bounds(gen, alpha, policy.j_max_sum, &policy.xi_grid).0,
        CertificateDomain::Full => {
            let w = (lattice.c2 / lattice.c1).powi(2);
            let (total, _, sg) = full_phi(gen, alpha, policy.j_max_sum, &policy.xi_grid, w);
            let l_inf = arg_extreme(&total, &sg, false);
            let l_sup = arg_extreme(&total, &sg, true);
            let top = *sg.x1.last().unwrap_or(&0.0);
            let on_face = |p: [f64; 3]| p.iter().any(|v| *v == top);
            LBounds {
                l_inf,
                l_sup,
                boundary_warning: on_face(l_inf.at) || on_face(l_sup.at),
            }
        }
    })
}

/// One evaluation of the lattice cross-term sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcValue {
    pub value: f64,
    /// Final max-norm radius of the summed lattice box.
    pub radius: u32,
    /// Contribution of each shell `|m|_∞ = ρ`, `ρ = 1..=radius`.
    pub shells: Vec<f64>,
    /// Extrapolated remainder beyond the last shell assuming power decay.
    pub tail_estimate: f64,
    /// True when the last shell fell below the relative tolerance.
    pub converged: bool,
}

fn shell_tail(shells: &[f64]) -> f64 {
    let n = shells.len();
    if n < 2 || shells[n - 1] == 0.0 {
        return 0.0;
    }
    let (r0, r1) = ((n - 1) as f64, n as f64);
    let (s0, s1) = (shells[n - 2], shells[n - 1]);
    if s0 <= s1 {
        return f64::INFINITY;
    }
    // shells decay like ρ^{-p}; Σ_{ρ>R} ρ^{-p} ≤ R^{1-p}/(p-1)
    let p = (s0 / s1).ln() / (r1 / r0).ln();
    if p <= 1.0 {
        f64::INFINITY
    } else {
        s1 * r1 / (p - 1.0)
    }
}

/// Sums `sqrt(Γ(ω_m)Γ(−ω_m))` shell by shell from radius 1 until both the
/// minimal radius is reached and the last shell is below `SHELL_TOL`
/// relative to the running sum.
fn lattice_sum(
    policy: &TruncationPolicy,
    mut gamma_at: impl FnMut([i64; 3]) -> f64,
) -> RcValue {
    let mut shells = Vec::new();
    let mut total = 0.0;
    let mut radius = 0;
    let mut converged = false;
    for rho in 1..=policy.lattice_radius_cap as i64 {
        let mut shell = 0.0;
        for m1 in -rho..=rho {
            for m2 in -rho..=rho {
                for m3 in -rho..=rho {
                    if m1.abs().max(m2.abs()).max(m3.abs()) != rho {
                        continue;
                    }
                    let g = gamma_at([m1, m2, m3]);
                    let gn = gamma_at([-m1, -m2, -m3]);
                    shell += (g * gn).sqrt();
                }
            }
        }
        total += shell;
        shells.push(shell);
        radius = rho as u32;
        if radius >= policy.lattice_radius && shell <= SHELL_TOL * total {
            converged = true;
            break;
        }
    }
    RcValue {
        value: total,
        radius,
        tail_estimate: shell_tail(&shells),
        shells,
        converged,
    }
}

/// Keeps `Γ` evaluations per lattice point so every `ω` is assembled once.
struct GammaCache<'a> {
    engine: OverlapEngine<'a>,
    diag: [f64; 3],
    values: HashMap<[i64; 3], f64>,
}

impl GammaCache<'_> {
    fn omega(&self, m: [i64; 3]) -> [f64; 3] {
        [m[0] as f64 / self.diag[0], m[1] as f64 / self.diag[1], m[2] as f64 / self.diag[2]]
    }

    /// Supremum over the sampled half-domain at `ω_m`.
    fn half(&mut self, m: [i64; 3]) -> f64 {
        if let Some(v) = self.values.get(&m) {
            return *v;
        }
        let w = self.omega(m);
        let v = self
            .engine
            .assemble(w)
            .into_iter()
            .fold(0.0f64, f64::max);
        self.values.insert(m, v);
        v
    }
}

/// `R(c)` for the reference pair on the pyramid `P`.
pub fn r_of_c(
    c: LatticeConstants,
    gen: &GeneratorModel,
    alpha: Anisotropy,
    policy: &TruncationPolicy,
) -> Result<RcValue> {
    policy.validate(alpha)?;
    let grid = SampleGrid::pyramid(&policy.xi_grid);
    let mut cache = GammaCache {
        engine: OverlapEngine::new(gen, alpha, policy.j_max_sum, grid),
        diag: c.diagonal(crate::geometry::PyramidPair::P),
        values: HashMap::new(),
    };
    // Γ_P(ω) = max(Γ_{P1}(ω), Γ_{P1}(−ω))
    Ok(lattice_sum(policy, |m| {
        let a = cache.half(m);
        let b = cache.half([-m[0], -m[1], -m[2]]);
        a.max(b)
    }))
}

/// `R(c)` over all of `R³` for the full system: three times the pair
/// system's value (the pairs are coordinate swaps of each other, lattice
/// included) plus the low-pass system's value scaled by `(c2/c1)²`.
pub fn r_of_c_full(
    c: LatticeConstants,
    gen: &GeneratorModel,
    alpha: Anisotropy,
    policy: &TruncationPolicy,
) -> Result<(RcValue, RcValue, f64)> {
    policy.validate(alpha)?;
    let grid = SampleGrid::octant(&policy.xi_grid);
    let mut cache = GammaCache {
        engine: OverlapEngine::new(gen, alpha, policy.j_max_sum, grid),
        diag: c.diagonal(crate::geometry::PyramidPair::P),
        values: HashMap::new(),
    };
    // the octant grid reaches every sign pattern of ξ through sign flips of ω
    let pair = lattice_sum(policy, |m| {
        let mut best = 0.0f64;
        for s in 0..8 {
            let f = |bit: usize| if s & (1 << bit) == 0 { 1 } else { -1 };
            best = best.max(cache.half([f(0) * m[0], f(1) * m[1], f(2) * m[2]]));
        }
        best
    });
    // low-pass: Γ_φ(ω) = Π_i sup_t |φ̂(t)||φ̂(t+ω_i)| with ω = m/c1
    let ts = lin_space(-policy.xi_grid.xi_max, policy.xi_grid.xi_max, 8 * policy.xi_grid.n_axis + 1);
    let lows: Vec<f64> = ts.iter().map(|&t| gen.phi_hat_1d(t).abs()).collect();
    let mut sup_cache: HashMap<i64, f64> = HashMap::new();
    let mut sup1 = |m: i64| -> f64 {
        *sup_cache.entry(m).or_insert_with(|| {
            let w = m as f64 / c.c1;
            ts.iter()
                .zip(&lows)
                .map(|(&t, &v)| v * gen.phi_hat_1d(t + w).abs())
                .fold(0.0f64, f64::max)
        })
    };
    let low = lattice_sum(policy, |m| sup1(m[0]) * sup1(m[1]) * sup1(m[2]));
    let w = (c.c2 / c.c1).powi(2);
    let total = 3.0 * pair.value + w * low.value;
    Ok((pair, low, total))
}

/// `(q²/(rs))·C(2γ)²·(1/(1−2^{(1−δ)α}) + ⌈(2/α)log2(q/q′)⌉ + 1)`; needs
/// `δ > 1`, `γ > 1/2`.
pub fn analytic_lsup_bound(profile: &FeasibilityProfile, alpha: Anisotropy) -> Result<f64> {
    let (d, g, a) = (profile.delta, profile.gamma, alpha.value());
    if !(d > 1.0 && g > 0.5) {
        return Err(ShearletError::Hypothesis(format!(
            "upper Calderón bound needs delta > 1 and gamma > 1/2, got delta={d}, gamma={g}"
        )));
    }
    let c2g = c_gamma(2.0 * g)?;
    let ratio = profile.q / profile.q_prime;
    let ceil_term = ((2.0 / a) * ratio.log2()).ceil().max(0.0);
    Ok(profile.q * profile.q / (profile.r * profile.s)
        * c2g
        * c2g
        * (1.0 / (1.0 - ((1.0 - d) * a).exp2()) + ceil_term + 1.0))
}

/// The closed-form bound on `R(c)` with its three building blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcBound {
    pub total: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub gamma_prime: f64,
}

/// Default `γ′`: midpoint of `(1, γ−2)`.
pub fn default_gamma_prime(gamma: f64) -> f64 {
    (1.0 + gamma - 2.0) / 2.0
}

/// Closed-form bound on `R(c)`; needs `δ > 2γ > 6`, `c1 ≥ c2 > 0` and
/// `1 < γ′ < γ−2`.
pub fn analytic_rc_bound(
    c: LatticeConstants,
    profile: &FeasibilityProfile,
    _alpha: Anisotropy,
    gamma_prime: f64,
) -> Result<RcBound> {
    let (d, g, gp) = (profile.delta, profile.gamma, gamma_prime);
    if !(d > 2.0 * g && 2.0 * g > 6.0) {
        return Err(ShearletError::Hypothesis(format!(
            "cross-term bound needs delta > 2 gamma > 6, got delta={d}, gamma={g}"
        )));
    }
    if !(gp > 1.0 && gp < g - 2.0) {
        return Err(ShearletError::Domain(format!(
            "gamma' must lie in (1, gamma-2) = (1, {}), got {gp}",
            g - 2.0
        )));
    }
    let (q, qp, r, s) = (profile.q, profile.q_prime, profile.r, profile.s);
    let pre = q * q / (r * s);
    let cg = c_gamma(g)?;
    let cgp = c_gamma(gp)?;
    let log_term = (q / qp).log2().ceil().max(0.0);
    let geo = |e: f64| 1.0 / (1.0 - e.exp2());
    let t1 = pre * cg * cg * (2.0 * c.c1 / qp).powf(g) * (log_term + geo(-d + 2.0 * g) + geo(-g));
    let t2 = pre
        * cg
        * cgp
        * (2.0 * q * c.c2 / (qp * r.min(s))).powf(g - gp)
        * (2.0 * log_term + geo(-d + 2.0 * g) + geo(-g) + geo(-d + g + gp) + geo(-gp));
    let t3 = pre * cg * cg * (2.0 * c.c1 / qp).powf(g) * geo(-g);
    let (z0, z1, z2) = (zeta(g - 2.0)?, zeta(g - 1.0)?, zeta(g)?);
    let ratio_term = (c.c1 / c.c2).ceil().min(2.0);
    let total = t1 * (8.0 * z0 - 4.0 * z1 + 2.0 * z2)
        + 3.0 * ratio_term * t2 * (16.0 * z0 - 4.0 * z1)
        + t3 * (24.0 * z0 + 2.0 * z2);
    Ok(RcBound {
        total,
        t1,
        t2,
        t3,
        gamma_prime: gp,
    })
}

/// Bound on the scale-sum remainder beyond `j_max_sum` at `|ξ1| ≤ xi_max`,
/// from the decay bound with its fitted constant:
/// `Σ_{j>J} C²(q 2^{−jα/2} ξmax)^δ (2K_j+1)² ≤ 25 C² (q ξmax)^δ t^ι/(1−2^{−ι})`
/// with `t = 2^{−(J+1)}` and `ι = αδ/2 − (α−1)`.
pub fn scale_tail_bound(profile: &FeasibilityProfile, alpha: Anisotropy, j_max_sum: u32, xi_max: f64) -> f64 {
    let a = alpha.value();
    let iota = a * profile.delta / 2.0 - (a - 1.0);
    if iota <= 0.0 {
        return f64::INFINITY;
    }
    let t = (-(j_max_sum as f64 + 1.0)).exp2();
    25.0 * profile.c_fit.powi(2) * (profile.q * xi_max).powf(profile.delta) * dyadic_bound_below(t, iota)
}

/// True iff every pyramid grid point is covered by some scale and shear with
/// `|ψ̂(S^T_{−k}A_{2^{−j}}ξ)| > ρ`.
pub fn covering_check(
    gen: &GeneratorModel,
    alpha: Anisotropy,
    rho: f64,
    policy: &TruncationPolicy,
) -> Result<bool> {
    if !(rho > 0.0) {
        return Err(ShearletError::Domain(format!("covering level must be positive, got {rho}")));
    }
    policy.validate(alpha)?;
    let sg = SampleGrid::pyramid(&policy.xi_grid);
    let n1 = sg.x1.len();
    let n = sg.cross.len();
    // best[i][b] per scale: max_k |ψ̂_2(a2 − k a1)|
    let mut covered = vec![false; n1 * n * n];
    for j in 0..=policy.j_max_sum {
        let (lead, cross) = scale_factors(j as f64, alpha);
        let kmax = shear_range(j, alpha);
        for i in 0..n1 {
            let a1 = sg.x1[i] / lead;
            let g = gen.axis.eval(a1).abs();
            if g <= rho {
                continue;
            }
            let best: Vec<f64> = (0..n)
                .map(|b| {
                    let a2 = sg.cross_at(i, b) / cross;
                    (-kmax..=kmax)
                        .map(|k| gen.cross.eval(a2 - k as f64 * a1).abs())
                        .fold(0.0f64, f64::max)
                })
                .collect();
            for b in 0..n {
                for c in 0..n {
                    if g * best[b] * best[c] > rho {
                        covered[(i * n + b) * n + c] = true;
                    }
                }
            }
        }
    }
    Ok(covered.iter().all(|v| *v))
}

/// Frame-bound certificate with its truncation provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameCertificate {
    pub domain: CertificateDomain,
    pub alpha: f64,
    pub lattice: LatticeConstants,
    pub det_mc: f64,
    pub l_inf: f64,
    pub l_sup: f64,
    pub l_inf_at: [f64; 3],
    pub l_sup_at: [f64; 3],
    pub r_c: f64,
    /// Pair-system quantities underlying a full-domain certificate.
    pub l_sup_pair: f64,
    pub r_c_pair: f64,
    pub r_c_lowpass: f64,
    pub lattice_radius_used: u32,
    pub lattice_tail_estimate: f64,
    pub analytic_lsup: Option<f64>,
    pub analytic_rc: Option<RcBound>,
    pub feasibility: Option<FeasibilityProfile>,
    pub scale_tail_bound: Option<f64>,
    pub lower: f64,
    pub upper: f64,
    /// Set when `R(c) ≥ L_inf`, i.e. no positive lower bound is certified.
    pub no_lower_bound: bool,
    pub boundary_warning: bool,
    pub empirical_a: Option<f64>,
    pub empirical_b: Option<f64>,
    pub policy: TruncationPolicy,
}

impl FrameCertificate {
    pub fn with_empirical(mut self, a: f64, b: f64) -> Self {
        self.empirical_a = Some(a);
        self.empirical_b = Some(b);
        self
    }

    /// Checks the certificate invariants with relative tolerance `tol`.
    pub fn invariants_hold(&self, tol: f64) -> bool {
        let mut ok = self.l_inf <= self.l_sup && self.r_c >= 0.0;
        let c2 = self.feasibility.map(|f| f.c_fit * f.c_fit).unwrap_or(1.0);
        if let Some(b) = self.analytic_lsup {
            ok &= self.l_sup_pair <= c2 * b * (1.0 + tol);
        }
        if let Some(b) = self.analytic_rc {
            ok &= self.r_c_pair <= c2 * b.total * (1.0 + tol);
        }
        if let (Some(a), Some(b)) = (self.empirical_a, self.empirical_b) {
            ok &= a <= b;
            if self.lower > 0.0 {
                ok &= self.lower <= a * (1.0 + tol) && b <= self.upper * (1.0 + tol);
            }
        }
        ok
    }
}

/// Assembles `L_inf`, `L_sup`, `R(c)` and the sandwich
/// `(L_inf − R)/det M_c ≤ A ≤ B ≤ (L_sup + R)/det M_c`. When a feasibility
/// profile is given the analytic bounds are added; they need
/// `δ > 2γ > 6`.
pub fn frame_bound_interval(
    gen: &GeneratorModel,
    alpha: Anisotropy,
    c: LatticeConstants,
    policy: &TruncationPolicy,
    profile: Option<&FeasibilityProfile>,
) -> Result<FrameCertificate> {
    policy.validate(alpha)?;
    let (analytic_lsup, analytic_rc, tail) = match profile {
        Some(p) => (
            Some(analytic_lsup_bound(p, alpha)?),
            Some(analytic_rc_bound(c, p, alpha, default_gamma_prime(p.gamma))?),
            Some(scale_tail_bound(p, alpha, policy.j_max_sum, policy.xi_grid.xi_max)),
        ),
        None => (None, None, None),
    };
    let det = c.det();
    let (lb, r_c, l_sup_pair, r_pair, r_low, radius, lattice_tail) = match policy.domain {
        CertificateDomain::Pyramid => {
            let lb = l_bounds(gen, alpha, policy, c)?;
            let r = r_of_c(c, gen, alpha, policy)?;
            (lb, r.value, lb.l_sup.value, r.value, 0.0, r.radius, r.tail_estimate)
        }
        CertificateDomain::Full => {
            let lb = l_bounds(gen, alpha, policy, c)?;
            // pair-system L_sup over R³: the unswapped single-pair array
            let (_, single, _) = full_phi(gen, alpha, policy.j_max_sum, &policy.xi_grid, 0.0);
            let l_sup_pair = single.iter().copied().fold(0.0f64, f64::max);
            let (pair, low, total) = r_of_c_full(c, gen, alpha, policy)?;
            let w = (c.c2 / c.c1).powi(2);
            (
                lb,
                total,
                l_sup_pair,
                pair.value,
                low.value,
                pair.radius.max(low.radius),
                3.0 * pair.tail_estimate + w * low.tail_estimate,
            )
        }
    };
    let lower = (lb.l_inf.value - r_c) / det;
    let upper = (lb.l_sup.value + r_c) / det;
    Ok(FrameCertificate {
        domain: policy.domain,
        alpha: alpha.value(),
        lattice: c,
        det_mc: det,
        l_inf: lb.l_inf.value,
        l_sup: lb.l_sup.value,
        l_inf_at: lb.l_inf.at,
        l_sup_at: lb.l_sup.at,
        r_c,
        l_sup_pair,
        r_c_pair: r_pair,
        r_c_lowpass: r_low,
        lattice_radius_used: radius,
        lattice_tail_estimate: lattice_tail,
        analytic_lsup,
        analytic_rc,
        feasibility: profile.copied(),
        scale_tail_bound: tail,
        lower,
        upper,
        no_lower_bound: r_c >= lb.l_inf.value,
        boundary_warning: lb.boundary_warning,
        empirical_a: None,
        empirical_b: None,
        policy: *policy,
    })
}

/// `Φ(ξ,0)` along the pyramid axis: for each `ξ1` sample the min and max
/// over the cross-ratio grid and the value on the axis ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiProfileRow {
    pub xi1: f64,
    pub min: f64,
    pub max: f64,
    pub center: f64,
}

pub fn phi_profile(
    gen: &GeneratorModel,
    alpha: Anisotropy,
    policy: &TruncationPolicy,
) -> Result<Vec<PhiProfileRow>> {
    policy.validate(alpha)?;
    let (_, phi, sg) = pyramid_l_bounds(gen, alpha, policy.j_max_sum, &policy.xi_grid);
    let n = sg.cross.len();
    Ok(sg
        .x1
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let block = &phi[i * n * n..(i + 1) * n * n];
            let mid = n / 2;
            PhiProfileRow {
                xi1: x,
                min: block.iter().copied().fold(f64::INFINITY, f64::min),
                max: block.iter().copied().fold(0.0, f64::max),
                center: phi_overlap([x, 0.0, 0.0], [0.0; 3], gen, alpha, policy)
                    .max(if n % 2 == 1 { block[mid * n + mid] } else { 0.0 }),
            }
        })
        .collect())
}

/// Number of samples in the sampling grid of the policy's domain.
pub fn grid_size(policy: &TruncationPolicy) -> usize {
    match policy.domain {
        CertificateDomain::Pyramid => SampleGrid::pyramid(&policy.xi_grid).len(),
        CertificateDomain::Full => SampleGrid::octant(&policy.xi_grid).len(),
    }
}
