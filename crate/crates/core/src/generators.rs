//! Fourier-side generator models: the maximally flat filter pair, the
//! scaling function as an infinite product, the filter-based and separable
//! shearlets, and feasibility checks of the four-factor decay bound.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShearletError};
use crate::geometry::PyramidPair;

/// Default number of factors kept in the scaling-function product.
pub const DEFAULT_J_PHI: u32 = 24;

/// Filter parameters `(K, Lfilt)` of the maximally flat low-pass filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterDesign {
    pub k: u32,
    pub lfilt: u32,
}

impl FilterDesign {
    /// Shearlet filter range: `Lfilt ≥ 10` and `3·Lfilt/2 ≤ K ≤ 3·Lfilt − 2`.
    pub fn new(k: u32, lfilt: u32) -> Result<Self> {
        if lfilt < 10 || 2 * k < 3 * lfilt || k + 2 > 3 * lfilt {
            return Err(ShearletError::Constraint(format!(
                "filter needs Lfilt >= 10 and 3*Lfilt/2 <= K <= 3*Lfilt-2, got K={k}, Lfilt={lfilt}"
            )));
        }
        Ok(FilterDesign { k, lfilt })
    }

    /// Any `K ≥ Lfilt ≥ 1`, used for the orthogonal wavelet baseline (`K = Lfilt`).
    pub fn unchecked(k: u32, lfilt: u32) -> Result<Self> {
        if lfilt == 0 || k < lfilt {
            return Err(ShearletError::Constraint(format!(
                "filter needs K >= Lfilt >= 1, got K={k}, Lfilt={lfilt}"
            )));
        }
        Ok(FilterDesign { k, lfilt })
    }
}

/// Exact binomial coefficient.
pub fn binomial(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc·(n−i)/(i+1) stays integral at every step
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Magnitude evaluators `|m0|²`, `|m1|²` of the maximally flat filter pair.
#[derive(Debug, Clone)]
pub struct LowPassFilter {
    design: FilterDesign,
    /// `C(K−1+n, n)` for `n < K`.
    coeffs: Vec<f64>,
    normalization: f64,
}

fn horner(coeffs: &[f64], y: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c)
}

impl LowPassFilter {
    pub fn new(design: FilterDesign) -> Self {
        let k = design.k;
        let coeffs = (0..k).map(|n| binomial(k - 1 + n, n) as f64).collect();
        let mut filter = LowPassFilter {
            design,
            coeffs,
            normalization: 1.0,
        };
        // sup of |m0|² on a dense grid over one period
        let samples = 1 << 14;
        let sup = (0..=samples)
            .map(|i| filter.raw_m0_sq(i as f64 / samples as f64))
            .fold(0.0f64, f64::max);
        filter.normalization = sup.max(1.0);
        filter
    }

    pub fn design(&self) -> FilterDesign {
        self.design
    }

    /// Divisor applied to the binomial sum so that `|m0| ≤ 1`.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    fn raw_m0_sq(&self, x: f64) -> f64 {
        let (s, c) = sin_cos_sq(x);
        self.m0_sq_from(s, c)
    }

    /// `|m0|²` before normalization from `s = sin²(πx)` and `c = cos²(πx)`,
    /// passed separately so that neither is formed by cancellation.
    fn m0_sq_from(&self, s: f64, c: f64) -> f64 {
        let k = self.design.k as i32;
        let l = self.design.lfilt as usize;
        if s > 0.5 {
            c.powi(k) * horner(&self.coeffs[..l], s)
        } else {
            1.0 - self.defect(s, c)
        }
    }

    /// `1 − c^K Σ_{n<Lfilt} C(K−1+n,n) s^n` for `s ≤ 1/2`, using the full-sum
    /// identity `c^K P_K(s) + s^K P_K(c) = 1` to avoid cancellation.
    fn defect(&self, s: f64, c: f64) -> f64 {
        let k = self.design.k as i32;
        let l = self.design.lfilt as usize;
        let missing = if l < self.coeffs.len() {
            s.powi(l as i32) * horner(&self.coeffs[l..], s)
        } else {
            0.0
        };
        c.powi(k) * missing + s.powi(k) * horner(&self.coeffs, c)
    }

    /// `|m0(x)|²`, 1-periodic, equal to 1 at 0.
    pub fn m0_sq(&self, x: f64) -> f64 {
        self.raw_m0_sq(x) / self.normalization
    }

    /// `|m1(x)|² = |m0(x + 1/2)|²`.
    pub fn m1_sq(&self, x: f64) -> f64 {
        // the half shift swaps sin² and cos²
        let (s, c) = sin_cos_sq(x);
        self.m0_sq_from(c, s) / self.normalization
    }

    /// Zero-phase low-pass filter `m0 = +sqrt(|m0|²)`.
    pub fn m0(&self, x: f64) -> f64 {
        self.m0_sq(x).max(0.0).sqrt()
    }

    pub fn m1(&self, x: f64) -> f64 {
        self.m1_sq(x).max(0.0).sqrt()
    }

    /// `1 − m0(x)`, accurate for small `x`.
    pub fn one_minus_m0(&self, x: f64) -> f64 {
        let (s, c) = sin_cos_sq(x);
        if self.normalization == 1.0 && s <= 0.5 {
            let d = self.defect(s, c);
            // 1 − sqrt(1 − d) = d / (1 + sqrt(1 − d))
            d / (1.0 + (1.0 - d).max(0.0).sqrt())
        } else {
            1.0 - self.m0(x)
        }
    }
}

/// `(sin²(πx), cos²(πx))` after reducing `x` modulo 1.
fn sin_cos_sq(x: f64) -> (f64, f64) {
    let r = x - x.round();
    let (s, c) = (std::f64::consts::PI * r).sin_cos();
    (s * s, c * c)
}

/// Scaling function `φ̂(t) = Π_{j≥0} m0(2^{−j} t)` truncated to `J_phi` factors.
#[derive(Debug, Clone)]
pub struct ScalingFunction {
    filter: LowPassFilter,
    j_phi: u32,
    /// `sup_{0<|x|≤x0} (1 − m0(x))/x²`.
    quad_const: f64,
    quad_radius: f64,
}

impl ScalingFunction {
    pub fn new(filter: LowPassFilter, j_phi: u32) -> Result<Self> {
        if j_phi < 16 {
            return Err(ShearletError::Constraint(format!(
                "scaling-function truncation needs J_phi >= 16, got {j_phi}"
            )));
        }
        let quad_radius = 0.25;
        let samples = 4096;
        let quad_const = (1..=samples)
            .map(|i| {
                let x = quad_radius * i as f64 / samples as f64;
                filter.one_minus_m0(x) / (x * x)
            })
            .fold(0.0f64, f64::max);
        Ok(ScalingFunction {
            filter,
            j_phi,
            quad_const,
            quad_radius,
        })
    }

    pub fn filter(&self) -> &LowPassFilter {
        &self.filter
    }

    pub fn j_phi(&self) -> u32 {
        self.j_phi
    }

    /// Fitted constant `c` of `|1 − m0(x)| ≤ c·x²` on `|x| ≤ 1/4`.
    pub fn quadratic_constant(&self) -> f64 {
        self.quad_const
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_with(t, self.j_phi)
    }

    /// Product of the first `factors` terms. Once the argument is small and
    /// the factor is one in floating point the loop ends early.
    pub fn eval_with(&self, t: f64, factors: u32) -> f64 {
        let mut acc = 1.0;
        let mut x = t;
        for _ in 0..factors {
            let m = self.filter.m0(x);
            if m == 1.0 && x.abs() < 0.25 {
                // the defect is monotone on [0, 1/4]: later factors are 1 too
                break;
            }
            acc *= m;
            if acc == 0.0 {
                break;
            }
            x *= 0.5;
        }
        acc
    }

    /// Bound on `|Π_{j<J_phi} − Π_{j≥0}|` at `t`, or infinity when the
    /// truncated factors have not yet reached the quadratic regime.
    pub fn tail_bound(&self, t: f64) -> f64 {
        let x = t.abs() * (-(self.j_phi as f64)).exp2();
        if x > self.quad_radius {
            return f64::INFINITY;
        }
        // Σ_{j≥J} c (2^{−j}t)² = c x² · 4/3
        self.quad_const * x * x * 4.0 / 3.0
    }
}

/// A real, even 1D Fourier profile.
#[derive(Clone)]
pub enum Profile1d {
    /// `m1(4t)·φ̂(t)`.
    FilterBandPass(Arc<ScalingFunction>),
    /// `φ̂(dilation·t)`.
    Scaling { phi: Arc<ScalingFunction>, dilation: f64 },
    /// `|t|^power`.
    Monomial { power: f64 },
    Zero,
    Custom {
        label: String,
        eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for Profile1d {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl Profile1d {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Profile1d::FilterBandPass(phi) => {
                let m1 = phi.filter().m1(4.0 * t);
                if m1 == 0.0 {
                    0.0
                } else {
                    m1 * phi.eval(t)
                }
            }
            Profile1d::Scaling { phi, dilation } => phi.eval(dilation * t),
            Profile1d::Monomial { power } => t.abs().powf(*power),
            Profile1d::Zero => 0.0,
            Profile1d::Custom { eval, .. } => eval(t),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Profile1d::FilterBandPass(phi) => {
                let d = phi.filter().design();
                format!("m1(4t)*phi(t) [K={}, Lfilt={}]", d.k, d.lfilt)
            }
            Profile1d::Scaling { phi, dilation } => {
                let d = phi.filter().design();
                format!("phi({dilation}t) [K={}, Lfilt={}]", d.k, d.lfilt)
            }
            Profile1d::Monomial { power } => format!("|t|^{power}"),
            Profile1d::Zero => "0".to_string(),
            Profile1d::Custom { label, .. } => label.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    FilterBased,
    Separable,
}

/// Separable generator `ψ̂(ξ) = axis(ξ1)·cross(ξ2)·cross(ξ3)` with the
/// low-pass generator `φ̂(ξ) = low(ξ1)·low(ξ2)·low(ξ3)`. The generators of the
/// other two pyramid pairs follow by coordinate swaps.
#[derive(Debug, Clone)]
pub struct GeneratorModel {
    pub kind: GeneratorKind,
    pub axis: Profile1d,
    pub cross: Profile1d,
    pub lowpass: Profile1d,
    pub design: Option<FilterDesign>,
    pub j_phi: u32,
    pub normalization: f64,
    /// Half-widths of a box holding the bulk of the spatial generator.
    pub support_box: [f64; 3],
}

impl GeneratorModel {
    /// The filter-based shearlet `m1(4ξ1)φ̂(ξ1)φ̂(2ξ2)φ̂(2ξ3)`.
    pub fn filter_based(design: FilterDesign, j_phi: u32) -> Result<Self> {
        let filter = LowPassFilter::new(design);
        let normalization = filter.normalization();
        let phi = Arc::new(ScalingFunction::new(filter, j_phi)?);
        // φ has support [0, 2K−1]; ψ's factors dilate it by 1/4 and 1/2
        let width = (2 * design.k - 1) as f64;
        Ok(GeneratorModel {
            kind: GeneratorKind::FilterBased,
            axis: Profile1d::FilterBandPass(phi.clone()),
            cross: Profile1d::Scaling {
                phi: phi.clone(),
                dilation: 2.0,
            },
            lowpass: Profile1d::Scaling { phi, dilation: 1.0 },
            design: Some(design),
            j_phi,
            normalization,
            support_box: [width, width / 4.0, width / 4.0],
        })
    }

    /// Zero generator.
    pub fn zero() -> Self {
        GeneratorModel {
            kind: GeneratorKind::Separable,
            axis: Profile1d::Zero,
            cross: Profile1d::Zero,
            lowpass: Profile1d::Zero,
            design: None,
            j_phi: DEFAULT_J_PHI,
            normalization: 1.0,
            support_box: [0.0; 3],
        }
    }

    pub fn scaling_function(&self) -> Option<&Arc<ScalingFunction>> {
        match &self.lowpass {
            Profile1d::Scaling { phi, .. } => Some(phi),
            _ => None,
        }
    }

    /// `ψ̂(ξ)` for the reference pair `P`.
    pub fn psi_hat(&self, xi: [f64; 3]) -> f64 {
        let a = self.axis.eval(xi[0]);
        if a == 0.0 {
            return 0.0;
        }
        a * self.cross.eval(xi[1]) * self.cross.eval(xi[2])
    }

    /// Generator of the given pair: `ψ̂`, `ψ̃̂(ξ) = ψ̂(ξ2,ξ1,ξ3)`, `ψ̆̂(ξ) = ψ̂(ξ3,ξ2,ξ1)`.
    pub fn psi_hat_pair(&self, pair: PyramidPair, xi: [f64; 3]) -> f64 {
        self.psi_hat(pair.to_reference(xi))
    }

    /// 3D low-pass generator `φ̂(ξ1)φ̂(ξ2)φ̂(ξ3)`.
    pub fn phi_hat(&self, xi: [f64; 3]) -> f64 {
        self.lowpass.eval(xi[0]) * self.lowpass.eval(xi[1]) * self.lowpass.eval(xi[2])
    }

    pub fn phi_hat_1d(&self, t: f64) -> f64 {
        self.lowpass.eval(t)
    }

    pub fn descriptor(&self, feasibility: Option<FeasibilityProfile>) -> GeneratorDescriptor {
        GeneratorDescriptor {
            kind: self.kind,
            k: self.design.map(|d| d.k),
            lfilt: self.design.map(|d| d.lfilt),
            axis_profile: self.axis.describe(),
            cross_profile: self.cross.describe(),
            lowpass_profile: self.lowpass.describe(),
            j_phi: self.j_phi,
            normalization: self.normalization,
            feasibility,
        }
    }
}

/// Serializable summary of a generator model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorDescriptor {
    pub kind: GeneratorKind,
    pub k: Option<u32>,
    pub lfilt: Option<u32>,
    pub axis_profile: String,
    pub cross_profile: String,
    pub lowpass_profile: String,
    pub j_phi: u32,
    pub normalization: f64,
    pub feasibility: Option<FeasibilityProfile>,
}

impl GeneratorDescriptor {
    /// Rebuilds a filter-based model; separable models carry closures and
    /// cannot be restored from text.
    pub fn rebuild(&self) -> Result<GeneratorModel> {
        match (self.kind, self.k, self.lfilt) {
            (GeneratorKind::FilterBased, Some(k), Some(l)) => {
                GeneratorModel::filter_based(FilterDesign::new(k, l)?, self.j_phi)
            }
            _ => Err(ShearletError::Constraint(
                "only filter-based descriptors can be rebuilt".into(),
            )),
        }
    }
}

/// Separable generator `ψ(x) = η(x1)φ(x2)φ(x3)`. The low-pass generator
/// defaults to `phi_hat` as well.
pub fn separable_generator(eta_hat: Profile1d, phi_hat: Profile1d) -> GeneratorModel {
    GeneratorModel {
        kind: GeneratorKind::Separable,
        axis: eta_hat,
        cross: phi_hat.clone(),
        lowpass: phi_hat,
        design: None,
        j_phi: DEFAULT_J_PHI,
        normalization: 1.0,
        support_box: [f64::NAN; 3],
    }
}

/// Decay profile `(δ, γ, q, q′, r, s)` of the four-factor bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityProfile {
    pub delta: f64,
    pub gamma: f64,
    pub q: f64,
    pub q_prime: f64,
    pub r: f64,
    pub s: f64,
    /// Fitted constant hidden in the `≲` of the bound.
    pub c_fit: f64,
    /// Largest normalized violation seen on the holdout grid.
    pub fit_residual: f64,
}

impl FeasibilityProfile {
    pub fn new(delta: f64, gamma: f64, q: f64, q_prime: f64, r: f64, s: f64) -> Result<Self> {
        let all_pos = [delta, gamma, q, q_prime, r, s]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        if !all_pos {
            return Err(ShearletError::Constraint(
                "feasibility parameters must be positive and finite".into(),
            ));
        }
        if q < q_prime || q < r || q < s {
            return Err(ShearletError::Constraint(format!(
                "feasibility needs q >= max(q', r, s), got q={q}, q'={q_prime}, r={r}, s={s}"
            )));
        }
        Ok(FeasibilityProfile {
            delta,
            gamma,
            q,
            q_prime,
            r,
            s,
            c_fit: 1.0,
            fit_residual: 0.0,
        })
    }

    /// Default profile for the `(15, 10)` filter generator.
    pub fn filter_default() -> Self {
        Self::new(8.5, 4.0, 16.0, 4.0, 8.0, 8.0).expect("valid constants")
    }

    pub fn with_fit(mut self, c_fit: f64, fit_residual: f64) -> Self {
        self.c_fit = c_fit;
        self.fit_residual = fit_residual;
        self
    }

    fn log_axis_factor(&self, t: f64) -> f64 {
        let l = t.abs().ln();
        (self.delta * (self.q.ln() + l)).min(0.0) + (-self.gamma * (self.q_prime.ln() + l)).min(0.0)
    }

    fn log_cross_factor(&self, scale: f64, t: f64) -> f64 {
        (-self.gamma * (scale.ln() + t.abs().ln())).min(0.0)
    }

    /// Right-hand side of the bound without the fitted constant.
    pub fn bound(&self, xi: [f64; 3]) -> f64 {
        (self.log_axis_factor(xi[0])
            + self.log_cross_factor(self.r, xi[1])
            + self.log_cross_factor(self.s, xi[2]))
            .exp()
    }
}

/// Tensor-product frequency sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub axes: [Vec<f64>; 3],
}

impl FrequencyGrid {
    pub fn isotropic(axis: Vec<f64>) -> Self {
        FrequencyGrid {
            axes: [axis.clone(), axis.clone(), axis],
        }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Calibration and holdout grids for fitting the decay-bound constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityGrid {
    pub calibration: FrequencyGrid,
    pub holdout: FrequencyGrid,
}

impl FeasibilityGrid {
    /// Two interleaved symmetric log grids with `per_axis` samples per axis
    /// each. The `per_axis` magnitudes on either side of zero are taken at
    /// cell centres of a log partition of `[lo, hi]` into `per_axis` cells
    /// (so no sample sits on a dyadic point), alternating between the two
    /// grids. The holdout grid owns the outermost cell.
    pub fn interleaved_log(per_axis: usize, lo: f64, hi: f64) -> Result<Self> {
        if per_axis < 2 || !(lo > 0.0 && hi > lo) {
            return Err(ShearletError::Constraint(format!(
                "feasibility grid needs per_axis >= 2 and 0 < lo < hi, got {per_axis}, [{lo}, {hi}]"
            )));
        }
        let cells = per_axis;
        let (llo, lhi) = (lo.ln(), hi.ln());
        let mags: Vec<f64> = (0..cells)
            .map(|i| (llo + (i as f64 + 0.5) / cells as f64 * (lhi - llo)).exp())
            .collect();
        let symmetric = |parity: usize| {
            let pos: Vec<f64> = mags
                .iter()
                .enumerate()
                .filter(|(i, _)| (cells - 1 - i) % 2 == parity)
                .map(|(_, v)| *v)
                .collect();
            let mut axis: Vec<f64> = pos.iter().rev().map(|v| -v).collect();
            axis.extend(pos);
            FrequencyGrid::isotropic(axis)
        };
        Ok(FeasibilityGrid {
            calibration: symmetric(1),
            holdout: symmetric(0),
        })
    }
}

/// Outcome of [`verify_feasibility`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub passes: bool,
    /// Fitted constant: max of `|ψ̂|/bound` over the calibration grid.
    pub c_fit: f64,
    /// Max of `|ψ̂|/(c_fit·bound)` over the holdout grid.
    pub worst_ratio: f64,
    pub worst_point: [f64; 3],
    pub calibration_points: usize,
    pub holdout_points: usize,
}

/// Relative slack allowed on the holdout grid over the fitted constant.
pub const FEASIBILITY_SLACK: f64 = 0.05;

/// Max of `ln(|ψ̂|/bound)` over a tensor grid with its location. The ratio
/// is formed per axis in log space so that steep bounds cannot overflow.
fn max_log_ratio(
    gen: &GeneratorModel,
    profile: &FeasibilityProfile,
    grid: &FrequencyGrid,
) -> (f64, [f64; 3]) {
    let log_ratio = |axis: usize, p: &Profile1d, bound: &dyn Fn(f64) -> f64| -> Vec<f64> {
        grid.axes[axis]
            .iter()
            .map(|&t| {
                let v = p.eval(t).abs();
                if v == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    v.ln() - bound(t)
                }
            })
            .collect()
    };
    let a = log_ratio(0, &gen.axis, &|t| profile.log_axis_factor(t));
    let b = log_ratio(1, &gen.cross, &|t| profile.log_cross_factor(profile.r, t));
    let c = log_ratio(2, &gen.cross, &|t| profile.log_cross_factor(profile.s, t));
    let mut best = f64::NEG_INFINITY;
    let mut at = [grid.axes[0][0], grid.axes[1][0], grid.axes[2][0]];
    for (i, &x) in grid.axes[0].iter().enumerate() {
        for (j, &y) in grid.axes[1].iter().enumerate() {
            for (l, &z) in grid.axes[2].iter().enumerate() {
                let r = a[i] + b[j] + c[l];
                if r > best {
                    best = r;
                    at = [x, y, z];
                }
            }
        }
    }
    (best, at)
}

/// Fits the constant of the decay bound on the calibration grid and checks
/// it on the disjoint holdout grid.
pub fn verify_feasibility(
    gen: &GeneratorModel,
    profile: &FeasibilityProfile,
    grid: &FeasibilityGrid,
) -> Result<FeasibilityReport> {
    if grid.calibration.is_empty() || grid.holdout.is_empty() {
        return Err(ShearletError::Constraint("feasibility grid is empty".into()));
    }
    let (cal, _) = max_log_ratio(gen, profile, &grid.calibration);
    let (hold, worst_point) = max_log_ratio(gen, profile, &grid.holdout);
    let worst_ratio = if hold == f64::NEG_INFINITY {
        0.0
    } else if cal == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        (hold - cal).exp()
    };
    let c_fit = cal.exp();
    Ok(FeasibilityReport {
        passes: worst_ratio <= 1.0 + FEASIBILITY_SLACK,
        c_fit,
        worst_ratio,
        worst_point,
        calibration_points: grid.calibration.len(),
        holdout_points: grid.holdout.len(),
    })
}

/// Least-squares slope of `log|ψ̂(t,0,0)|` against `log t` for
/// `t ∈ [2^{−12}, 2^{−6}]`.
pub fn vanishing_moment_order(gen: &GeneratorModel) -> Result<f64> {
    let samples = 49;
    let pts: Vec<(f64, f64)> = (0..samples)
        .filter_map(|i| {
            let e = -12.0 + 6.0 * i as f64 / (samples - 1) as f64;
            let t = e.exp2();
            let v = gen.psi_hat([t, 0.0, 0.0]).abs();
            (v > 0.0 && v.is_finite()).then(|| (t.ln(), v.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return Err(ShearletError::DegenerateFit(
            "generator vanishes on the probe set".into(),
        ));
    }
    Ok(crate::stats::least_squares(&pts)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filter() -> LowPassFilter {
        LowPassFilter::new(FilterDesign::new(15, 10).unwrap())
    }

    #[test]
    fn design_range() {
        assert!(FilterDesign::new(15, 10).is_ok());
        assert!(FilterDesign::new(28, 10).is_ok());
        assert!(FilterDesign::new(14, 10).is_err());
        assert!(FilterDesign::new(29, 10).is_err());
        assert!(FilterDesign::new(12, 8).is_err());
    }

    #[test]
    fn binomials_exact() {
        assert_eq!(binomial(10, 3), 120);
        assert_eq!(binomial(56, 28), 7_648_690_600_760_440);
        assert_eq!(binomial(5, 7), 0);
    }

    #[test]
    fn filter_endpoints_and_period() {
        let f = filter();
        assert_eq!(f.m0_sq(0.0), 1.0);
        assert_eq!(f.m1_sq(0.0), 0.0);
        assert_eq!(f.normalization(), 1.0);
        for x in [0.013, 0.21, 0.377, 0.49] {
            assert!((f.m0_sq(x) - f.m0_sq(x + 1.0)).abs() < 1e-12);
            assert!((f.m1_sq(x) - f.m0_sq(x + 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn scaling_refinement() {
        let phi = ScalingFunction::new(filter(), 24).unwrap();
        assert_eq!(phi.eval(0.0), 1.0);
        let t = 0.3;
        let lhs = phi.eval(2.0 * t);
        let rhs = phi.filter().m0(2.0 * t) * phi.eval(t);
        assert!((lhs - rhs).abs() < 1e-12);
        assert!(ScalingFunction::new(filter(), 12).is_err());
    }
}
