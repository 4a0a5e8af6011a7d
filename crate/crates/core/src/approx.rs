//! N-term approximation, rate fits, the τ(α) and optimal-rate formulas,
//! coefficient decay and counting experiments, and wavelet/Fourier baselines.

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShearletError};
use crate::fft3::PlanCache;
use crate::geometry::{scale_factors, shear_range, BandKey, PyramidPair};
use crate::solver::CgOutcome;
use crate::stats::{least_squares, log_log_fit};
use crate::transform::{CoefficientSet, ShearletSystem, Volume};
use crate::wavelet::Dwt3;

/// `τ(α) = 3(2−α)(α−1)(α+2) / (2(9α²+17α−10))` in exact arithmetic.
pub fn tau_exact(alpha: Ratio<i128>) -> Result<Ratio<i128>> {
    let one = Ratio::from_integer(1);
    let two = Ratio::from_integer(2);
    if alpha < one || alpha > two {
        return Err(ShearletError::Domain(format!("tau needs alpha in [1,2], got {alpha}")));
    }
    let num = Ratio::from_integer(3) * (two - alpha) * (alpha - one) * (alpha + two);
    let den = two * (Ratio::from_integer(9) * alpha * alpha + Ratio::from_integer(17) * alpha - Ratio::from_integer(10));
    Ok(num / den)
}

/// Floating-point `τ(α)`, exact through rationals when `α` is a ratio of
/// small integers.
pub fn tau(alpha: f64) -> Result<f64> {
    if !(1.0..=2.0).contains(&alpha) {
        return Err(ShearletError::Domain(format!("tau needs alpha in [1,2], got {alpha}")));
    }
    for den in 1..=10_000i128 {
        let num = (alpha * den as f64).round();
        if (num / den as f64 - alpha).abs() <= 1e-15 * alpha {
            let r = tau_exact(Ratio::new(num as i128, den))?;
            return Ok(r.to_f64().unwrap_or(f64::NAN));
        }
    }
    let num = 3.0 * (2.0 - alpha) * (alpha - 1.0) * (alpha + 2.0);
    Ok(num / (2.0 * (9.0 * alpha * alpha + 17.0 * alpha - 10.0)))
}

/// Best achievable exponent `min{α/(d−1), 2β/d}` for `‖f − f_N‖² ≍ N^{−r}`.
pub fn optimal_rate(alpha: f64, beta: f64, d: u32) -> Result<f64> {
    if !(alpha > 1.0 && alpha <= 2.0) || !(beta > 0.0) || d < 2 {
        return Err(ShearletError::Domain(format!(
            "optimal rate needs alpha in (1,2], beta > 0, d >= 2; got {alpha}, {beta}, {d}"
        )));
    }
    Ok((alpha / (d - 1) as f64).min(2.0 * beta / d as f64))
}

/// Exponent of `|Λ(ε)| ≲ ε^{−e}` from the counting estimate, returned as `−e`.
pub fn counting_exponent(alpha: f64) -> f64 {
    -(9.0 * alpha * alpha + 17.0 * alpha - 10.0) / ((alpha + 1.0) * (alpha + 2.0) * (3.0 * alpha - 1.0))
}

/// Magnitudes in nonincreasing order.
pub fn rearranged_coefficients(c: &[f64]) -> Vec<f64> {
    let mut m: Vec<f64> = c.iter().map(|v| v.abs()).collect();
    m.sort_unstable_by(|a, b| b.total_cmp(a));
    m
}

/// `sup_n n^{1/p} c*_n` and the maximizing (1-based) `n`.
pub fn weak_lp_norm(cstar: &[f64], p: f64) -> Result<(f64, usize)> {
    if !(p > 0.0) {
        return Err(ShearletError::Domain(format!("p must be positive, got {p}")));
    }
    let mut best = (0.0, 0);
    for (i, &c) in cstar.iter().enumerate() {
        let v = ((i + 1) as f64).powf(1.0 / p) * c.abs();
        if v > best.0 {
            best = (v, i + 1);
        }
    }
    Ok(best)
}

/// Coefficient indices ordered by decreasing magnitude, ties by index.
pub fn greedy_order(c: &[f64], limit: usize) -> Vec<usize> {
    let cmp = |a: &usize, b: &usize| c[*b].abs().total_cmp(&c[*a].abs()).then(a.cmp(b));
    let mut idx: Vec<usize> = (0..c.len()).collect();
    let limit = limit.min(c.len());
    if limit == 0 {
        return Vec::new();
    }
    if limit < idx.len() {
        idx.select_nth_unstable_by(limit - 1, cmp);
        idx.truncate(limit);
    }
    idx.sort_unstable_by(cmp);
    idx
}

/// Keeps the entries of `c` listed in `keep`.
pub fn restrict(c: &CoefficientSet, keep: &[usize]) -> CoefficientSet {
    let mut out = vec![0.0; c.len()];
    for &i in keep {
        out[i] = c.data[i];
    }
    CoefficientSet { data: out }
}

/// Dual-frame reconstruction from the `N` largest coefficients.
pub fn greedy_nterm(
    system: &ShearletSystem,
    c: &CoefficientSet,
    n_terms: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<usize>, Volume, CgOutcome)> {
    if n_terms > c.len() {
        return Err(ShearletError::Constraint(format!(
            "N={n_terms} exceeds the {} coefficients",
            c.len()
        )));
    }
    let keep = greedy_order(&c.data, n_terms);
    let (v, out) = system.dual_reconstruct(&restrict(c, &keep), tol, max_iter)?;
    Ok((keep, v, out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub method: String,
    pub phantom_id: String,
    /// `(N, ‖f − f_N‖²)` with `N` strictly increasing.
    pub points: Vec<(usize, f64)>,
    /// Positions where the error grew by more than 1%.
    pub monotonicity_flags: Vec<usize>,
}

impl ErrorCurve {
    pub fn new(method: impl Into<String>, phantom_id: impl Into<String>, points: Vec<(usize, f64)>) -> Result<Self> {
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(ShearletError::Constraint("N values must be strictly increasing".into()));
        }
        let monotonicity_flags = points
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1].1 > w[0].1 * 1.01)
            .map(|(i, _)| i + 1)
            .collect();
        Ok(ErrorCurve {
            method: method.into(),
            phantom_id: phantom_id.into(),
            points,
            monotonicity_flags,
        })
    }

    pub fn err2_at(&self, n: usize) -> Option<f64> {
        self.points.iter().find(|p| p.0 == n).map(|p| p.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub window: (usize, usize),
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares line through `(log N, log err²)` for `N` in the window.
pub fn fit_rate(curve: &ErrorCurve, window: (usize, usize)) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.0 >= window.0 && p.0 <= window.1 && p.1 > 0.0)
        .map(|p| (p.0 as f64, p.1))
        .collect();
    if pts.len() < 5 {
        return Err(ShearletError::InsufficientPoints { need: 5, got: pts.len() });
    }
    let (slope, intercept, r_squared) = log_log_fit(&pts)?;
    Ok(RateFit {
        slope,
        intercept,
        window,
        r_squared,
        points: pts.len(),
    })
}

/// `count` values from `lo` to `hi`, evenly spaced in logarithm, rounded
/// and deduplicated.
pub fn log_spaced(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..count)
        .map(|i| {
            let t = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
            ((lo as f64).ln() * (1.0 - t) + (hi as f64).ln() * t).exp().round() as usize
        })
        .collect();
    out.dedup();
    out
}

/// Outcome of a shearlet N-term experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShearletCurve {
    pub curve: ErrorCurve,
    /// `Σ_{n>N} |c*_n|² / A` per point, the bound on the error.
    pub tail_bounds: Vec<f64>,
    pub lower_bound_used: f64,
    pub cg_iterations: Vec<usize>,
}

impl ShearletCurve {
    /// Points where the error exceeds its tail bound.
    pub fn tail_violations(&self) -> Vec<usize> {
        self.curve
            .points
            .iter()
            .zip(&self.tail_bounds)
            .filter(|(p, b)| p.1 > **b * (1.0 + 1e-9))
            .map(|(p, _)| p.0)
            .collect()
    }
}

/// Greedy shearlet approximation errors for each `N`. `lower` is a frame
/// lower bound used for the tail inequality.
pub fn error_curve(
    f: &Volume,
    system: &ShearletSystem,
    ns: &[usize],
    phantom_id: &str,
    lower: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ShearletCurve> {
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ShearletError::Constraint("N values must be strictly increasing".into()));
    }
    let c = system.analyze(f)?;
    let n_max = ns.last().copied().unwrap_or(0);
    if n_max > c.len() {
        return Err(ShearletError::Constraint(format!("N={n_max} exceeds the {} coefficients", c.len())));
    }
    let order = greedy_order(&c.data, n_max);
    let total = c.norm_sq();
    let mut points = Vec::new();
    let mut tails = Vec::new();
    let mut its = Vec::new();
    for &n in ns {
        let (fnv, out) = system.dual_reconstruct(&restrict(&c, &order[..n]), tol, max_iter)?;
        let head: f64 = order[..n].iter().map(|&i| c.data[i] * c.data[i]).sum();
        points.push((n, f.sub(&fnv).norm_sq()));
        tails.push((total - head).max(0.0) / lower);
        its.push(out.iterations);
    }
    Ok(ShearletCurve {
        curve: ErrorCurve::new("shearlet", phantom_id, points)?,
        tail_bounds: tails,
        lower_bound_used: lower,
        cg_iterations: its,
    })
}

/// Errors from the dropped energies of an orthonormal expansion; `energies`
/// are squared coefficients already in grid-norm units.
fn orthonormal_curve(method: &str, phantom_id: &str, mut energies: Vec<f64>, ns: &[usize]) -> Result<ErrorCurve> {
    energies.sort_unstable_by(|a, b| b.total_cmp(a));
    // suffix sums so that each error is a sum of small terms
    let mut tail = vec![0.0; energies.len() + 1];
    for i in (0..energies.len()).rev() {
        tail[i] = tail[i + 1] + energies[i];
    }
    let points = ns.iter().map(|&n| (n, tail[n.min(energies.len())])).collect();
    ErrorCurve::new(method, phantom_id, points)
}

/// Daubechies order of the wavelet baseline.
pub const WAVELET_ORDER: u32 = 10;

/// Greedy N-term errors in the periodized orthonormal Daubechies basis.
pub fn wavelet_baseline(f: &Volume, ns: &[usize], phantom_id: &str) -> Result<ErrorCurve> {
    let n = f.n();
    let dwt = Dwt3::new(WAVELET_ORDER, n, 4)?;
    let mut data = f.data().to_vec();
    dwt.forward(&mut data, n);
    let cell = (n * n * n) as f64;
    orthonormal_curve("wavelet", phantom_id, data.iter().map(|v| v * v / cell).collect(), ns)
}

/// Greedy N-term errors keeping the largest discrete Fourier coefficients.
pub fn fourier_baseline(f: &Volume, ns: &[usize], phantom_id: &str) -> Result<ErrorCurve> {
    let n = f.n();
    let plans = PlanCache::new();
    let mut spec: Vec<Complex64> = f.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plans.get([n; 3]).forward(&mut spec);
    let scale = (n as f64).powi(6);
    orthonormal_curve("fourier", phantom_id, spec.iter().map(|z| z.norm_sqr() / scale).collect(), ns)
}

/// One row of the shear decay table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub k: (i64, i64),
    /// `max_i |k_i + 2^{j(α−1)/2} s_i|`.
    pub offset: f64,
    pub max_coef: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayResult {
    pub j: u32,
    pub slope: (f64, f64),
    pub rows: Vec<DecayRow>,
    /// `(offset, largest max_coef among shears with that offset)`.
    pub envelope: Vec<(f64, f64)>,
    pub fit: RateFit,
}

/// Largest coefficient modulus of a band in the continuum normalization
/// `‖ψ_λ‖ = ‖ψ‖` of the lattice `M_c`.
pub fn band_peak(system: &ShearletSystem, coeffs: &[f64], band: usize) -> f64 {
    let peak = coeffs
        .chunks_exact(2)
        .map(|p| p[0].hypot(p[1]))
        .fold(0.0f64, f64::max);
    peak * system.atom_normalization(band)
}

/// Shear decay of the coefficients of the hyperplane phantom with normal
/// `(−1, s1, s2)` on pair `P` at scale `j`.
pub fn shear_decay_experiment(system: &ShearletSystem, f: &Volume, s: (f64, f64), j: u32) -> Result<DecayResult> {
    let cfg = system.config();
    if s.0.abs() > 3.0 || s.1.abs() > 3.0 {
        return Err(ShearletError::Constraint(format!("slopes {s:?} exceed 3")));
    }
    if j < cfg.j_min || j > cfg.j_max {
        return Err(ShearletError::Constraint(format!("scale {j} outside the system")));
    }
    let (lead, cross) = scale_factors(j as f64, cfg.alpha);
    let ratio = lead / cross;
    let bands: Vec<usize> = system
        .bands()
        .iter()
        .enumerate()
        .filter(|(_, b)| b.key.pair == PyramidPair::P && b.key.j == j)
        .map(|(i, _)| i)
        .collect();
    let coeffs = system.analyze_bands(f, &bands)?;
    let rows: Vec<DecayRow> = bands
        .iter()
        .zip(&coeffs)
        .map(|(&b, c)| {
            let k = system.bands()[b].key.k;
            let offset = (k.0 as f64 + ratio * s.0).abs().max((k.1 as f64 + ratio * s.1).abs());
            DecayRow {
                k,
                offset,
                max_coef: band_peak(system, c, b),
            }
        })
        .collect();
    let kmax = shear_range(j, cfg.alpha) as f64;
    let mut envelope: Vec<(f64, f64)> = Vec::new();
    for r in &rows {
        let key = (r.offset * 1e9).round() / 1e9;
        match envelope.iter_mut().find(|e| e.0 == key) {
            Some(e) => e.1 = e.1.max(r.max_coef),
            None => envelope.push((key, r.max_coef)),
        }
    }
    envelope.sort_by(|a, b| a.0.total_cmp(&b.0));
    let window: Vec<(f64, f64)> = envelope
        .iter()
        .copied()
        .filter(|e| e.0 >= 2.0 - 1e-9 && e.0 <= kmax + 1e-9 && e.1 > 0.0)
        .collect();
    if window.len() < 3 {
        return Err(ShearletError::InsufficientPoints { need: 3, got: window.len() });
    }
    let (slope, intercept, r_squared) = log_log_fit(&window)?;
    Ok(DecayResult {
        j,
        slope: s,
        rows,
        envelope,
        fit: RateFit {
            slope,
            intercept,
            window: (2, kmax as usize),
            r_squared,
            points: window.len(),
        },
    })
}

/// Peak coefficient at the aligned shear per scale and the fitted exponent
/// of `max|coef| ∝ 2^{j·e}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleDecay {
    pub rows: Vec<(u32, (i64, i64), f64)>,
    pub exponent: f64,
    pub r_squared: f64,
}

pub fn scale_decay_experiment(system: &ShearletSystem, f: &Volume, s: (f64, f64), scales: &[u32]) -> Result<ScaleDecay> {
    let cfg = system.config();
    let mut rows = Vec::new();
    for &j in scales {
        let (lead, cross) = scale_factors(j as f64, cfg.alpha);
        let ratio = lead / cross;
        let k = ((-ratio * s.0).round() as i64, (-ratio * s.1).round() as i64);
        let band = system
            .band_index(BandKey {
                pair: PyramidPair::P,
                j,
                k,
            })
            .ok_or_else(|| ShearletError::Constraint(format!("no band at j={j}, k={k:?}")))?;
        let c = system.analyze_bands(f, &[band])?;
        rows.push((j, k, band_peak(system, &c[0], band)));
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.0 as f64, r.2.log2())).collect();
    let (exponent, _, r_squared) = least_squares(&pts)?;
    Ok(ScaleDecay {
        rows,
        exponent,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub counts: Vec<(f64, usize)>,
    pub exponent: f64,
    pub r_squared: f64,
    pub target: f64,
}

/// `|Λ(ε)| = #{λ : |c_λ| > ε}` for each `ε` and the log-log growth exponent
/// over the entries with nonzero counts.
pub fn significant_count(magnitudes: &[f64], eps: &[f64], alpha: f64) -> Result<CountResult> {
    if eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ShearletError::Constraint("eps values must be positive and descending".into()));
    }
    let sorted = {
        let mut m: Vec<f64> = magnitudes.iter().map(|v| v.abs()).collect();
        m.sort_unstable_by(|a, b| a.total_cmp(b));
        m
    };
    let counts: Vec<(f64, usize)> = eps
        .iter()
        .map(|&e| (e, sorted.len() - sorted.partition_point(|v| *v <= e)))
        .collect();
    let pts: Vec<(f64, f64)> = counts.iter().filter(|c| c.1 > 0).map(|c| (c.0, c.1 as f64)).collect();
    let (exponent, r_squared) = if pts.len() >= 2 {
        let (s, _, r2) = log_log_fit(&pts)?;
        (s, r2)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(CountResult {
        counts,
        exponent,
        r_squared,
        target: counting_exponent(alpha),
    })
}

/// Complex coefficient moduli of all shearlet bands in the continuum
/// normalization, low-pass excluded.
pub fn shearlet_moduli(system: &ShearletSystem, c: &CoefficientSet) -> Vec<f64> {
    let mut out = Vec::new();
    for (i, b) in system.bands().iter().enumerate() {
        let s = system.atom_normalization(i);
        out.extend(c.band(b).chunks_exact(2).map(|p| s * p[0].hypot(p[1])));
    }
    out
}

/// `τ(α)` is zero exactly at both endpoints of `[1,2]` and positive inside.
pub fn tau_sign_scan(steps: i128) -> Result<(usize, f64)> {
    let mut zeros = 0;
    let mut max = 0.0f64;
    for i in 0..=steps {
        let a = Ratio::new(steps + i, steps);
        let t = tau_exact(a)?;
        if t.is_zero() {
            zeros += 1;
        }
        max = max.max(t.to_f64().unwrap_or(f64::NAN));
    }
    Ok((zeros, max))
}
