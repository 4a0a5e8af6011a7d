//! Cartoon-like volumes, starshaped boundary fields, hypercube fixtures and
//! hyperplane phantoms.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShearletError};
use crate::transform::Volume;

/// Features stay inside `[MARGIN_LO, MARGIN_HI]³`.
pub const MARGIN_LO: f64 = 0.15;
pub const MARGIN_HI: f64 = 0.85;

/// Cap on the boundary radius.
pub const RHO0: f64 = 0.35;

/// Base radius of generated fields.
pub const BASE_RADIUS: f64 = 0.25;

/// Angular grid used to validate Hölder budgets, and its refinement.
pub const HOLDER_GRID: (usize, usize) = (256, 128);
pub const HOLDER_GRID_FINE: (usize, usize) = (512, 256);

/// `exp(1 − 1/(1 − (2t−1)²))` on `(0,1)`, zero elsewhere; peak 1 at `t=1/2`.
pub fn bump(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let u = 2.0 * t - 1.0;
    (1.0 - 1.0 / (1.0 - u * u)).exp()
}

/// `C^∞` step from 0 at `t ≤ 0` to 1 at `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    let h = |x: f64| if x <= 0.0 { 0.0 } else { (-1.0 / x).exp() };
    let a = h(t);
    let b = h(1.0 - t);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Separable window: 1 on `[0.15,0.85]³`, 0 outside `[0.05,0.95]³`.
pub fn margin_window(x: [f64; 3]) -> f64 {
    x.iter()
        .map(|&t| smooth_step((t - 0.05) / 0.1) * smooth_step((0.95 - t) / 0.1))
        .product()
}

/// Spherical angles `(θ1, θ2) ∈ [0,2π)×[0,π]` of a direction.
pub fn angles(v: [f64; 3]) -> (f64, f64) {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let t1 = v[1].atan2(v[0]).rem_euclid(2.0 * PI);
    let t2 = if r == 0.0 { 0.0 } else { (v[2] / r).clamp(-1.0, 1.0).acos() };
    (t1, t2)
}

fn unit(t1: f64, t2: f64) -> [f64; 3] {
    [t2.sin() * t1.cos(), t2.sin() * t1.sin(), t2.cos()]
}

/// Samples on the uniform angular grid `θ1 = 2πi/n1`, `θ2 = π(j+1/2)/n2`,
/// with optional patch labels.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularSamples {
    pub n1: usize,
    pub n2: usize,
    pub values: Vec<f64>,
    pub patch: Option<Vec<usize>>,
}

impl AngularSamples {
    pub fn theta(n1: usize, n2: usize, i1: usize, i2: usize) -> (f64, f64) {
        (2.0 * PI * i1 as f64 / n1 as f64, PI * (i2 as f64 + 0.5) / n2 as f64)
    }

    pub fn from_fn(n1: usize, n2: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(n1 * n2);
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                let (t1, t2) = Self::theta(n1, n2, i1, i2);
                values.push(f(t1, t2));
            }
        }
        AngularSamples {
            n1,
            n2,
            values,
            patch: None,
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        AngularSamples {
            values: self.values.iter().map(|v| a * v).collect(),
            ..self.clone()
        }
    }
}

/// Estimates the Hölder seminorm of the angular gradient with exponent
/// `α − 1`: the largest quotient `|∂_i ρ(θ) − ∂_i ρ(θ′)|/‖θ − θ′‖` over
/// dyadic offsets up to a quarter of each angular range. Gradients use
/// centered differences. With patch labels, stencils and pairs must stay
/// inside one patch.
pub fn holder_seminorm_estimate(samples: &AngularSamples, alpha: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(ShearletError::Domain(format!("alpha must lie in (1,2], got {alpha}")));
    }
    let (n1, n2) = (samples.n1, samples.n2);
    if n1 < 64 || n2 < 32 {
        return Err(ShearletError::Resolution(format!(
            "angular grid {n1}x{n2} is coarser than 64x32"
        )));
    }
    if samples.values.len() != n1 * n2 {
        return Err(ShearletError::Shape {
            expected: format!("{} samples", n1 * n2),
            got: samples.values.len().to_string(),
        });
    }
    let h1 = 2.0 * PI / n1 as f64;
    let h2 = PI / n2 as f64;
    let idx = |i1: usize, i2: usize| i1 + n1 * i2;
    let label = |i: usize| samples.patch.as_ref().map(|p| p[i]);
    let v = &samples.values;
    let mut grad: Vec<Option<[f64; 2]>> = vec![None; n1 * n2];
    for i2 in 1..n2 - 1 {
        for i1 in 0..n1 {
            let c = idx(i1, i2);
            let l = idx((i1 + n1 - 1) % n1, i2);
            let r = idx((i1 + 1) % n1, i2);
            let d = idx(i1, i2 - 1);
            let u = idx(i1, i2 + 1);
            let own = label(c);
            if [l, r, d, u].iter().any(|&k| label(k) != own) {
                continue;
            }
            grad[c] = Some([(v[r] - v[l]) / (2.0 * h1), (v[u] - v[d]) / (2.0 * h2)]);
        }
    }
    let expo = alpha - 1.0;
    let mut offsets = Vec::new();
    let mut d = 1;
    while d <= n1 / 4 {
        offsets.push((d as i64, 0i64));
        if d <= n2 / 4 {
            offsets.push((0, d as i64));
            offsets.push((d as i64, d as i64));
            offsets.push((d as i64, -(d as i64)));
        }
        d *= 2;
    }
    let mut best = 0.0f64;
    for i2 in 0..n2 {
        for i1 in 0..n1 {
            let c = idx(i1, i2);
            let Some(g) = grad[c] else { continue };
            for &(o1, o2) in &offsets {
                let j2 = i2 as i64 + o2;
                if j2 < 0 || j2 >= n2 as i64 {
                    continue;
                }
                let k = idx((i1 as i64 + o1).rem_euclid(n1 as i64) as usize, j2 as usize);
                if label(k) != label(c) {
                    continue;
                }
                let Some(g2) = grad[k] else { continue };
                let dist = ((o1 as f64 * h1).powi(2) + (o2 as f64 * h2).powi(2)).sqrt();
                let diff = (g[0] - g2[0]).abs().max((g[1] - g2[1]).abs());
                best = best.max(diff / dist.powf(expo));
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusKind {
    Constant,
    SmoothStar,
    PiecewiseStar,
}

/// `amp·cos(2π k·u + phase)` on unit directions `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Wave {
    k: [f64; 3],
    amp: f64,
    phase: f64,
}

fn waves_eval(waves: &[Wave], u: [f64; 3]) -> f64 {
    waves
        .iter()
        .map(|w| w.amp * (2.0 * PI * (w.k[0] * u[0] + w.k[1] * u[1] + w.k[2] * u[2]) + w.phase).cos())
        .sum()
}

fn random_waves(rng: &mut ChaCha8Rng, count: usize) -> Vec<Wave> {
    (0..count)
        .map(|_| {
            let k = [0, 1, 2].map(|_| rng.gen_range(-1i32..=1) as f64 * 0.5 + rng.gen_range(-0.25..0.25));
            let norm2 = k.iter().map(|v| v * v).sum::<f64>();
            Wave {
                k,
                amp: rng.gen_range(0.5..1.0) / (1.0 + norm2),
                phase: rng.gen_range(0.0..2.0 * PI),
            }
        })
        .collect()
}

/// Boundary radius `ρ(θ1, θ2)` of a starshaped set about its center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusField {
    pub kind: RadiusKind,
    pub alpha: f64,
    pub nu: f64,
    pub patches: usize,
    pub rho0: f64,
    pub seed: u64,
    base: f64,
    global: Vec<Wave>,
    sectors: Vec<Vec<Wave>>,
    kink: f64,
    scale: f64,
}

impl RadiusField {
    /// Random band-limited perturbation of the base radius, rescaled so that
    /// the Hölder estimate stays below `ν` and `ρ` inside `[0.1, ρ0]`.
    /// The piecewise kind adds longitude sectors with independent fields
    /// joined along meridians with a kink.
    pub fn new(kind: RadiusKind, alpha: f64, nu: f64, patches: usize, seed: u64) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(ShearletError::Domain(format!("alpha must lie in (1,2], got {alpha}")));
        }
        if !nu.is_finite() || nu < 0.0 {
            return Err(ShearletError::Constraint(format!("nu must be positive, got {nu}")));
        }
        if patches == 0 {
            return Err(ShearletError::Constraint("at least one patch is required".into()));
        }
        let mut field = RadiusField {
            kind,
            alpha,
            nu,
            patches,
            rho0: RHO0,
            seed,
            base: BASE_RADIUS,
            global: Vec::new(),
            sectors: Vec::new(),
            kink: 0.0,
            scale: 0.0,
        };
        if kind == RadiusKind::Constant {
            return Ok(field);
        }
        if nu == 0.0 {
            return Err(ShearletError::Constraint(
                "cannot rescale a nonconstant field to a zero Hölder budget".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        field.global = random_waves(&mut rng, 6);
        if kind == RadiusKind::PiecewiseStar {
            field.kink = 0.5;
            field.sectors = (0..patches).map(|_| random_waves(&mut rng, 4)).collect();
        } else {
            field.patches = 1;
        }
        field.scale = 1.0;
        let (n1, n2) = HOLDER_GRID;
        let pert = field.perturbation_samples(n1, n2);
        let est = holder_seminorm_estimate(&pert, alpha)?;
        let up = pert.values.iter().copied().fold(0.0f64, f64::max);
        let down = pert.values.iter().copied().fold(0.0f64, |a, v| a.max(-v));
        let mut scale = 0.9 * nu / est.max(f64::MIN_POSITIVE);
        if up > 0.0 {
            scale = scale.min(0.95 * (RHO0 - BASE_RADIUS) / up);
        }
        if down > 0.0 {
            scale = scale.min(0.95 * (BASE_RADIUS - 0.1) / down);
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(ShearletError::Constraint("radius field rescaling failed".into()));
        }
        field.scale = scale;
        let (f1, f2) = HOLDER_GRID_FINE;
        let coarse = est * scale;
        let fine = holder_seminorm_estimate(&field.perturbation_samples(f1, f2), alpha)?;
        if (fine - coarse).abs() > 0.1 * coarse.max(fine) {
            return Err(ShearletError::Resolution(format!(
                "Hölder estimates disagree across grids: {coarse} vs {fine}"
            )));
        }
        Ok(field)
    }

    /// Overrides the automatic rescaling with a fixed perturbation amplitude;
    /// the budgets are then checked by [`RadiusField::validate`] only.
    pub fn set_amplitude(&mut self, amplitude: f64) {
        if self.kind != RadiusKind::Constant {
            self.scale = amplitude;
        }
    }

    pub fn amplitude(&self) -> f64 {
        self.scale
    }

    pub fn constant(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius <= RHO0) {
            return Err(ShearletError::Constraint(format!("radius must lie in (0, {RHO0}], got {radius}")));
        }
        let mut f = Self::new(RadiusKind::Constant, 2.0, 0.0, 1, 0)?;
        f.base = radius;
        Ok(f)
    }

    /// Patch index of a longitude.
    pub fn patch_of(&self, t1: f64) -> usize {
        if self.kind != RadiusKind::PiecewiseStar {
            return 0;
        }
        let l = (t1.rem_euclid(2.0 * PI) * self.patches as f64 / (2.0 * PI)).floor() as usize;
        l.min(self.patches - 1)
    }

    fn perturbation(&self, t1: f64, t2: f64) -> f64 {
        let u = unit(t1, t2);
        let mut p = waves_eval(&self.global, u);
        if self.kind == RadiusKind::PiecewiseStar {
            let half = (self.patches as f64 * t1 / 2.0).sin();
            let sector = &self.sectors[self.patch_of(t1)];
            let s2 = t2.sin().powi(2);
            p += s2 * (self.kink * half.abs() + half * half * waves_eval(sector, u));
        }
        p
    }

    pub fn rho(&self, t1: f64, t2: f64) -> f64 {
        if self.kind == RadiusKind::Constant {
            return self.base;
        }
        self.base + self.scale * self.perturbation(t1, t2)
    }

    fn perturbation_samples(&self, n1: usize, n2: usize) -> AngularSamples {
        let mut s = AngularSamples::from_fn(n1, n2, |a, b| self.scale * self.perturbation(a, b));
        s.patch = Some(self.patch_labels(n1, n2));
        s
    }

    fn patch_labels(&self, n1: usize, n2: usize) -> Vec<usize> {
        (0..n1 * n2)
            .map(|i| self.patch_of(AngularSamples::theta(n1, n2, i % n1, i / n1).0))
            .collect()
    }

    /// Samples `ρ` with patch labels.
    pub fn samples(&self, n1: usize, n2: usize) -> AngularSamples {
        let mut s = AngularSamples::from_fn(n1, n2, |a, b| self.rho(a, b));
        s.patch = Some(self.patch_labels(n1, n2));
        s
    }

    /// Largest per-patch Hölder estimate.
    pub fn patch_seminorm(&self, n1: usize, n2: usize) -> Result<f64> {
        holder_seminorm_estimate(&self.samples(n1, n2), self.alpha)
    }

    /// Hölder estimate ignoring patch boundaries.
    pub fn global_seminorm(&self, n1: usize, n2: usize) -> Result<f64> {
        let mut s = self.samples(n1, n2);
        s.patch = None;
        holder_seminorm_estimate(&s, self.alpha)
    }

    /// Sampled extremes of `ρ`.
    pub fn extremes(&self) -> (f64, f64) {
        let (n1, n2) = HOLDER_GRID;
        let s = AngularSamples::from_fn(n1, n2, |a, b| self.rho(a, b));
        let lo = s.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = s.values.iter().copied().fold(0.0f64, f64::max);
        (lo, hi)
    }

    /// Checks `0 < ρ ≤ ρ0 < 1` and the per-patch Hölder budget.
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.extremes();
        if !(lo > 0.0 && hi <= self.rho0 && self.rho0 < 1.0) {
            return Err(ShearletError::Constraint(format!(
                "radius range [{lo}, {hi}] violates 0 < rho <= {}",
                self.rho0
            )));
        }
        if self.kind != RadiusKind::Constant {
            let (n1, n2) = HOLDER_GRID;
            let est = self.patch_seminorm(n1, n2)?;
            if est > self.nu * (1.0 + 1e-9) {
                return Err(ShearletError::Constraint(format!(
                    "Hölder estimate {est} exceeds budget {}",
                    self.nu
                )));
            }
        }
        Ok(())
    }
}

/// Smooth part: constant plus a truncated trigonometric polynomial
/// `Σ (a cos 2πk·x + b sin 2πk·x)`, windowed to the margin box when
/// nonconstant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothPart {
    pub constant: f64,
    pub terms: Vec<TrigTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k: [i32; 3],
    pub a: f64,
    pub b: f64,
}

impl SmoothPart {
    pub fn constant(v: f64) -> Self {
        SmoothPart {
            constant: v,
            terms: Vec::new(),
        }
    }

    /// Random polynomial of degree `≤ degree` per axis scaled so that its
    /// `C^β` estimate equals `0.9·μ`.
    pub fn random(seed: u64, degree: i32, beta: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0) || degree < 1 {
            return Err(ShearletError::Constraint("smooth part needs mu > 0 and degree >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::new();
        for k0 in 0..=degree {
            for k1 in -degree..=degree {
                for k2 in -degree..=degree {
                    let k = [k0, k1, k2];
                    if k == [0, 0, 0] {
                        continue;
                    }
                    let kk = (k0 * k0 + k1 * k1 + k2 * k2) as f64;
                    let decay = 1.0 / (1.0 + kk).powi(2);
                    terms.push(TrigTerm {
                        k,
                        a: rng.gen_range(-1.0..1.0) * decay,
                        b: rng.gen_range(-1.0..1.0) * decay,
                    });
                }
            }
        }
        let mut part = SmoothPart { constant: 0.0, terms };
        let s = 0.9 * mu / part.c_beta_estimate(beta);
        part.terms.iter_mut().for_each(|t| {
            t.a *= s;
            t.b *= s;
        });
        Ok(part)
    }

    /// Bound on `‖f‖_∞ + ‖∇f‖_∞ + |∇f|_{C^{β−1}}` from the coefficients.
    pub fn c_beta_estimate(&self, beta: f64) -> f64 {
        self.constant.abs()
            + self
                .terms
                .iter()
                .map(|t| {
                    let w = 2.0 * PI * ((t.k[0] * t.k[0] + t.k[1] * t.k[1] + t.k[2] * t.k[2]) as f64).sqrt();
                    t.a.hypot(t.b) * (1.0 + w + 2.0 * w.powf(beta))
                })
                .sum::<f64>()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        if self.terms.is_empty() {
            return self.constant;
        }
        let poly: f64 = self
            .terms
            .iter()
            .map(|t| {
                let ph = 2.0 * PI * (t.k[0] as f64 * x[0] + t.k[1] as f64 * x[1] + t.k[2] as f64 * x[2]);
                t.a * ph.cos() + t.b * ph.sin()
            })
            .sum();
        (self.constant + poly) * margin_window(x)
    }
}

/// `f = f0 + f1·χ_B` with a starshaped `B` about `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartoonSpec {
    pub alpha: f64,
    pub beta: f64,
    pub nu: f64,
    pub mu: f64,
    pub radius: RadiusField,
    pub f0: SmoothPart,
    pub f1: SmoothPart,
    pub center: [f64; 3],
}

impl CartoonSpec {
    /// Binary cartoon `χ_B`.
    pub fn binary(radius: RadiusField, center: [f64; 3]) -> Self {
        CartoonSpec {
            alpha: radius.alpha,
            beta: 2.0,
            nu: radius.nu,
            mu: 1.0,
            radius,
            f0: SmoothPart::constant(0.0),
            f1: SmoothPart::constant(1.0),
            center,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 1.0 && v <= 2.0) {
                return Err(ShearletError::Domain(format!("{name} must lie in (1,2], got {v}")));
            }
        }
        if self.beta < self.alpha {
            return Err(ShearletError::Constraint(format!(
                "beta={} must be at least alpha={}",
                self.beta, self.alpha
            )));
        }
        if !(self.mu > 0.0 && self.nu >= 0.0) {
            return Err(ShearletError::Constraint("budgets mu > 0 and nu >= 0 required".into()));
        }
        if (self.radius.alpha - self.alpha).abs() > 1e-12 || self.radius.nu > self.nu {
            return Err(ShearletError::Constraint("radius field does not match the cartoon's alpha and nu".into()));
        }
        self.radius.validate()?;
        for (name, p) in [("f0", &self.f0), ("f1", &self.f1)] {
            let est = p.c_beta_estimate(self.beta);
            if est > self.mu * (1.0 + 1e-12) {
                return Err(ShearletError::Constraint(format!(
                    "{name} C^beta estimate {est} exceeds mu={}",
                    self.mu
                )));
            }
        }
        let (_, hi) = self.radius.extremes();
        check_margin(self.center, hi)
    }

    pub fn contains(&self, x: [f64; 3]) -> bool {
        let v = [x[0] - self.center[0], x[1] - self.center[1], x[2] - self.center[2]];
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if r == 0.0 {
            return true;
        }
        let (t1, t2) = angles(v);
        r <= self.radius.rho(t1, t2)
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        let mut v = self.f0.eval(x);
        if self.contains(x) {
            v += self.f1.eval(x);
        }
        v
    }
}

fn check_margin(center: [f64; 3], radius: f64) -> Result<()> {
    let eps = 1e-12;
    if center
        .iter()
        .any(|&c| c - radius < MARGIN_LO - eps || c + radius > MARGIN_HI + eps)
    {
        return Err(ShearletError::Domain(format!(
            "feature of radius {radius} about {center:?} leaves [{MARGIN_LO}, {MARGIN_HI}]^3"
        )));
    }
    Ok(())
}

/// Point-sampled rasterization at voxel centres.
pub fn rasterize_cartoon(spec: &CartoonSpec, n: usize) -> Result<Volume> {
    spec.validate()?;
    Volume::from_fn(n, |x| spec.eval(x))
}

/// Indicator of the ball `B(center, radius)`.
pub fn ball_phantom(center: [f64; 3], radius: f64, n: usize) -> Result<Volume> {
    if !(radius >= 0.0) {
        return Err(ShearletError::Domain(format!("radius must be nonnegative, got {radius}")));
    }
    check_margin(center, radius)?;
    let r2 = radius * radius;
    Volume::from_fn(n, |x| {
        let d: f64 = (0..3).map(|i| (x[i] - center[i]).powi(2)).sum();
        if radius > 0.0 && d <= r2 {
            1.0
        } else {
            0.0
        }
    })
}

/// Volume on a sparse voxel support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAtom {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseAtom {
    pub fn norm(&self, n: usize) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / (n * n * n) as f64).sqrt()
    }

    /// Grid inner product by merging sorted supports.
    pub fn inner(&self, other: &SparseAtom, n: usize) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc / (n * n * n) as f64
    }

    pub fn to_volume(&self, n: usize) -> Result<Volume> {
        let mut v = Volume::zeros(n)?;
        for (&i, &x) in self.indices.iter().zip(&self.values) {
            v.data_mut()[i] = x;
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypercubeMode {
    BinarySurface,
    HolderBump,
}

/// Disjointly supported perturbation atoms around a base function.
#[derive(Debug, Clone, PartialEq)]
pub struct HypercubeFixture {
    pub m: usize,
    pub mode: HypercubeMode,
    pub n: usize,
    pub atoms: Vec<SparseAtom>,
    pub f0: Volume,
    /// Mean atom norm.
    pub delta: f64,
    pub norms: Vec<f64>,
}

impl HypercubeFixture {
    pub fn spread(&self) -> f64 {
        let hi = self.norms.iter().copied().fold(0.0f64, f64::max);
        let lo = self.norms.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo
    }

    /// Largest absolute inner product between distinct atoms.
    pub fn max_cross_inner(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.atoms.len() {
            for j in i + 1..self.atoms.len() {
                worst = worst.max(self.atoms[i].inner(&self.atoms[j], self.n).abs());
            }
        }
        worst
    }
}

/// Hypercube atoms: `holder_bump` places `m^{−β} Π φ(m x_d − i_d)` on the `m³`
/// cells of the unit cube; `binary_surface` thickens the sphere of radius
/// `BASE_RADIUS` about the cube centre by `A m^{−α} φ(m θ1/2π − i1) φ(m t2/π − i2)`
/// on `m²` angular cells, `t2 = π(1 − cos θ2)/2` being the equal-area
/// polar coordinate.
pub fn hypercube_fixture(m: usize, mode: HypercubeMode, smoothness: f64, amp: f64, n: usize) -> Result<HypercubeFixture> {
    if m < 2 {
        return Err(ShearletError::Constraint(format!("m must be at least 2, got {m}")));
    }
    if n < 8 * m {
        return Err(ShearletError::Resolution(format!("grid {n} cannot resolve m={m} (need n >= {})", 8 * m)));
    }
    if !(smoothness > 0.0 && amp > 0.0) {
        return Err(ShearletError::Constraint("smoothness and amplitude must be positive".into()));
    }
    let nn = n * n * n;
    let mf = m as f64;
    let (atoms, f0) = match mode {
        HypercubeMode::HolderBump => {
            let height = amp * mf.powf(-smoothness);
            let mut cells: Vec<SparseAtom> = (0..m * m * m)
                .map(|_| SparseAtom {
                    indices: Vec::new(),
                    values: Vec::new(),
                })
                .collect();
            for idx in 0..nn {
                let p = [idx % n, (idx / n) % n, idx / (n * n)];
                let x = p.map(|i| Volume::coord(n, i));
                let cell = x.map(|t| ((t * mf).floor() as usize).min(m - 1));
                let v: f64 = (0..3).map(|d| bump(mf * x[d] - cell[d] as f64)).product::<f64>() * height;
                if v != 0.0 {
                    let a = &mut cells[cell[0] + m * (cell[1] + m * cell[2])];
                    a.indices.push(idx);
                    a.values.push(v);
                }
            }
            (cells, Volume::zeros(n)?)
        }
        HypercubeMode::BinarySurface => {
            let height = amp * mf.powf(-smoothness);
            let rho = BASE_RADIUS;
            check_margin([0.5; 3], rho + height)?;
            let mut cells: Vec<SparseAtom> = (0..m * m)
                .map(|_| SparseAtom {
                    indices: Vec::new(),
                    values: Vec::new(),
                })
                .collect();
            let mut base = vec![0.0; nn];
            for (idx, b) in base.iter_mut().enumerate() {
                let p = [idx % n, (idx / n) % n, idx / (n * n)];
                let v = p.map(|i| Volume::coord(n, i) - 0.5);
                let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if r <= rho {
                    *b = 1.0;
                    continue;
                }
                if r > rho + height {
                    continue;
                }
                let (t1, t2) = angles(v);
                let u1 = mf * t1 / (2.0 * PI);
                let u2 = mf * (1.0 - t2.cos()) / 2.0;
                let c1 = (u1.floor() as usize).min(m - 1);
                let c2 = (u2.floor() as usize).min(m - 1);
                let phi = height * bump(u1 - c1 as f64) * bump(u2 - c2 as f64);
                if r <= rho + phi {
                    let a = &mut cells[c1 + m * c2];
                    a.indices.push(idx);
                    a.values.push(1.0);
                }
            }
            (cells, Volume::from_vec(n, base)?)
        }
    };
    let norms: Vec<f64> = atoms.iter().map(|a| a.norm(n)).collect();
    if norms.iter().any(|&v| v == 0.0) {
        return Err(ShearletError::Resolution(format!(
            "grid {n} leaves some atoms empty at m={m}"
        )));
    }
    let delta = norms.iter().sum::<f64>() / norms.len() as f64;
    let fx = HypercubeFixture {
        m,
        mode,
        n,
        atoms,
        f0,
        delta,
        norms,
    };
    if fx.spread() > 1.5 {
        return Err(ShearletError::Resolution(format!(
            "atom norms spread by {:.3} (> 1.5) at m={m}, n={n}",
            fx.spread()
        )));
    }
    Ok(fx)
}

/// Half-space `⟨x − x0, ν⟩ ≥ 0` with `x0 = (offset, offset, offset)`, times
/// [`margin_window`]. Voxels exactly on the plane get 1/2.
pub fn linear_edge_phantom(normal: [f64; 3], offset: f64, n: usize) -> Result<Volume> {
    if normal.iter().all(|v| *v == 0.0) || normal.iter().any(|v| !v.is_finite()) {
        return Err(ShearletError::Domain("degenerate hyperplane normal".into()));
    }
    if normal[0] != 0.0 && (normal[1] / normal[0]).abs().max((normal[2] / normal[0]).abs()) > 4.0 {
        return Err(ShearletError::Constraint(format!(
            "slopes of {normal:?} exceed 4 relative to the first axis"
        )));
    }
    Volume::from_fn(n, |x| {
        let s: f64 = (0..3).map(|i| (x[i] - offset) * normal[i]).sum();
        let side = if s > 0.0 {
            1.0
        } else if s == 0.0 {
            0.5
        } else {
            0.0
        };
        side * margin_window(x)
    })
}

/// Serializable phantom request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhantomSpec {
    Ball {
        center: [f64; 3],
        radius: f64,
    },
    Star {
        radius_kind: RadiusKind,
        alpha: f64,
        beta: f64,
        nu: f64,
        mu: f64,
        patches: usize,
        center: [f64; 3],
        /// Random smooth parts instead of the binary `χ_B`.
        smooth_parts: bool,
        seed: u64,
        /// Fixed perturbation amplitude instead of rescaling to `ν`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitude: Option<f64>,
    },
    LinearEdge {
        normal: [f64; 3],
        offset: f64,
    },
    Bump {
        center: [f64; 3],
        width: f64,
    },
}

impl PhantomSpec {
    /// Stable identifier used in reports.
    pub fn id(&self) -> String {
        match self {
            PhantomSpec::Ball { radius, .. } => format!("ball_r{radius}"),
            PhantomSpec::Star {
                radius_kind,
                patches,
                seed,
                ..
            } => {
                let kind = match radius_kind {
                    RadiusKind::Constant => "constant",
                    RadiusKind::SmoothStar => "smooth_star",
                    RadiusKind::PiecewiseStar => "piecewise_star",
                };
                format!("{kind}_L{patches}_s{seed}")
            }
            PhantomSpec::LinearEdge { normal, .. } => format!("edge_{}_{}_{}", normal[0], normal[1], normal[2]),
            PhantomSpec::Bump { width, .. } => format!("bump_w{width}"),
        }
    }

    pub fn cartoon(&self) -> Result<Option<CartoonSpec>> {
        let PhantomSpec::Star {
            radius_kind,
            alpha,
            beta,
            nu,
            mu,
            patches,
            center,
            smooth_parts,
            seed,
            amplitude,
        } = *self
        else {
            return Ok(None);
        };
        let mut radius = RadiusField::new(radius_kind, alpha, nu, patches, seed)?;
        if let Some(a) = amplitude {
            radius.set_amplitude(a);
        }
        let mut spec = CartoonSpec::binary(radius, center);
        spec.alpha = alpha;
        spec.beta = beta;
        spec.nu = nu;
        spec.mu = mu;
        if smooth_parts {
            spec.f0 = SmoothPart::random(seed.wrapping_add(1), 2, beta, mu)?;
            let mut f1 = SmoothPart::random(seed.wrapping_add(2), 2, beta, 0.5 * mu)?;
            f1.constant = 0.4 * mu;
            spec.f1 = f1;
        }
        spec.validate()?;
        Ok(Some(spec))
    }

    /// Validates the request without rasterizing.
    pub fn validate(&self) -> Result<()> {
        match self {
            PhantomSpec::Ball { center, radius } => check_margin(*center, *radius),
            PhantomSpec::Star { .. } => self.cartoon().map(|_| ()),
            PhantomSpec::LinearEdge { normal, .. } => linear_edge_phantom(*normal, 0.5, 16).map(|_| ()),
            PhantomSpec::Bump { center, width } => {
                if !(*width > 0.0) {
                    return Err(ShearletError::Constraint("bump width must be positive".into()));
                }
                check_margin(*center, *width)
            }
        }
    }

    pub fn render(&self, n: usize) -> Result<Volume> {
        match self {
            PhantomSpec::Ball { center, radius } => ball_phantom(*center, *radius, n),
            PhantomSpec::Star { .. } => {
                let spec = self.cartoon()?.expect("star spec");
                rasterize_cartoon(&spec, n)
            }
            PhantomSpec::LinearEdge { normal, offset } => linear_edge_phantom(*normal, *offset, n),
            PhantomSpec::Bump { center, width } => {
                self.validate()?;
                let (c, w) = (*center, *width);
                Volume::from_fn(n, |x| (0..3).map(|i| bump(0.5 + (x[i] - c[i]) / (2.0 * w))).product())
            }
        }
    }
}
