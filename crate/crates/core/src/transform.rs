//! Digital realization of the hybrid shearlet system on an `n³` grid.
//!
//! Each band is sampled analytically in frequency, multiplied with the
//! spectrum of the volume and folded onto a small coefficient lattice whose
//! inverse FFT yields the coefficients. Shearlet bands keep the positive
//! half along their pyramid axis and store real and imaginary parts as two
//! real coefficients; the low-pass band is real and two-sided.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShearletError};
use crate::fft3::{smooth_at_least, Fft3, PlanCache};
use crate::generators::GeneratorModel;
use crate::geometry::{band_keys, scale_factors, shear_range, Anisotropy, BandKey, LatticeConstants, PyramidPair};
use crate::solver::{conjugate_gradient, empirical_frame_bounds, CgOutcome, EmpiricalBounds, LinearOperator};

/// Allowed grid sizes.
pub const GRID_SIZES: [usize; 5] = [16, 32, 64, 128, 256];

/// Default fraction of its peak below which a band factor is dropped.
pub const SUPPORT_THRESHOLD: f64 = 1e-3;

/// Number of fixed band groups used for deterministic parallel reductions.
const REDUCTION_GROUPS: usize = 4;

/// Real scalar field on the voxel grid of `[0,1]³`, first axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    n: usize,
    data: Vec<f64>,
}

/// Sidecar document of a raw volume file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeMeta {
    pub n: usize,
    pub dtype: String,
    pub order: String,
    pub domain: [[f64; 2]; 3],
    pub seed: Option<u64>,
    pub provenance: String,
}

impl VolumeMeta {
    pub fn new(n: usize, seed: Option<u64>, provenance: impl Into<String>) -> Self {
        VolumeMeta {
            n,
            dtype: "f64le".into(),
            order: "x-fastest".into(),
            domain: [[0.0, 1.0]; 3],
            seed,
            provenance: provenance.into(),
        }
    }
}

fn check_grid(n: usize) -> Result<()> {
    if GRID_SIZES.contains(&n) {
        Ok(())
    } else {
        Err(ShearletError::Constraint(format!(
            "grid size must be one of {GRID_SIZES:?}, got {n}"
        )))
    }
}

impl Volume {
    pub fn zeros(n: usize) -> Result<Self> {
        check_grid(n)?;
        Ok(Volume {
            n,
            data: vec![0.0; n * n * n],
        })
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        check_grid(n)?;
        if data.len() != n * n * n {
            return Err(ShearletError::Shape {
                expected: format!("{} voxels", n * n * n),
                got: data.len().to_string(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(ShearletError::Domain(format!("non-finite voxel at {i}")));
        }
        Ok(Volume { n, data })
    }

    /// Samples `f` at voxel centres `(i + 1/2)/n`.
    pub fn from_fn(n: usize, f: impl Fn([f64; 3]) -> f64 + Sync) -> Result<Self> {
        check_grid(n)?;
        let mut data = vec![0.0; n * n * n];
        data.par_chunks_mut(n * n).enumerate().for_each(|(z, slab)| {
            for y in 0..n {
                for x in 0..n {
                    slab[x + n * y] = f([Self::coord(n, x), Self::coord(n, y), Self::coord(n, z)]);
                }
            }
        });
        Self::from_vec(n, data)
    }

    pub fn coord(n: usize, i: usize) -> f64 {
        (i as f64 + 0.5) / n as f64
    }

    pub fn index(n: usize, p: [usize; 3]) -> usize {
        p[0] + n * (p[1] + n * p[2])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, p: [usize; 3]) -> f64 {
        self.data[Self::index(self.n, p)]
    }

    /// Grid `L²([0,1]³)` inner product: voxel sum times cell volume.
    pub fn inner(&self, other: &Volume) -> f64 {
        let s: f64 = self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum();
        s / (self.n * self.n * self.n) as f64
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn sub(&self, other: &Volume) -> Volume {
        Volume {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scaled_add(&self, a: f64, other: &Volume, b: f64) -> Volume {
        Volume {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    /// Writes the little-endian raw array and a JSON sidecar next to it.
    pub fn write(&self, path: &Path, meta: &VolumeMeta) -> Result<()> {
        let mut bytes = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::File::create(path)?.write_all(&bytes)?;
        let side = sidecar_path(path);
        fs::write(side, serde_json::to_string_pretty(meta)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<(Volume, VolumeMeta)> {
        let meta: VolumeMeta = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
        if meta.dtype != "f64le" {
            return Err(ShearletError::Constraint(format!("unsupported dtype {}", meta.dtype)));
        }
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() % 8 != 0 {
            return Err(ShearletError::Shape {
                expected: "a multiple of 8 bytes".into(),
                got: bytes.len().to_string(),
            });
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok((Volume::from_vec(meta.n, data)?, meta))
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Parameters of one digital system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub alpha: Anisotropy,
    pub lattice: LatticeConstants,
    pub j_min: u32,
    pub j_max: u32,
    pub grid_n: usize,
    /// Band factors below this fraction of their peak are dropped.
    pub support_threshold: f64,
}

impl SystemConfig {
    /// Scales `0..=j_max` with `j_max` from [`SystemConfig::default_j_max`].
    pub fn new(alpha: Anisotropy, lattice: LatticeConstants, grid_n: usize) -> Result<Self> {
        let c = SystemConfig {
            alpha,
            lattice,
            j_min: 0,
            support_threshold: SUPPORT_THRESHOLD,
            j_max: Self::default_j_max(grid_n, alpha),
            grid_n,
        };
        c.validate()?;
        Ok(c)
    }

    /// `round(2 log2(n)/α)`: the finest scale whose pass band reaches Nyquist
    /// with a frequency scale near 4.
    pub fn default_j_max(n: usize, alpha: Anisotropy) -> u32 {
        (2.0 * (n as f64).log2() / alpha.value()).round() as u32
    }

    /// Grid frequency units per continuum frequency unit. The centre `1/8`
    /// of the finest pass band lands on Nyquist.
    pub fn freq_scale(&self) -> f64 {
        let (lead, _) = scale_factors(self.j_max as f64, self.alpha);
        4.0 * self.grid_n as f64 / lead
    }

    pub fn validate(&self) -> Result<()> {
        check_grid(self.grid_n)?;
        if self.j_min > self.j_max {
            return Err(ShearletError::Constraint(format!(
                "empty scale range: j_min={} > j_max={}",
                self.j_min, self.j_max
            )));
        }
        if !(self.support_threshold >= 0.0 && self.support_threshold < 1.0) {
            return Err(ShearletError::Constraint(format!(
                "support threshold must lie in [0,1), got {}",
                self.support_threshold
            )));
        }
        if self.j_max > 16 {
            return Err(ShearletError::Constraint(format!("j_max={} is too large", self.j_max)));
        }
        Ok(())
    }
}

/// Per-scale tables: axis factor per positive axis frequency and cross
/// factor per shear, axis frequency and cross frequency.
struct ScaleTable {
    kmax: i64,
    /// Indexed by axis frequency `a ∈ 0..=n/2`.
    g: Vec<f64>,
    active: Vec<usize>,
    /// `h[k + kmax][a·n + (b + n/2)]`.
    h: Vec<Vec<f64>>,
    /// Cross frequencies holding the support, per shear and axis frequency.
    range: Vec<Vec<Option<(i64, i64)>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct BandRow {
    a: usize,
    b: (i64, i64),
    c: (i64, i64),
}

/// Coefficient lattice of one shear cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BandLayout {
    pub key: BandKey,
    /// Lattice sizes along (pyramid axis, first cross axis, second cross axis).
    pub shape: [usize; 3],
    /// Integer shear aligning the lattice with the band.
    pub sigma: [i64; 2],
    /// First real coefficient of the band in a [`CoefficientSet`].
    pub offset: usize,
    /// Number of real coefficients (two per lattice site).
    pub len: usize,
    /// True when the lattice is coarser than the band's footprint.
    pub aliased: bool,
    weight: f64,
    rows: Vec<BandRow>,
}

impl BandLayout {
    pub fn sites(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Coefficient lattice of the low-pass band.
#[derive(Debug, Clone, PartialEq)]
pub struct LowpassLayout {
    pub shape: [usize; 3],
    pub offset: usize,
    pub len: usize,
    pub aliased: bool,
    half_width: i64,
    weight: f64,
    values: Vec<f64>,
}

/// Which part of the system a coefficient belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoefficientSlot {
    Lowpass { m: [usize; 3] },
    Band { band: usize, m: [usize; 3], imaginary: bool },
}

/// An immutable digital shearlet system with precomputed band tables.
pub struct ShearletSystem {
    config: SystemConfig,
    gen: Arc<GeneratorModel>,
    s: f64,
    tables: Vec<ScaleTable>,
    lowpass: LowpassLayout,
    bands: Vec<BandLayout>,
    total: usize,
    plans: PlanCache,
    full: Fft3,
}

fn wrap(v: i64, m: usize) -> usize {
    v.rem_euclid(m as i64) as usize
}

fn profile_peak(f: impl Fn(f64) -> f64) -> f64 {
    (0..=4096)
        .map(|i| f(i as f64 / 4096.0).abs())
        .fold(0.0f64, f64::max)
}

impl ShearletSystem {
    pub fn new(config: SystemConfig, gen: Arc<GeneratorModel>) -> Result<Self> {
        config.validate()?;
        let n = config.grid_n;
        let half = (n / 2) as i64;
        let s = config.freq_scale();
        let alpha = config.alpha;
        let axis_peak = profile_peak(|t| gen.axis.eval(t));
        let cross_peak = profile_peak(|t| gen.cross.eval(t));
        let low_peak = profile_peak(|t| gen.lowpass.eval(t));

        let mut tables = Vec::new();
        for j in config.j_min..=config.j_max {
            let (lead, cross) = scale_factors(j as f64, alpha);
            let (lead, cross) = (s * lead, s * cross);
            let kmax = shear_range(j, alpha);
            let mut g = vec![0.0; n / 2 + 1];
            let mut active = Vec::new();
            for (a, slot) in g.iter_mut().enumerate().skip(1) {
                let v = gen.axis.eval(a as f64 / lead);
                if v.abs() >= config.support_threshold * axis_peak && v != 0.0 {
                    // the Nyquist plane is shared with its mirror image
                    *slot = if a == n / 2 { v * std::f64::consts::FRAC_1_SQRT_2 } else { v };
                    active.push(a);
                }
            }
            let mut h = Vec::new();
            let mut range = Vec::new();
            for k in -kmax..=kmax {
                let mut hk = vec![0.0; (n / 2 + 1) * n];
                let mut rk = vec![None; n / 2 + 1];
                for &a in &active {
                    let shift = k as f64 * a as f64 / lead;
                    let mut lo = None;
                    let mut hi = None;
                    for b in -half..half {
                        let v = gen.cross.eval(b as f64 / cross - shift);
                        hk[a * n + (b + half) as usize] = v;
                        if v.abs() >= config.support_threshold * cross_peak && v != 0.0 {
                            lo.get_or_insert(b);
                            hi = Some(b);
                        }
                    }
                    if let (Some(l), Some(u)) = (lo, hi) {
                        rk[a] = Some((l, u));
                    }
                }
                h.push(hk);
                range.push(rk);
            }
            tables.push(ScaleTable {
                kmax,
                g,
                active,
                h,
                range,
            });
        }

        // low-pass band: real, two-sided, lattice spacing c1 on every axis
        let values: Vec<f64> = (-half..half).map(|b| gen.lowpass.eval(b as f64 / s)).collect();
        let half_width = (-half..half)
            .filter(|&b| values[(b + half) as usize].abs() >= config.support_threshold * low_peak)
            .map(|b| b.abs())
            .max()
            .unwrap_or(0)
            .min(half - 1);
        let width = (2 * half_width + 1) as usize;
        let dense = (s / config.lattice.c1).ceil() as usize;
        let side = smooth_at_least(width.min(dense.max(1)));
        let low_shape = [side; 3];
        let low_sites: usize = low_shape.iter().product();
        let lowpass = LowpassLayout {
            shape: low_shape,
            offset: 0,
            len: low_sites,
            aliased: dense < width,
            half_width,
            weight: (1.0 / (low_sites as f64 * config.lattice.c1.powi(3))).sqrt(),
            values,
        };

        let det = config.lattice.det();
        let mut bands = Vec::new();
        let mut offset = lowpass.len;
        for key in band_keys(config.j_min, config.j_max, alpha) {
            let t = &tables[(key.j - config.j_min) as usize];
            let (lead, cross) = scale_factors(key.j as f64, alpha);
            let slope = cross / lead;
            let sigma = [(key.k.0 as f64 * slope).round() as i64, (key.k.1 as f64 * slope).round() as i64];
            let ki = [(key.k.0 + t.kmax) as usize, (key.k.1 + t.kmax) as usize];
            let rows: Vec<BandRow> = t
                .active
                .iter()
                .filter_map(|&a| match (t.range[ki[0]][a], t.range[ki[1]][a]) {
                    (Some(b), Some(c)) => Some(BandRow { a, b, c }),
                    _ => None,
                })
                .collect();
            let mut lo = [i64::MAX; 3];
            let mut hi = [i64::MIN; 3];
            for r in &rows {
                let a = r.a as i64;
                let spans = [
                    (a, a),
                    (r.b.0 - sigma[0] * a, r.b.1 - sigma[0] * a),
                    (r.c.0 - sigma[1] * a, r.c.1 - sigma[1] * a),
                ];
                for d in 0..3 {
                    lo[d] = lo[d].min(spans[d].0);
                    hi[d] = hi[d].max(spans[d].1);
                }
            }
            let dense = [
                (s * lead / (2.0 * config.lattice.c1)).ceil() as usize,
                (s * cross / config.lattice.c2).ceil() as usize,
                (s * cross / config.lattice.c2).ceil() as usize,
            ];
            let mut shape = [1usize; 3];
            let mut aliased = false;
            if !rows.is_empty() {
                for d in 0..3 {
                    let width = (hi[d] - lo[d] + 1) as usize;
                    aliased |= dense[d].max(1) < width;
                    shape[d] = smooth_at_least(width.min(dense[d].max(1)));
                }
            }
            let sites: usize = shape.iter().product();
            bands.push(BandLayout {
                key,
                shape,
                sigma,
                offset,
                len: 2 * sites,
                aliased,
                weight: (2.0 / (sites as f64 * det)).sqrt(),
                rows,
            });
            offset += 2 * sites;
        }

        let plans = PlanCache::new();
        let full = plans.get([n; 3]);
        Ok(ShearletSystem {
            config,
            gen,
            s,
            tables,
            lowpass,
            bands,
            total: offset,
            plans,
            full,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn generator(&self) -> &GeneratorModel {
        &self.gen
    }

    pub fn freq_scale(&self) -> f64 {
        self.s
    }

    pub fn bands(&self) -> &[BandLayout] {
        &self.bands
    }

    pub fn lowpass(&self) -> &LowpassLayout {
        &self.lowpass
    }

    pub fn coefficient_count(&self) -> usize {
        self.total
    }

    pub fn n(&self) -> usize {
        self.config.grid_n
    }

    /// True when some band lattice is coarser than its footprint.
    pub fn aliased(&self) -> bool {
        self.lowpass.aliased || self.bands.iter().any(|b| b.aliased)
    }

    pub fn band_index(&self, key: BandKey) -> Option<usize> {
        self.bands.iter().position(|b| b.key == key)
    }

    /// Locates a flat coefficient index.
    pub fn slot(&self, flat: usize) -> Option<CoefficientSlot> {
        if flat >= self.total {
            return None;
        }
        if flat < self.lowpass.len {
            return Some(CoefficientSlot::Lowpass {
                m: unflatten(flat, self.lowpass.shape),
            });
        }
        let band = self.bands.partition_point(|b| b.offset <= flat) - 1;
        let local = flat - self.bands[band].offset;
        Some(CoefficientSlot::Band {
            band,
            m: unflatten(local / 2, self.bands[band].shape),
            imaginary: local % 2 == 1,
        })
    }

    fn strides(&self, pair: PyramidPair) -> [usize; 3] {
        let n = self.n();
        let st = [1, n, n * n];
        let [c0, c1] = pair.cross_axes();
        [st[pair.axis()], st[c0], st[c1]]
    }

    /// Continuum frequency of a grid frequency.
    pub fn continuum_frequency(&self, xi: [i64; 3]) -> [f64; 3] {
        xi.map(|v| v as f64 / self.s)
    }

    /// Two-sided band response `2^{−j(α+2)/4} ψ̂((S_k A_{2^j})^{−T} ξ/s)` on
    /// the full frequency grid (ordered like the FFT output), without support
    /// truncation.
    pub fn band_function(&self, key: BandKey) -> Vec<f64> {
        let n = self.n();
        let (lead, cross) = scale_factors(key.j as f64, self.config.alpha);
        let norm = (-(key.j as f64) * (self.config.alpha.value() + 2.0) / 4.0).exp2();
        let axis = key.pair.axis();
        let [c0, c1] = key.pair.cross_axes();
        let mut out = vec![0.0; n * n * n];
        for (idx, v) in out.iter_mut().enumerate() {
            let xi = self.continuum_frequency(grid_frequency(n, idx));
            let e1 = xi[axis] / lead;
            let e2 = xi[c0] / cross - key.k.0 as f64 * e1;
            let e3 = xi[c1] / cross - key.k.1 as f64 * e1;
            *v = norm * self.gen.psi_hat([e1, e2, e3]);
        }
        out
    }

    /// Low-pass response `φ̂(ξ/s)` on the full frequency grid.
    pub fn lowpass_function(&self) -> Vec<f64> {
        let n = self.n();
        (0..n * n * n)
            .map(|idx| self.gen.phi_hat(self.continuum_frequency(grid_frequency(n, idx))))
            .collect()
    }

    fn spectrum(&self, f: &Volume) -> Result<Vec<Complex64>> {
        if f.n() != self.n() {
            return Err(ShearletError::Shape {
                expected: format!("grid {}", self.n()),
                got: format!("grid {}", f.n()),
            });
        }
        let mut spec: Vec<Complex64> = f.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.full.forward(&mut spec);
        Ok(spec)
    }

    /// Visits every retained support point of a band as
    /// `(grid index, lattice index, raw response)`.
    fn visit_band(&self, band: &BandLayout, mut f: impl FnMut(usize, usize, f64)) {
        let n = self.n();
        let half = (n / 2) as i64;
        let t = &self.tables[(band.key.j - self.config.j_min) as usize];
        let hb = &t.h[(band.key.k.0 + t.kmax) as usize];
        let hc = &t.h[(band.key.k.1 + t.kmax) as usize];
        let [sa, sb, sc] = self.strides(band.key.pair);
        let [na, nb, nc] = band.shape;
        let nab = na * nb;
        for row in &band.rows {
            let a = row.a;
            let g = t.g[a];
            let ai = a as i64;
            let src_a = (a % n) * sa;
            let dst_a = wrap(ai, na);
            let hb_row = &hb[a * n..(a + 1) * n];
            let hc_row = &hc[a * n..(a + 1) * n];
            for b in row.b.0..=row.b.1 {
                let vb = g * hb_row[(b + half) as usize];
                if vb == 0.0 {
                    continue;
                }
                let src_b = src_a + wrap(b, n) * sb;
                let dst_b = dst_a + na * wrap(b - band.sigma[0] * ai, nb);
                let mut fc = wrap(row.c.0 - band.sigma[1] * ai, nc);
                for c in row.c.0..=row.c.1 {
                    let v = vb * hc_row[(c + half) as usize];
                    f(src_b + wrap(c, n) * sc, dst_b + nab * fc, v);
                    fc += 1;
                    if fc == nc {
                        fc = 0;
                    }
                }
            }
        }
    }

    fn visit_lowpass(&self, mut f: impl FnMut(usize, usize, f64)) {
        let n = self.n();
        let half = (n / 2) as i64;
        let m = self.lowpass.half_width;
        let [na, nb, nc] = self.lowpass.shape;
        let vals = &self.lowpass.values;
        for z in -m..=m {
            let vz = vals[(z + half) as usize];
            for y in -m..=m {
                let vy = vz * vals[(y + half) as usize];
                for x in -m..=m {
                    let v = vy * vals[(x + half) as usize];
                    let src = wrap(x, n) + n * (wrap(y, n) + n * wrap(z, n));
                    let dst = wrap(x, na) + na * (wrap(y, nb) + nb * wrap(z, nc));
                    f(src, dst, v);
                }
            }
        }
    }

    fn analyze_band(&self, spec: &[Complex64], band: &BandLayout, out: &mut [f64]) {
        let mut buf = vec![Complex64::new(0.0, 0.0); band.sites()];
        self.visit_band(band, |src, dst, v| buf[dst] += spec[src] * v);
        self.plans.get(band.shape).inverse(&mut buf);
        let scale = band.weight / (self.n() as f64).powi(3);
        for (m, z) in buf.iter().enumerate() {
            out[2 * m] = scale * z.re;
            out[2 * m + 1] = scale * z.im;
        }
    }

    fn analyze_lowpass(&self, spec: &[Complex64], out: &mut [f64]) {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.lowpass.len];
        self.visit_lowpass(|src, dst, v| buf[dst] += spec[src] * v);
        self.plans.get(self.lowpass.shape).inverse(&mut buf);
        let scale = self.lowpass.weight / (self.n() as f64).powi(3);
        for (o, z) in out.iter_mut().zip(&buf) {
            *o = scale * z.re;
        }
    }

    /// `⟨f, ψ_λ⟩` for every coefficient of the system.
    pub fn analyze(&self, f: &Volume) -> Result<CoefficientSet> {
        let spec = self.spectrum(f)?;
        let mut data = vec![0.0; self.total];
        let (low, mut rest) = data.split_at_mut(self.lowpass.len);
        self.analyze_lowpass(&spec, low);
        let mut slices = Vec::with_capacity(self.bands.len());
        for band in &self.bands {
            let (head, tail) = rest.split_at_mut(band.len);
            slices.push(head);
            rest = tail;
        }
        slices
            .into_par_iter()
            .zip(self.bands.par_iter())
            .for_each(|(out, band)| self.analyze_band(&spec, band, out));
        Ok(CoefficientSet { data })
    }

    /// Coefficients of selected bands only, in the order given.
    pub fn analyze_bands(&self, f: &Volume, bands: &[usize]) -> Result<Vec<Vec<f64>>> {
        let spec = self.spectrum(f)?;
        Ok(bands
            .par_iter()
            .map(|&b| {
                let band = &self.bands[b];
                let mut out = vec![0.0; band.len];
                self.analyze_band(&spec, band, &mut out);
                out
            })
            .collect())
    }

    fn check_coefficients(&self, c: &CoefficientSet) -> Result<()> {
        if c.data.len() != self.total {
            return Err(ShearletError::Shape {
                expected: format!("{} coefficients", self.total),
                got: c.data.len().to_string(),
            });
        }
        Ok(())
    }

    /// Band groups with fixed boundaries so that reductions do not depend on
    /// the thread count.
    fn band_groups(&self) -> Vec<std::ops::Range<usize>> {
        let per = self.bands.len().div_ceil(REDUCTION_GROUPS).max(1);
        (0..REDUCTION_GROUPS)
            .map(|g| (g * per).min(self.bands.len())..((g + 1) * per).min(self.bands.len()))
            .collect()
    }

    fn finish(&self, mut acc: Vec<Complex64>) -> Volume {
        self.full.inverse(&mut acc);
        Volume {
            n: self.n(),
            data: acc.into_iter().map(|z| z.re).collect(),
        }
    }

    fn reduce(&self, parts: Vec<Vec<Complex64>>, mut acc: Vec<Complex64>) -> Vec<Complex64> {
        for p in parts {
            for (a, v) in acc.iter_mut().zip(p) {
                *a += v;
            }
        }
        acc
    }

    /// `Σ_λ c_λ ψ_λ`, the exact adjoint of [`ShearletSystem::analyze`].
    pub fn synthesize(&self, c: &CoefficientSet) -> Result<Volume> {
        self.check_coefficients(c)?;
        let len = self.n().pow(3);
        let mut acc = vec![Complex64::new(0.0, 0.0); len];
        {
            let mut buf: Vec<Complex64> = c.data[..self.lowpass.len]
                .iter()
                .map(|&v| Complex64::new(self.lowpass.weight * v, 0.0))
                .collect();
            self.plans.get(self.lowpass.shape).forward(&mut buf);
            self.visit_lowpass(|src, dst, v| acc[src] += buf[dst] * v);
        }
        let parts: Vec<Vec<Complex64>> = self
            .band_groups()
            .into_par_iter()
            .map(|range| {
                let mut part = vec![Complex64::new(0.0, 0.0); len];
                for band in &self.bands[range] {
                    let d = &c.data[band.offset..band.offset + band.len];
                    if d.iter().all(|v| *v == 0.0) {
                        continue;
                    }
                    let mut buf: Vec<Complex64> = d
                        .chunks_exact(2)
                        .map(|p| Complex64::new(band.weight * p[0], band.weight * p[1]))
                        .collect();
                    self.plans.get(band.shape).forward(&mut buf);
                    self.visit_band(band, |src, dst, v| part[src] += buf[dst] * v);
                }
                part
            })
            .collect();
        Ok(self.finish(self.reduce(parts, acc)))
    }

    /// `S f = synthesize(analyze(f))`, evaluated band by band without the
    /// coefficient FFTs (an inverse followed by a forward FFT of size `N` is
    /// `N` times the identity).
    pub fn frame_operator_apply(&self, f: &Volume) -> Result<Volume> {
        let spec = self.spectrum(f)?;
        let n3 = (self.n() as f64).powi(3);
        let len = self.n().pow(3);
        let mut acc = vec![Complex64::new(0.0, 0.0); len];
        {
            let mut buf = vec![Complex64::new(0.0, 0.0); self.lowpass.len];
            self.visit_lowpass(|src, dst, v| buf[dst] += spec[src] * v);
            // the low-pass coefficients are real: keep the Hermitian part
            let mut re = buf.clone();
            let plan = self.plans.get(self.lowpass.shape);
            plan.inverse(&mut re);
            re.iter_mut().for_each(|z| *z = Complex64::new(z.re, 0.0));
            plan.forward(&mut re);
            let scale = self.lowpass.weight.powi(2) / n3;
            self.visit_lowpass(|src, dst, v| acc[src] += re[dst] * (scale * v));
        }
        let parts: Vec<Vec<Complex64>> = self
            .band_groups()
            .into_par_iter()
            .map(|range| {
                let mut part = vec![Complex64::new(0.0, 0.0); len];
                for band in &self.bands[range] {
                    let mut buf = vec![Complex64::new(0.0, 0.0); band.sites()];
                    self.visit_band(band, |src, dst, v| buf[dst] += spec[src] * v);
                    let scale = band.weight.powi(2) * band.sites() as f64 / n3;
                    self.visit_band(band, |src, dst, v| part[src] += buf[dst] * (scale * v));
                }
                part
            })
            .collect();
        Ok(self.finish(self.reduce(parts, acc)))
    }

    /// Diagonal of the frame operator in frequency for alias-free lattices:
    /// `Σ_b (|B_b(ξ)|² + |B_b(−ξ)|²)/det M_c + |φ̂(ξ/s)|²/c1³`.
    pub fn frequency_diagonal(&self) -> Vec<f64> {
        let n = self.n();
        let len = n * n * n;
        let neg = |idx: usize| {
            let (x, y, z) = (idx % n, (idx / n) % n, idx / (n * n));
            (n - x) % n + n * ((n - y) % n + n * ((n - z) % n))
        };
        let det = self.config.lattice.det();
        let mut d = vec![0.0; len];
        let c1 = self.config.lattice.c1.powi(3);
        self.visit_lowpass(|src, _, v| d[src] += v * v / c1);
        for band in &self.bands {
            self.visit_band(band, |src, _, v| {
                d[src] += v * v / det;
                d[neg(src)] += v * v / det;
            });
        }
        d
    }

    /// Frame operator as a linear operator on voxel vectors.
    pub fn frame_operator(&self) -> FrameOperator<'_> {
        FrameOperator {
            system: self,
            diagonal: self.frequency_diagonal(),
        }
    }

    /// Solves `S x = synthesize(c)` by preconditioned conjugate gradients.
    pub fn dual_reconstruct(&self, c: &CoefficientSet, tol: f64, max_iter: usize) -> Result<(Volume, CgOutcome)> {
        let b = self.synthesize(c)?;
        let op = self.frame_operator();
        let pre = |r: &[f64], z: &mut [f64]| op.precondition(r, z);
        let out = conjugate_gradient(&op, b.data(), Some(&pre), tol, max_iter)?;
        let vol = Volume {
            n: self.n(),
            data: out.x.clone(),
        };
        Ok((vol, out))
    }

    /// Extreme eigenvalues of the frame operator.
    pub fn empirical_frame_bounds(&self, max_iter: usize, tol: f64, seed: u64) -> Result<EmpiricalBounds> {
        let op = self.frame_operator();
        let pre = |r: &[f64], z: &mut [f64]| op.precondition(r, z);
        empirical_frame_bounds(&op, Some(&pre), max_iter, tol, seed)
    }

    /// Factor mapping coefficients of a band to the normalization of a
    /// lattice with the continuum density: `sqrt(N³/N_c³)` where `N` counts
    /// the band's lattice sites and `N_c³ = s³ 2^{j(α+2)/2}/(2 det M_c)`.
    pub fn atom_normalization(&self, band: usize) -> f64 {
        let b = &self.bands[band];
        let (lead, cross) = scale_factors(b.key.j as f64, self.config.alpha);
        let dense = self.s.powi(3) * lead * cross * cross / (2.0 * self.config.lattice.det());
        (b.sites() as f64 / dense).sqrt()
    }

    /// Continuum position in `[0,1)³` of a lattice site of a band.
    pub fn site_position(&self, band: usize, m: [usize; 3]) -> [f64; 3] {
        let b = &self.bands[band];
        // phases ζ·m/N with ζ = (a, b − σ1 a, c − σ2 a) equal ξ·x with
        // x_axis = m_a/N_a − σ1 m_b/N_b − σ2 m_c/N_c, x_cross = m/N
        let u = [
            m[0] as f64 / b.shape[0] as f64,
            m[1] as f64 / b.shape[1] as f64,
            m[2] as f64 / b.shape[2] as f64,
        ];
        let mut x = [0.0; 3];
        let axis = b.key.pair.axis();
        let [c0, c1] = b.key.pair.cross_axes();
        x[axis] = (u[0] - b.sigma[0] as f64 * u[1] - b.sigma[1] as f64 * u[2]).rem_euclid(1.0);
        x[c0] = u[1];
        x[c1] = u[2];
        x
    }
}

fn unflatten(i: usize, shape: [usize; 3]) -> [usize; 3] {
    [i % shape[0], (i / shape[0]) % shape[1], i / (shape[0] * shape[1])]
}

/// Signed grid frequency of a flat FFT index.
pub fn grid_frequency(n: usize, idx: usize) -> [i64; 3] {
    let f = |v: usize| if v >= n / 2 { v as i64 - n as i64 } else { v as i64 };
    [f(idx % n), f((idx / n) % n), f(idx / (n * n))]
}

/// Frame operator with its frequency-diagonal preconditioner.
pub struct FrameOperator<'a> {
    system: &'a ShearletSystem,
    diagonal: Vec<f64>,
}

impl FrameOperator<'_> {
    /// Applies the inverse of the frequency diagonal, clipped below at half
    /// its smallest positive value.
    pub fn precondition(&self, r: &[f64], z: &mut [f64]) {
        let floor = 0.5
            * self
                .diagonal
                .iter()
                .copied()
                .filter(|v| *v > 0.0)
                .fold(f64::INFINITY, f64::min);
        let mut spec: Vec<Complex64> = r.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.system.full.forward(&mut spec);
        for (s, d) in spec.iter_mut().zip(&self.diagonal) {
            *s /= d.max(floor);
        }
        self.system.full.inverse(&mut spec);
        let n3 = spec.len() as f64;
        for (o, s) in z.iter_mut().zip(&spec) {
            *o = s.re / n3;
        }
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }
}

impl LinearOperator for FrameOperator<'_> {
    fn dim(&self) -> usize {
        self.diagonal.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let v = Volume {
            n: self.system.n(),
            data: x.to_vec(),
        };
        let s = self
            .system
            .frame_operator_apply(&v)
            .expect("frame operator input has the system's shape");
        out.copy_from_slice(s.data());
    }
}

/// All coefficients of one system in canonical order: low-pass first, then
/// bands by (pair, scale, shear), sites lexicographic (first lattice axis
/// fastest), real part before imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub data: Vec<f64>,
}

impl CoefficientSet {
    pub fn zeros(system: &ShearletSystem) -> Self {
        CoefficientSet {
            data: vec![0.0; system.coefficient_count()],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn dot(&self, other: &CoefficientSet) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn band<'a>(&'a self, layout: &BandLayout) -> &'a [f64] {
        &self.data[layout.offset..layout.offset + layout.len]
    }

    /// Moduli `|re + i·im|` per lattice site of a band.
    pub fn band_moduli(&self, layout: &BandLayout) -> Vec<f64> {
        self.band(layout)
            .chunks_exact(2)
            .map(|p| p[0].hypot(p[1]))
            .collect()
    }

    /// Writes one raw little-endian array per band plus a manifest.
    pub fn export(&self, system: &ShearletSystem, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut entries = Vec::new();
        let mut write = |name: String, slice: &[f64], shape: [usize; 3], extra: serde_json::Value| -> Result<()> {
            let mut bytes = Vec::with_capacity(slice.len() * 8);
            for v in slice {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            fs::write(dir.join(&name), bytes)?;
            let mut e = serde_json::json!({ "file": name, "shape": shape, "len": slice.len() });
            if let (Some(obj), serde_json::Value::Object(more)) = (e.as_object_mut(), extra) {
                obj.extend(more);
            }
            entries.push(e);
            Ok(())
        };
        let low = system.lowpass();
        write(
            "lowpass.f64".into(),
            &self.data[..low.len],
            low.shape,
            serde_json::json!({ "kind": "lowpass" }),
        )?;
        for (i, b) in system.bands().iter().enumerate() {
            write(
                format!("band_{i:05}.f64"),
                self.band(b),
                b.shape,
                serde_json::json!({
                    "kind": "band",
                    "pair": b.key.pair.label(),
                    "j": b.key.j,
                    "k": [b.key.k.0, b.key.k.1],
                    "sigma": b.sigma,
                    "layout": "interleaved re/im per site",
                }),
            )?;
        }
        let manifest = serde_json::json!({
            "config": system.config(),
            "freq_scale": system.freq_scale(),
            "total": self.data.len(),
            "bands": entries,
        });
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }
}
