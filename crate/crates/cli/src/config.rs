//! Experiment configuration: a TOML document whose fully expanded form is
//! written next to every result.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use shearlab::frame::{CertificateDomain, TruncationPolicy, XiGrid};
use shearlab::generators::{FeasibilityGrid, FeasibilityProfile, FilterDesign, GeneratorModel};
use shearlab::geometry::{Anisotropy, LatticeConstants};
use shearlab::phantom::{HypercubeMode, PhantomSpec};
use shearlab::transform::{SystemConfig, SUPPORT_THRESHOLD};
use shearlab::{Result, ShearletError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Results directory; `--out` takes precedence. Not part of the hash.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub system: SystemSection,
    pub certify: CertifySection,
    pub approximate: ApproximateSection,
    pub phantom: PhantomSection,
    pub hypercube: HypercubeSection,
    pub decay: DecaySection,
    pub count: CountSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    /// Rational `"p/q"` or decimal.
    pub alpha: String,
    pub c1: f64,
    pub c2: f64,
    pub k: u32,
    pub lfilt: u32,
    pub j_phi: u32,
    pub j_min: u32,
    /// Filled with `round(2 log2 n / α)` in the effective config when absent.
    pub j_max: Option<u32>,
    pub grid_n: usize,
    pub support_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifySection {
    pub domain: CertificateDomain,
    pub policy_n: usize,
    pub xi_max: f64,
    pub xi_min_full: f64,
    pub j_max_sum: Option<u32>,
    pub lattice_radius: u32,
    pub lattice_radius_cap: u32,
    pub feasibility: FeasibilitySection,
    /// Adds power/inverse iteration bounds of the digital frame operator.
    pub empirical: bool,
    pub empirical_max_iter: usize,
    pub empirical_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeasibilitySection {
    pub delta: f64,
    pub gamma: f64,
    pub q: f64,
    pub q_prime: f64,
    pub r: f64,
    pub s: f64,
    pub per_axis: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApproximateSection {
    pub phantom: PhantomSpec,
    pub beta: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub n_count: usize,
    pub fit_window: (usize, usize),
    pub baselines: Vec<Baseline>,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Wavelet,
    Fourier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomSection {
    pub spec: PhantomSpec,
    pub n: usize,
    pub write_volume: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HypercubeSection {
    pub mode: HypercubeMode,
    pub ms: Vec<usize>,
    /// `α` for `binary_surface`, `β` for `holder_bump`.
    pub smoothness: f64,
    pub amp: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecaySection {
    /// Hyperplane normal `(−1, s1, s2)`.
    pub slope: (f64, f64),
    pub j: u32,
    pub scales: Vec<u32>,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountSection {
    pub phantom: PhantomSpec,
    /// Thresholds are log-spaced on `[eps_rel_min, eps_rel_max]·max|c|`.
    pub eps_rel_max: f64,
    pub eps_rel_min: f64,
    pub eps_count: usize,
    /// Window of `n` for the decay fit of the rearranged moduli.
    pub rearranged_window: (usize, usize),
}

fn default_ball() -> PhantomSpec {
    PhantomSpec::Ball {
        center: [0.5; 3],
        radius: 0.3,
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 7,
            output_dir: None,
            system: SystemSection::default(),
            certify: CertifySection::default(),
            approximate: ApproximateSection::default(),
            phantom: PhantomSection::default(),
            hypercube: HypercubeSection::default(),
            decay: DecaySection::default(),
            count: CountSection::default(),
        }
    }
}

impl Default for SystemSection {
    fn default() -> Self {
        SystemSection {
            alpha: "2".into(),
            c1: 0.25,
            c2: 0.125,
            k: 15,
            lfilt: 10,
            j_phi: 24,
            j_min: 0,
            j_max: None,
            grid_n: 64,
            support_threshold: SUPPORT_THRESHOLD,
        }
    }
}

impl Default for CertifySection {
    fn default() -> Self {
        CertifySection {
            domain: CertificateDomain::Full,
            policy_n: 64,
            xi_max: 8.0,
            xi_min_full: 1.0 / 64.0,
            j_max_sum: None,
            lattice_radius: 4,
            lattice_radius_cap: 12,
            feasibility: FeasibilitySection::default(),
            empirical: true,
            empirical_max_iter: 200,
            empirical_tol: 1e-6,
        }
    }
}

impl Default for FeasibilitySection {
    fn default() -> Self {
        let p = FeasibilityProfile::filter_default();
        FeasibilitySection {
            delta: p.delta,
            gamma: p.gamma,
            q: p.q,
            q_prime: p.q_prime,
            r: p.r,
            s: p.s,
            per_axis: 48,
            lo: 1e-3,
            hi: 1e3,
        }
    }
}

impl Default for ApproximateSection {
    fn default() -> Self {
        ApproximateSection {
            phantom: default_ball(),
            beta: 2.0,
            n_min: 100,
            n_max: 30_000,
            n_count: 12,
            fit_window: (100, 30_000),
            baselines: vec![Baseline::Wavelet, Baseline::Fourier],
            cg_tol: 1e-6,
            cg_max_iter: 100,
        }
    }
}

impl Default for PhantomSection {
    fn default() -> Self {
        PhantomSection {
            spec: default_ball(),
            n: 64,
            write_volume: true,
        }
    }
}

impl Default for HypercubeSection {
    fn default() -> Self {
        HypercubeSection {
            mode: HypercubeMode::HolderBump,
            ms: vec![2, 4, 8],
            smoothness: 2.0,
            amp: 0.4,
            n: 128,
        }
    }
}

impl Default for DecaySection {
    fn default() -> Self {
        DecaySection {
            slope: (0.0, 0.0),
            j: 5,
            scales: vec![3, 4, 5],
            offset: 0.5,
        }
    }
}

impl Default for CountSection {
    fn default() -> Self {
        CountSection {
            phantom: default_ball(),
            eps_rel_max: 1e-1,
            eps_rel_min: 1e-3,
            eps_count: 11,
            rearranged_window: (1_000, 100_000),
        }
    }
}

/// Parses `"p/q"`, an integer or a decimal.
pub fn parse_alpha(s: &str) -> Result<Anisotropy> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad_alpha(s))?;
        let q: i64 = q.trim().parse().map_err(|_| bad_alpha(s))?;
        return Anisotropy::rational(p, q);
    }
    if let Ok(p) = s.parse::<i64>() {
        return Anisotropy::rational(p, 1);
    }
    Anisotropy::new(s.parse().map_err(|_| bad_alpha(s))?)
}

fn bad_alpha(s: &str) -> ShearletError {
    ShearletError::Constraint(format!("cannot parse alpha {s:?}"))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ShearletError::Constraint(format!("config: {e}")))?;
        cfg.expand()?;
        Ok(cfg)
    }

    /// Fills every derived default so the effective config is explicit.
    pub fn expand(&mut self) -> Result<()> {
        let alpha = parse_alpha(&self.system.alpha)?;
        if self.system.j_max.is_none() {
            self.system.j_max = Some(SystemConfig::default_j_max(self.system.grid_n, alpha));
        }
        if self.certify.j_max_sum.is_none() {
            self.certify.j_max_sum = Some(TruncationPolicy::required_j(alpha, self.certify.xi_max).max(8));
        }
        Ok(())
    }

    pub fn alpha(&self) -> Result<Anisotropy> {
        parse_alpha(&self.system.alpha)
    }

    pub fn lattice(&self) -> Result<LatticeConstants> {
        LatticeConstants::new(self.system.c1, self.system.c2)
    }

    pub fn generator(&self) -> Result<Arc<GeneratorModel>> {
        let design = FilterDesign::new(self.system.k, self.system.lfilt)?;
        Ok(Arc::new(GeneratorModel::filter_based(design, self.system.j_phi)?))
    }

    pub fn system_config(&self) -> Result<SystemConfig> {
        let mut c = SystemConfig::new(self.alpha()?, self.lattice()?, self.system.grid_n)?;
        c.j_min = self.system.j_min;
        if let Some(j) = self.system.j_max {
            c.j_max = j;
        }
        c.support_threshold = self.system.support_threshold;
        c.validate()?;
        Ok(c)
    }

    pub fn policy(&self) -> Result<TruncationPolicy> {
        let alpha = self.alpha()?;
        let c = &self.certify;
        let p = TruncationPolicy {
            j_max_sum: c
                .j_max_sum
                .unwrap_or_else(|| TruncationPolicy::required_j(alpha, c.xi_max).max(8)),
            lattice_radius: c.lattice_radius,
            lattice_radius_cap: c.lattice_radius_cap,
            xi_grid: XiGrid {
                xi_max: c.xi_max,
                n_axis: c.policy_n,
                n_cross: c.policy_n,
                xi_min_full: c.xi_min_full,
            },
            domain: c.domain,
        };
        p.validate(alpha)?;
        Ok(p)
    }

    pub fn feasibility_profile(&self) -> Result<FeasibilityProfile> {
        let f = &self.certify.feasibility;
        FeasibilityProfile::new(f.delta, f.gamma, f.q, f.q_prime, f.r, f.s)
    }

    pub fn feasibility_grid(&self) -> Result<FeasibilityGrid> {
        let f = &self.certify.feasibility;
        FeasibilityGrid::interleaved_log(f.per_axis, f.lo, f.hi)
    }

    /// Effective config as TOML, without the output directory.
    pub fn effective_toml(&self) -> Result<String> {
        let mut c = self.clone();
        c.output_dir = None;
        toml::to_string(&c).map_err(|e| ShearletError::Constraint(format!("config: {e}")))
    }

    /// SHA-256 of the effective config, hex encoded.
    pub fn hash(&self) -> Result<String> {
        Ok(hex_digest(self.effective_toml()?.as_bytes()))
    }

    /// Hash of the parts a certificate depends on.
    pub fn certificate_hash(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Key<'a> {
            seed: u64,
            system: &'a SystemSection,
            certify: &'a CertifySection,
        }
        let key = Key {
            seed: self.seed,
            system: &self.system,
            certify: &self.certify,
        };
        let text = toml::to_string(&key).map_err(|e| ShearletError::Constraint(format!("config: {e}")))?;
        Ok(hex_digest(text.as_bytes()))
    }

    /// Preconditions shared by every command.
    pub fn validate_common(&self) -> Result<()> {
        self.hash()?;
        self.certificate_hash()?;
        self.generator()?;
        self.system_config()?;
        Ok(())
    }

    pub fn validate_certify(&self) -> Result<()> {
        self.validate_common()?;
        self.policy()?;
        self.feasibility_profile()?;
        self.feasibility_grid()?;
        if self.certify.empirical_max_iter == 0 || !(self.certify.empirical_tol > 0.0) {
            return Err(ShearletError::Constraint("empirical iteration settings must be positive".into()));
        }
        Ok(())
    }

    pub fn validate_approximate(&self) -> Result<()> {
        self.validate_certify()?;
        let a = &self.approximate;
        a.phantom.validate()?;
        if !(a.beta > 0.0) {
            return Err(ShearletError::Constraint(format!("beta must be positive, got {}", a.beta)));
        }
        if a.n_min == 0 || a.n_min >= a.n_max || a.n_count < 2 {
            return Err(ShearletError::Constraint(format!(
                "need 0 < n_min < n_max and n_count >= 2, got {} {} {}",
                a.n_min, a.n_max, a.n_count
            )));
        }
        let total = self.system_config()?.grid_n.pow(3);
        if a.n_max > total {
            return Err(ShearletError::Constraint(format!(
                "n_max {} exceeds the {total} grid coefficients of the baselines",
                a.n_max
            )));
        }
        if a.fit_window.0 >= a.fit_window.1 {
            return Err(ShearletError::Constraint("fit window must be increasing".into()));
        }
        if !(a.cg_tol > 0.0) || a.cg_max_iter == 0 {
            return Err(ShearletError::Constraint("CG settings must be positive".into()));
        }
        Ok(())
    }

    pub fn validate_decay(&self) -> Result<()> {
        self.validate_common()?;
        let d = &self.decay;
        if d.scales.is_empty() {
            return Err(ShearletError::Constraint("decay needs at least one scale".into()));
        }
        let cfg = self.system_config()?;
        for &j in d.scales.iter().chain(std::iter::once(&d.j)) {
            if j < cfg.j_min || j > cfg.j_max {
                return Err(ShearletError::Constraint(format!(
                    "decay scale {j} outside [{}, {}]",
                    cfg.j_min, cfg.j_max
                )));
            }
        }
        Ok(())
    }

    pub fn validate_count(&self) -> Result<()> {
        self.validate_common()?;
        let c = &self.count;
        c.phantom.validate()?;
        if !(c.eps_rel_max > c.eps_rel_min && c.eps_rel_min > 0.0) || c.eps_count < 2 {
            return Err(ShearletError::Constraint(
                "count needs 0 < eps_rel_min < eps_rel_max and eps_count >= 2".into(),
            ));
        }
        Ok(())
    }

    pub fn validate_hypercube(&self) -> Result<()> {
        let h = &self.hypercube;
        if h.ms.len() < 2 {
            return Err(ShearletError::Constraint("hypercube needs at least two values of m".into()));
        }
        if let Some(&m) = h.ms.iter().find(|&&m| m < 2 || h.n < 8 * m) {
            return Err(ShearletError::Resolution(format!(
                "m={m} needs m >= 2 and n >= 8m (n={})",
                h.n
            )));
        }
        Ok(())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
