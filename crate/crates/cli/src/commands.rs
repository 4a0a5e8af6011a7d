//! Orchestration of the six experiment pipelines.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use shearlab::approx::{
    error_curve, fit_rate, fourier_baseline, log_spaced, optimal_rate, rearranged_coefficients,
    scale_decay_experiment, shear_decay_experiment, shearlet_moduli, significant_count, tau,
    wavelet_baseline, ErrorCurve, RateFit,
};
use shearlab::frame::{frame_bound_interval, phi_profile, FrameCertificate};
use shearlab::generators::{vanishing_moment_order, verify_feasibility, FeasibilityReport};
use shearlab::phantom::{hypercube_fixture, linear_edge_phantom, HypercubeMode};
use shearlab::stats::log_log_fit;
use shearlab::transform::{ShearletSystem, VolumeMeta};
use shearlab::{Result, ShearletError};

use crate::config::ExperimentConfig;
use crate::report::{num, LogLogPlot, Series, Sink};

pub const CERTIFICATE_FILE: &str = "certificate.json";

/// Certificate document as written to disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateDoc {
    pub certificate_hash: String,
    pub certificate: FrameCertificate,
    pub feasibility: FeasibilityReport,
    pub vanishing_moment_order: f64,
    /// Empirical bounds lie in the certified interval widened by 10%.
    pub empirical_inside: Option<bool>,
    /// Why the empirical bounds are missing, when they are.
    pub empirical_note: Option<String>,
    pub status: String,
}

fn stamp_sink(cfg: &ExperimentConfig, out: &Path, command: &str) -> Result<Sink> {
    let sink = Sink::new(out, &cfg.hash()?, command)?;
    sink.text("effective_config.toml", &cfg.effective_toml()?)?;
    Ok(sink)
}

fn certificate_status(cert: &FrameCertificate) -> String {
    if cert.no_lower_bound {
        "no lower-bound certificate".into()
    } else {
        "certified".into()
    }
}

/// Feasibility fit, certificate and optional empirical bounds.
pub fn build_certificate(cfg: &ExperimentConfig) -> Result<CertificateDoc> {
    let gen = cfg.generator()?;
    let alpha = cfg.alpha()?;
    let profile = cfg.feasibility_profile()?;
    let feas = verify_feasibility(&gen, &profile, &cfg.feasibility_grid()?)?;
    let profile = profile.with_fit(feas.c_fit, feas.worst_ratio);
    let mut cert = frame_bound_interval(&gen, alpha, cfg.lattice()?, &cfg.policy()?, Some(&profile))?;
    let mut empirical_inside = None;
    let mut empirical_note = None;
    if cfg.certify.empirical {
        let system = ShearletSystem::new(cfg.system_config()?, gen.clone())?;
        match system.empirical_frame_bounds(cfg.certify.empirical_max_iter, cfg.certify.empirical_tol, cfg.seed) {
            Ok(e) => {
                cert = cert.with_empirical(e.a, e.b);
                if !cert.no_lower_bound {
                    empirical_inside = Some(cert.lower / 1.1 <= e.a && e.b <= cert.upper * 1.1);
                }
            }
            // the digital bounds are a cross-check, not part of the certificate
            Err(e @ ShearletError::NoConvergence { .. }) => empirical_note = Some(e.to_string()),
            Err(e) => return Err(e),
        }
    }
    Ok(CertificateDoc {
        certificate_hash: cfg.certificate_hash()?,
        status: certificate_status(&cert),
        vanishing_moment_order: vanishing_moment_order(&gen)?,
        certificate: cert,
        feasibility: feas,
        empirical_inside,
        empirical_note,
    })
}

pub fn certify(cfg: &ExperimentConfig, out: &Path) -> Result<CertificateDoc> {
    cfg.validate_certify()?;
    let sink = stamp_sink(cfg, out, "certify")?;
    let doc = build_certificate(cfg)?;
    write_certificate(&sink, cfg, &doc)?;
    Ok(doc)
}

fn write_certificate(sink: &Sink, cfg: &ExperimentConfig, doc: &CertificateDoc) -> Result<()> {
    sink.json(CERTIFICATE_FILE, doc)?;
    let rows = phi_profile(&*cfg.generator()?, cfg.alpha()?, &cfg.policy()?)?
        .iter()
        .map(|r| vec![num(r.xi1), num(r.min), num(r.max), num(r.center)])
        .collect::<Vec<_>>();
    sink.csv("phi_profile.csv", &["xi1", "phi_min", "phi_max", "phi_axis"], &rows)?;
    let c = &doc.certificate;
    let mut s = String::new();
    s.push_str(&format!("status: {}\n", doc.status));
    s.push_str(&format!("alpha {} lattice ({}, {}) domain {:?}\n", c.alpha, c.lattice.c1, c.lattice.c2, c.domain));
    s.push_str(&format!("L_inf {:e} at {:?}\nL_sup {:e} at {:?}\nR(c) {:e}\n", c.l_inf, c.l_inf_at, c.l_sup, c.l_sup_at, c.r_c));
    s.push_str(&format!("frame bounds [{:e}, {:e}]\n", c.lower, c.upper));
    if let (Some(a), Some(b)) = (c.empirical_a, c.empirical_b) {
        s.push_str(&format!("empirical bounds [{a:e}, {b:e}]\n"));
    }
    if let Some(note) = &doc.empirical_note {
        s.push_str(&format!("empirical bounds unavailable: {note}\n"));
    }
    if let Some(b) = c.analytic_lsup {
        s.push_str(&format!("analytic L_sup bound {b:e} (pair L_sup {:e})\n", c.l_sup_pair));
    }
    if let Some(b) = &c.analytic_rc {
        s.push_str(&format!("analytic R(c) bound {:e} (pair R(c) {:e})\n", b.total, c.r_c_pair));
    }
    s.push_str(&format!(
        "feasibility passes {} (C_fit {:e}, holdout ratio {:e})\nvanishing moment order {:.3}\n",
        doc.feasibility.passes, doc.feasibility.c_fit, doc.feasibility.worst_ratio, doc.vanishing_moment_order
    ));
    if c.boundary_warning {
        s.push_str("warning: an extremum sits on the sampling boundary\n");
    }
    sink.text("summary.txt", &s)
}

/// Reuses `certificate.json` in the output directory when its hash matches.
fn cached_certificate(cfg: &ExperimentConfig, sink: &Sink) -> Result<CertificateDoc> {
    let want = cfg.certificate_hash()?;
    if let Ok(text) = std::fs::read_to_string(sink.path(CERTIFICATE_FILE)) {
        if let Ok(doc) = serde_json::from_str::<CertificateDoc>(&text) {
            if doc.certificate_hash == want {
                return Ok(doc);
            }
        }
    }
    let doc = build_certificate(cfg)?;
    let cert_sink = Sink::new(&sink.dir, &sink.config_hash, "certify")?;
    write_certificate(&cert_sink, cfg, &doc)?;
    Ok(doc)
}

#[derive(Debug, Clone, Serialize)]
struct FitReport {
    method: String,
    fit: Option<RateFit>,
    target: f64,
    error: Option<String>,
}

fn fit_report(curve: &ErrorCurve, window: (usize, usize), target: f64) -> FitReport {
    match fit_rate(curve, window) {
        Ok(f) => FitReport {
            method: curve.method.clone(),
            fit: Some(f),
            target,
            error: None,
        },
        Err(e) => FitReport {
            method: curve.method.clone(),
            fit: None,
            target,
            error: Some(e.to_string()),
        },
    }
}

pub fn approximate(cfg: &ExperimentConfig, out: &Path) -> Result<serde_json::Value> {
    cfg.validate_approximate()?;
    let sink = stamp_sink(cfg, out, "approximate")?;
    let doc = cached_certificate(cfg, &sink)?;
    if doc.certificate.no_lower_bound {
        return Err(ShearletError::Hypothesis(
            "system has no lower-bound certificate; refusing to approximate".into(),
        ));
    }
    let a = &cfg.approximate;
    let alpha = cfg.alpha()?.value();
    let system = ShearletSystem::new(cfg.system_config()?, cfg.generator()?)?;
    let f = a.phantom.render(system.n())?;
    let id = a.phantom.id();
    let ns = log_spaced(a.n_min, a.n_max, a.n_count);
    let lower = system
        .frequency_diagonal()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let sc = error_curve(&f, &system, &ns, &id, lower, a.cg_tol, a.cg_max_iter)?;
    let shear_target = if alpha == 2.0 && a.beta >= 2.0 {
        -1.0
    } else {
        -alpha / 2.0 + tau(alpha)?
    };
    let mut curves = vec![sc.curve.clone()];
    let mut fits = vec![fit_report(&sc.curve, a.fit_window, shear_target)];
    for b in &a.baselines {
        let (curve, target) = match b {
            crate::config::Baseline::Wavelet => (wavelet_baseline(&f, &ns, &id)?, -0.5),
            crate::config::Baseline::Fourier => (fourier_baseline(&f, &ns, &id)?, -1.0 / 3.0),
        };
        fits.push(fit_report(&curve, a.fit_window, target));
        curves.push(curve);
    }
    let rows: Vec<Vec<String>> = curves
        .iter()
        .flat_map(|c| c.points.iter().map(move |p| vec![c.method.clone(), p.0.to_string(), num(p.1)]))
        .collect();
    sink.csv("curves.csv", &["method", "n", "err2"], &rows)?;
    let below_wavelet = curves.iter().find(|c| c.method == "wavelet").map(|w| {
        sc.curve
            .points
            .iter()
            .zip(&w.points)
            .filter(|(s, _)| s.0 >= 1000)
            .all(|(s, w)| s.1 < w.1)
    });
    let report = json!({
        "phantom_id": id,
        "grid_n": system.n(),
        "coefficient_count": system.coefficient_count(),
        "certificate_status": doc.status,
        "optimal_rate": -optimal_rate(alpha, a.beta, 3)?,
        "tau": tau(alpha)?,
        "fits": fits,
        "shearlet_below_wavelet_from_1000": below_wavelet,
        "tail_bounds": sc.tail_bounds,
        "tail_violations": sc.tail_violations(),
        "lower_bound_used": sc.lower_bound_used,
        "cg_iterations": sc.cg_iterations,
        "curves": curves,
    });
    sink.json("approximate.json", &report)?;
    let mut series: Vec<Series> = curves
        .iter()
        .map(|c| Series {
            label: c.method.clone(),
            points: c.points.iter().map(|p| (p.0 as f64, p.1)).collect(),
            dashed: false,
        })
        .collect();
    if let Some(fit) = fits[0].fit {
        let (lo, hi) = (a.n_min as f64, a.n_max as f64);
        let anchor = fit.intercept.exp() * lo.powf(fit.slope);
        series.push(Series {
            label: format!("N^{:.3}", shear_target),
            points: vec![(lo, anchor), (hi, anchor * (hi / lo).powf(shear_target))],
            dashed: true,
        });
    }
    sink.svg(
        "rates.svg",
        &LogLogPlot {
            title: format!("N-term error, {id}"),
            x_label: "N".into(),
            y_label: "||f - f_N||^2".into(),
            series,
        },
    )?;
    Ok(report)
}

pub fn phantom(cfg: &ExperimentConfig, out: &Path, validate_only: bool) -> Result<serde_json::Value> {
    let p = &cfg.phantom;
    p.spec.validate()?;
    let sink = stamp_sink(cfg, out, "phantom")?;
    let mut report = json!({ "phantom_id": p.spec.id(), "valid": true });
    if let Some(spec) = p.spec.cartoon()? {
        let (n1, n2) = shearlab::phantom::HOLDER_GRID;
        let (lo, hi) = spec.radius.extremes();
        report["radius_min"] = json!(lo);
        report["radius_max"] = json!(hi);
        report["holder_patch"] = json!(spec.radius.patch_seminorm(n1, n2)?);
        report["holder_global"] = json!(spec.radius.global_seminorm(n1, n2)?);
        report["nu"] = json!(spec.nu);
        report["mu"] = json!(spec.mu);
    }
    if !validate_only {
        let v = p.spec.render(p.n)?;
        report["n"] = json!(p.n);
        report["mean"] = json!(v.mean());
        report["norm_sq"] = json!(v.norm_sq());
        if p.write_volume {
            let meta = VolumeMeta::new(p.n, Some(cfg.seed), sink.stamp());
            v.write(&sink.path("phantom.raw"), &meta)?;
        }
    }
    sink.json("phantom.json", &report)?;
    Ok(report)
}

pub fn hypercube(cfg: &ExperimentConfig, out: &Path) -> Result<serde_json::Value> {
    cfg.validate_hypercube()?;
    let h = &cfg.hypercube;
    let sink = stamp_sink(cfg, out, "hypercube")?;
    let mut rows = Vec::new();
    let mut pts = Vec::new();
    let mut table = Vec::new();
    let mut orthogonal = true;
    for &m in &h.ms {
        let fx = hypercube_fixture(m, h.mode, h.smoothness, h.amp, h.n)?;
        let cross = fx.max_cross_inner();
        orthogonal &= cross == 0.0;
        rows.push(vec![
            m.to_string(),
            fx.atoms.len().to_string(),
            num(fx.delta),
            num(fx.spread()),
            num(cross),
        ]);
        table.push(json!({"m": m, "atoms": fx.atoms.len(), "delta": fx.delta, "spread": fx.spread(), "max_cross_inner": cross}));
        pts.push((m as f64, fx.delta));
    }
    sink.csv("hypercube.csv", &["m", "atoms", "delta", "spread", "max_cross_inner"], &rows)?;
    let (slope, intercept, r2) = log_log_fit(&pts)?;
    let (quantity, exponent, target) = match h.mode {
        HypercubeMode::HolderBump => ("delta", slope, -(h.smoothness + 1.5)),
        HypercubeMode::BinarySurface => ("delta^2", 2.0 * slope, -(h.smoothness + 2.0)),
    };
    let report = json!({
        "mode": h.mode,
        "n": h.n,
        "rows": table,
        "orthogonal": orthogonal,
        "fit": {"quantity": quantity, "exponent": exponent, "target": target, "delta_slope": slope, "intercept": intercept, "r_squared": r2},
    });
    sink.json("hypercube.json", &report)?;
    let power = if h.mode == HypercubeMode::BinarySurface { 2 } else { 1 };
    sink.svg(
        "hypercube.svg",
        &LogLogPlot {
            title: format!("{quantity} vs m"),
            x_label: "m".into(),
            y_label: quantity.into(),
            series: vec![
                Series {
                    label: "measured".into(),
                    points: pts.iter().map(|p| (p.0, p.1.powi(power))).collect(),
                    dashed: false,
                },
                Series {
                    label: format!("m^{target}"),
                    points: pts
                        .iter()
                        .map(|p| (p.0, pts[0].1.powi(power) * (p.0 / pts[0].0).powf(target)))
                        .collect(),
                    dashed: true,
                },
            ],
        },
    )?;
    Ok(report)
}

pub fn decay(cfg: &ExperimentConfig, out: &Path) -> Result<serde_json::Value> {
    cfg.validate_decay()?;
    let d = &cfg.decay;
    let sink = stamp_sink(cfg, out, "decay")?;
    let system = ShearletSystem::new(cfg.system_config()?, cfg.generator()?)?;
    let f = linear_edge_phantom([-1.0, d.slope.0, d.slope.1], d.offset, system.n())?;
    let res = shear_decay_experiment(&system, &f, d.slope, d.j)?;
    let scale = scale_decay_experiment(&system, &f, d.slope, &d.scales)?;
    let alpha = cfg.alpha()?.value();
    let rows: Vec<Vec<String>> = res
        .rows
        .iter()
        .map(|r| vec![r.k.0.to_string(), r.k.1.to_string(), num(r.offset), num(r.max_coef)])
        .collect();
    sink.csv("decay.csv", &["k1", "k2", "offset", "max_coef"], &rows)?;
    let argmax = res
        .rows
        .iter()
        .max_by(|a, b| a.max_coef.total_cmp(&b.max_coef))
        .map(|r| r.k);
    let report = json!({
        "j": d.j,
        "slope": d.slope,
        "grid_n": system.n(),
        "argmax_shear": argmax,
        "shear_fit": res.fit,
        "shear_target": -3.0,
        "envelope": res.envelope,
        "scale_rows": scale.rows,
        "scale_exponent": scale.exponent,
        "scale_r_squared": scale.r_squared,
        "scale_target": -(alpha / 4.0 + 0.5),
    });
    sink.json("decay.json", &report)?;
    sink.svg(
        "decay.svg",
        &LogLogPlot {
            title: format!("shear decay at j={}", d.j),
            x_label: "shear offset".into(),
            y_label: "max |coefficient|".into(),
            series: vec![Series {
                label: "envelope".into(),
                points: res.envelope.iter().copied().filter(|e| e.0 > 0.0).collect(),
                dashed: false,
            }],
        },
    )?;
    Ok(report)
}

pub fn count(cfg: &ExperimentConfig, out: &Path) -> Result<serde_json::Value> {
    cfg.validate_count()?;
    let c = &cfg.count;
    let sink = stamp_sink(cfg, out, "count")?;
    let system = ShearletSystem::new(cfg.system_config()?, cfg.generator()?)?;
    let f = c.phantom.render(system.n())?;
    let coeffs = system.analyze(&f)?;
    let moduli = shearlet_moduli(&system, &coeffs);
    let top = moduli.iter().copied().fold(0.0f64, f64::max);
    if !(top > 0.0) {
        return Err(ShearletError::DegenerateFit("all coefficients vanish".into()));
    }
    let (lo, hi) = (c.eps_rel_min.ln(), c.eps_rel_max.ln());
    let eps: Vec<f64> = (0..c.eps_count)
        .map(|i| top * (hi + (lo - hi) * i as f64 / (c.eps_count - 1) as f64).exp())
        .collect();
    let alpha = cfg.alpha()?.value();
    let res = significant_count(&moduli, &eps, alpha)?;
    let rows: Vec<Vec<String>> = res.counts.iter().map(|(e, k)| vec![num(*e), k.to_string()]).collect();
    sink.csv("count.csv", &["eps", "count"], &rows)?;
    let cstar = rearranged_coefficients(&moduli);
    let (w0, w1) = c.rearranged_window;
    let pts: Vec<(f64, f64)> = log_spaced(w0.max(1), w1.min(cstar.len()), 20)
        .into_iter()
        .filter(|&i| cstar[i - 1] > 0.0)
        .map(|i| (i as f64, cstar[i - 1]))
        .collect();
    let rearranged = log_log_fit(&pts).ok().map(|(s, _, r2)| json!({"exponent": s, "r_squared": r2, "window": [w0, w1]}));
    let p = 4.0 / (alpha + 2.0 - 2.0 * tau(alpha)?);
    let (weak, at) = shearlab::approx::weak_lp_norm(&cstar, p)?;
    let report = json!({
        "phantom_id": c.phantom.id(),
        "grid_n": system.n(),
        "max_modulus": top,
        "counts": res.counts,
        "exponent": res.exponent,
        "r_squared": res.r_squared,
        "target": res.target,
        "rearranged_decay": rearranged,
        "weak_lp": {"p": p, "value": weak, "argmax_n": at},
    });
    sink.json("count.json", &report)?;
    sink.svg(
        "count.svg",
        &LogLogPlot {
            title: "significant coefficients".into(),
            x_label: "eps".into(),
            y_label: "count".into(),
            series: vec![Series {
                label: "|Lambda(eps)|".into(),
                points: res.counts.iter().filter(|x| x.1 > 0).map(|x| (x.0, x.1 as f64)).collect(),
                dashed: false,
            }],
        },
    )?;
    Ok(report)
}
