//! Output files. Every file starts with the tool version and config hash.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use shearlab::{Result, ShearletError};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Output directory plus the stamp written into every file.
#[derive(Debug, Clone)]
pub struct Sink {
    pub dir: PathBuf,
    pub config_hash: String,
    pub command: String,
}

impl Sink {
    pub fn new(dir: &Path, config_hash: &str, command: &str) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            config_hash: config_hash.into(),
            command: command.into(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn stamp(&self) -> String {
        format!("shearlab3d {VERSION} {} config {}", self.command, self.config_hash)
    }

    pub fn text(&self, name: &str, body: &str) -> Result<()> {
        std::fs::write(self.path(name), format!("# {}\n{body}", self.stamp()))?;
        Ok(())
    }

    /// Writes `value` (a JSON object) with `version`, `command` and
    /// `config_hash` fields prepended.
    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let body = serde_json::to_value(value)?;
        let mut out = Map::new();
        out.insert("version".into(), Value::String(VERSION.into()));
        out.insert("command".into(), Value::String(self.command.clone()));
        out.insert("config_hash".into(), Value::String(self.config_hash.clone()));
        match body {
            Value::Object(m) => out.extend(m),
            other => {
                out.insert("data".into(), other);
            }
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(out))?;
        s.push('\n');
        std::fs::write(self.path(name), s)?;
        Ok(())
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut s = format!("# {}\n{}\n", self.stamp(), header.join(","));
        for r in rows {
            if r.len() != header.len() {
                return Err(ShearletError::Shape {
                    expected: format!("{} columns", header.len()),
                    got: r.len().to_string(),
                });
            }
            s.push_str(&r.join(","));
            s.push('\n');
        }
        std::fs::write(self.path(name), s)?;
        Ok(())
    }

    pub fn svg(&self, name: &str, plot: &LogLogPlot) -> Result<()> {
        std::fs::write(self.path(name), plot.render(&self.stamp()))?;
        Ok(())
    }
}

/// One polyline of a log-log plot.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

#[derive(Debug, Clone)]
pub struct LogLogPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

impl LogLogPlot {
    pub fn render(&self, stamp: &str) -> String {
        let (w, h) = (640.0, 440.0);
        let (left, right, top, bottom) = (70.0, 170.0, 40.0, 50.0);
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .filter(|p| p.0 > 0.0 && p.1 > 0.0 && p.0.is_finite() && p.1.is_finite())
            .collect();
        let bounds = |f: fn(&(f64, f64)) -> f64| {
            let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min).log10().floor();
            let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max).log10().ceil();
            if lo.is_finite() && hi.is_finite() {
                (lo, hi.max(lo + 1.0))
            } else {
                (0.0, 1.0)
            }
        };
        let (x0, x1) = bounds(|p| p.0);
        let (y0, y1) = bounds(|p| p.1);
        let pw = w - left - right;
        let ph = h - top - bottom;
        let sx = |x: f64| left + (x.log10() - x0) / (x1 - x0) * pw;
        let sy = |y: f64| top + (y1 - y.log10()) / (y1 - y0) * ph;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
        );
        let _ = writeln!(s, "<!-- {stamp} -->");
        let _ = writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{}</text>",
            left + pw / 2.0,
            escape(&self.title)
        );
        for e in (x0 as i64)..=(x1 as i64) {
            let x = sx(10f64.powi(e as i32));
            let _ = writeln!(
                s,
                "<line x1=\"{x:.2}\" y1=\"{top}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#ddd\"/><text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">1e{e}</text>",
                top + ph,
                top + ph + 16.0
            );
        }
        for e in (y0 as i64)..=(y1 as i64) {
            let y = sy(10f64.powi(e as i32));
            let _ = writeln!(
                s,
                "<line x1=\"{left}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#ddd\"/><text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">1e{e}</text>",
                left + pw,
                left - 6.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            s,
            "<rect x=\"{left}\" y=\"{top}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>"
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
            left + pw / 2.0,
            h - 10.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            "<text x=\"16\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">{}</text>",
            top + ph / 2.0,
            top + ph / 2.0,
            escape(&self.y_label)
        );
        for (i, ser) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let coords: Vec<String> = ser
                .points
                .iter()
                .filter(|p| p.0 > 0.0 && p.1 > 0.0 && p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let dash = if ser.dashed { " stroke-dasharray=\"5,4\"" } else { "" };
            let _ = writeln!(
                s,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"{dash}/>",
                coords.join(" ")
            );
            if !ser.dashed {
                for c in &coords {
                    let (x, y) = c.split_once(',').unwrap_or(("0", "0"));
                    let _ = writeln!(s, "<circle cx=\"{x}\" cy=\"{y}\" r=\"2.5\" fill=\"{color}\"/>");
                }
            }
            let ly = top + 14.0 + 18.0 * i as f64;
            let lx = left + pw + 12.0;
            let _ = writeln!(
                s,
                "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"{dash}/><text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
                lx + 22.0,
                lx + 28.0,
                ly + 4.0,
                escape(&ser.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Shortest round-trip float text.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}
