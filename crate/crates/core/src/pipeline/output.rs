//! CSV tables, minimal SVG renderings and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::error::{Error, Result};

pub fn fmt_f(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn fmt_t(t: f64) -> String {
    format!("{t:.6}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Tables, figures and a JSON summary produced by one experiment.
#[derive(Clone, Debug, Default)]
pub struct ExperimentOutput {
    pub tables: Vec<Table>,
    /// `(file stem, svg document)`.
    pub figures: Vec<(String, String)>,
    pub summary: Value,
}

/// Write every table and figure plus `manifest.json` into `dir`. Returns the written paths.
pub fn write_output(dir: &Path, cfg: &RunConfig, out: &ExperimentOutput) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut digests = serde_json::Map::new();
    let mut save = |name: String, bytes: &[u8]| -> Result<()> {
        let path = dir.join(&name);
        fs::write(&path, bytes)?;
        digests.insert(name, Value::String(hex::encode(Sha256::digest(bytes))));
        files.push(path);
        Ok(())
    };
    for t in &out.tables {
        save(format!("{}.csv", t.name), &t.to_csv()?)?;
    }
    for (stem, svg) in &out.figures {
        save(format!("{stem}.svg"), svg.as_bytes())?;
    }
    let manifest = json!({
        "experiment": cfg.experiment,
        "config": cfg,
        "config_hash": cfg.hash(),
        "versions": { "qmpso": env!("CARGO_PKG_VERSION") },
        "files": Value::Object(digests),
        "summary": out.summary,
    });
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_vec_pretty(&manifest).expect("manifest serializes"))?;
    files.push(path);
    Ok(files)
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Line plot; with `log_y` non-positive values are dropped.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series], log_y: bool) -> String {
    let tr = |y: f64| if log_y { y.log10() } else { y };
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && (!log_y || p.1 > 0.0));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        let y = tr(y);
        if !y.is_finite() {
            continue;
        }
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 >= x1 {
        x1 = x0 + 1.0;
    }
    if y0 >= y1 {
        y1 = y0 + 1.0;
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = header(title);
    axes(&mut s, x_label, y_label);
    let ylab = |v: f64| if log_y { format!("1e{v:.1}") } else { format!("{v:.3}") };
    let _ = writeln!(s, r#"<text x="{PAD}" y="{:.1}" font-size="10">{}</text>"#, H - PAD + 14.0, format_args!("{x0:.2}"));
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{x1:.2}</text>"#, W - PAD, H - PAD + 14.0);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"#, PAD - 4.0, H - PAD, ylab(y0));
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"#, PAD - 4.0, PAD + 4.0, ylab(y1));
    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let path: Vec<String> = ser
            .points
            .iter()
            .filter(|p| !log_y || p.1 > 0.0)
            .map(|&(x, y)| (x, tr(y)))
            .filter(|p| p.1.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if !path.is_empty() {
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" fill="{color}">{}</text>"#,
            W - PAD + 4.0 - 120.0,
            PAD + 14.0 * (k as f64 + 1.0),
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Heat map of categorical cells, rows bottom to top.
pub fn category_map(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[String], cells: &[Vec<usize>], legend: &[(&str, &str)]) -> String {
    let mut s = header(title);
    axes(&mut s, x_label, y_label);
    let (nx, ny) = (xs.len().max(1), ys.len().max(1));
    let cw = (W - 2.0 * PAD) / nx as f64;
    let ch = (H - 2.0 * PAD) / ny as f64;
    for (j, row) in cells.iter().enumerate() {
        for (i, &c) in row.iter().enumerate() {
            let color = legend.get(c).map_or("#cccccc", |l| l.1);
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
                PAD + i as f64 * cw,
                H - PAD - (j as f64 + 1.0) * ch,
                cw + 0.1,
                ch + 0.1
            );
        }
    }
    for (j, label) in ys.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"#,
            PAD - 4.0,
            H - PAD - (j as f64 + 0.5) * ch + 3.0,
            escape(label)
        );
    }
    if let (Some(a), Some(b)) = (xs.first(), xs.last()) {
        let _ = writeln!(s, r#"<text x="{PAD}" y="{:.1}" font-size="10">{a:.2}</text>"#, H - PAD + 14.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{b:.2}</text>"#, W - PAD, H - PAD + 14.0);
    }
    for (k, (name, color)) in legend.iter().enumerate() {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="11" fill="{color}">{name}</text>"#, PAD + 150.0 * k as f64, PAD - 8.0);
    }
    s.push_str("</svg>\n");
    s
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="20" font-size="14" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
    s
}

fn axes(s: &mut String, x_label: &str, y_label: &str) {
    let _ = writeln!(
        s,
        r#"<path d="M{PAD},{PAD} L{PAD},{:.1} L{:.1},{:.1}" stroke="black" fill="none"/>"#,
        H - PAD,
        W - PAD,
        H - PAD
    );
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut t = Table::new("x", &["t", "value"]);
        t.push(vec![fmt_t(0.1), fmt_f(1.0 / 3.0)]);
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(text, "t,value\n0.100000,3.333333333333e-1\n");
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let s = line_plot("a < b", "t", "y", &[Series { label: "s".into(), points: vec![(0.0, 1.0), (1.0, 0.5)] }], true);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("a &lt; b"));
        let m = category_map("m", "t", "eps", &[0.0, 1.0], &["1e-2".into()], &[vec![0, 1]], &[("a", "#000"), ("b", "#fff")]);
        assert_eq!(m.matches("<rect").count(), 3);
    }

    #[test]
    fn manifest_lists_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::preset("fig2").unwrap();
        let mut out = ExperimentOutput::default();
        out.tables.push(Table::new("empty", &["a"]));
        let files = write_output(dir.path(), &cfg, &out).unwrap();
        assert_eq!(files.len(), 2);
        let m: Value = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["config_hash"], cfg.hash());
        assert!(m["files"]["empty.csv"].is_string());
    }
}
