use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::erc::{ErcCurve, ErcPoint};
use crate::error::{Error, Result};

pub const ERC_HEADER: &str = "mode,fmr_target,threshold,reject_fraction,fnmr";
pub const BESTK_HEADER: &str = "k,fmr_target,fnmr,quality_source";

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"];

/// An ERC labelled with the quality variant that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCurve {
    pub mode: String,
    pub curve: ErcCurve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestKRow {
    pub k: usize,
    pub fmr_target: f64,
    pub fnmr: f64,
    pub quality_source: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BestKTable {
    pub rows: Vec<BestKRow>,
}

impl BestKTable {
    pub fn fnmr(&self, k: usize, fmr_target: f64, source: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.k == k && r.fmr_target == fmr_target && r.quality_source == source)
            .map(|r| r.fnmr)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub curves: Option<Vec<LabeledCurve>>,
    pub best_k: Option<BestKTable>,
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `erc.csv` / `bestk.csv` plus one SVG per FMR target for whichever
/// parts are present, returning the written paths.
pub fn emit_report(report: &Report, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let out = out_dir.as_ref();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut written = Vec::new();
    if let Some(curves) = &report.curves {
        written.push(write(out.join("erc.csv"), &erc_csv(curves))?);
        for target in targets(curves.iter().map(|c| c.curve.fmr_target)) {
            let series = curves
                .iter()
                .filter(|c| c.curve.fmr_target == target)
                .map(|c| {
                    let pts = c.curve.points.iter().filter_map(|p| p.fnmr.map(|f| (p.reject_fraction, f))).collect();
                    (c.mode.clone(), pts)
                })
                .collect();
            let chart = Chart {
                title: format!("Error versus reject, FMR {target}"),
                x_label: "fraction rejected".into(),
                y_label: "FNMR".into(),
                series,
            };
            written.push(write(out.join(format!("erc_fmr{target}.svg")), &chart.render())?);
        }
    }
    if let Some(table) = &report.best_k {
        written.push(write(out.join("bestk.csv"), &bestk_csv(table))?);
        for target in targets(table.rows.iter().map(|r| r.fmr_target)) {
            let mut sources: Vec<&str> = Vec::new();
            for r in table.rows.iter().filter(|r| r.fmr_target == target) {
                if !sources.contains(&r.quality_source.as_str()) {
                    sources.push(&r.quality_source);
                }
            }
            let series = sources
                .iter()
                .map(|s| {
                    let pts = table
                        .rows
                        .iter()
                        .filter(|r| r.fmr_target == target && r.quality_source == *s)
                        .map(|r| (r.k as f64, r.fnmr))
                        .collect();
                    (s.to_string(), pts)
                })
                .collect();
            let chart = Chart {
                title: format!("FNMR by minutiae kept, FMR {target}"),
                x_label: "k".into(),
                y_label: "FNMR".into(),
                series,
            };
            written.push(write(out.join(format!("bestk_fmr{target}.svg")), &chart.render())?);
        }
    }
    Ok(written)
}

fn targets(it: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = Vec::new();
    for t in it {
        if !v.contains(&t) {
            v.push(t);
        }
    }
    v
}

pub fn erc_csv(curves: &[LabeledCurve]) -> String {
    let mut s = format!("{ERC_HEADER}\n");
    for c in curves {
        for p in &c.curve.points {
            let fnmr = p.fnmr.map(|f| f.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{},{fnmr}", c.mode, c.curve.fmr_target, c.curve.threshold, p.reject_fraction);
        }
    }
    s
}

pub fn bestk_csv(table: &BestKTable) -> String {
    let mut s = format!("{BESTK_HEADER}\n");
    for r in &table.rows {
        let _ = writeln!(s, "{},{},{},{}", r.k, r.fmr_target, r.fnmr, r.quality_source);
    }
    s
}

fn num(field: &str, line: usize) -> Result<f64> {
    field.parse().map_err(|_| Error::parse("csv", line, format!("bad number {field:?}")))
}

fn rows<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)>> {
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return Err(Error::parse("csv", 1, format!("expected header {header:?}")));
    }
    Ok(lines.enumerate().map(|(i, l)| (i + 2, l.split(',').collect())))
}

/// Inverse of [`erc_csv`]; consecutive rows with the same mode and target form one curve.
pub fn parse_erc_csv(text: &str) -> Result<Vec<LabeledCurve>> {
    let mut curves: Vec<LabeledCurve> = Vec::new();
    for (line, f) in rows(text, ERC_HEADER)? {
        if f.len() != 5 {
            return Err(Error::parse("csv", line, "expected 5 fields"));
        }
        let (target, threshold, rho) = (num(f[1], line)?, num(f[2], line)?, num(f[3], line)?);
        let fnmr = if f[4].is_empty() { None } else { Some(num(f[4], line)?) };
        let point = ErcPoint { reject_fraction: rho, fnmr };
        match curves.last_mut() {
            Some(c) if c.mode == f[0] && c.curve.fmr_target == target => c.curve.points.push(point),
            _ => curves.push(LabeledCurve {
                mode: f[0].to_string(),
                curve: ErcCurve { fmr_target: target, threshold, points: vec![point] },
            }),
        }
    }
    Ok(curves)
}

pub fn parse_bestk_csv(text: &str) -> Result<BestKTable> {
    let mut table = BestKTable::default();
    for (line, f) in rows(text, BESTK_HEADER)? {
        if f.len() != 4 {
            return Err(Error::parse("csv", line, "expected 4 fields"));
        }
        table.rows.push(BestKRow {
            k: f[0].parse().map_err(|_| Error::parse("csv", line, "bad k"))?,
            fmr_target: num(f[1], line)?,
            fnmr: num(f[2], line)?,
            quality_source: f[3].to_string(),
        });
    }
    Ok(table)
}

struct Chart {
    title: String,
    x_label: String,
    y_label: String,
    series: Vec<(String, Vec<(f64, f64)>)>,
}

impl Chart {
    fn render(&self) -> String {
        let (left, right, top, bottom) = (70.0, WIDTH - 160.0, 40.0, HEIGHT - 60.0);
        let all = self.series.iter().flat_map(|(_, p)| p.iter());
        let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        for &(x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1) = (0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        let y1 = if y1 > 0.0 { (y1 * 1.1).min(1.0) } else { 1.0 };
        let sx = |x: f64| left + (x - x0) / (x1 - x0) * (right - left);
        let sy = |y: f64| bottom - y / y1 * (bottom - top);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#, (left + right) / 2.0, self.title);
        let _ = writeln!(s, r#"<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>"#);
        let _ = writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>"#);
        for i in 0..=5 {
            let fx = x0 + (x1 - x0) * i as f64 / 5.0;
            let fy = y1 * i as f64 / 5.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="11">{:.3}</text>"#,
                sx(fx),
                bottom + 16.0,
                fx
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="11">{:.3}</text>"#,
                left - 6.0,
                sy(fy) + 4.0,
                fy
            );
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">{}</text>"#, (left + right) / 2.0, HEIGHT - 20.0, self.x_label);
        let _ = writeln!(
            s,
            r#"<text x="18" y="{0}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {0})">{1}</text>"#,
            (top + bottom) / 2.0,
            self.y_label
        );
        for (i, (name, pts)) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, coords.join(" "));
            let ly = top + 20.0 * i as f64;
            let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, right + 15.0, right + 40.0);
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{name}</text>"#,
                right + 46.0,
                ly + 4.0
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
