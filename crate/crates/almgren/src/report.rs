//! CSV, JSON and SVG output for a run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::extrapolate::linear_fit;
use crate::scenario::{RunReport, SCHEMA};

/// Keys whose values may legitimately be `null`.
const NULLABLE: [&str; 8] = [
    "slope",
    "rates",
    "orders",
    "solution_residual",
    "inequalities",
    "sobolev_constant",
    "quadrature",
    "potential",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Format> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(Error::Usage(format!("unknown format `{other}` (csv, json, svg)"))),
        }
    }
}

/// Parses a comma-separated format list, dropping duplicates.
pub fn parse_formats(list: &str) -> Result<Vec<Format>> {
    let mut out = Vec::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        let f: Format = part.parse()?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    if out.is_empty() {
        return Err(Error::Usage("empty format list".into()));
    }
    Ok(out)
}

/// Rejects reports with NaN or infinite values outside the nullable keys.
pub fn check_finite(report: &RunReport) -> Result<()> {
    let v = serde_json::to_value(report).map_err(|e| Error::Numeric(e.to_string()))?;
    let mut bad = Vec::new();
    walk(&v, "", &mut bad);
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite values at {}", bad.join(", "))))
    }
}

fn walk(v: &Value, path: &str, bad: &mut Vec<String>) {
    match v {
        Value::Null => bad.push(path.to_string()),
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                walk(x, &format!("{path}[{i}]"), bad);
            }
        }
        Value::Object(m) => {
            for (k, x) in m {
                if NULLABLE.contains(&k.as_str()) {
                    if let Value::Array(a) = x {
                        for (i, y) in a.iter().enumerate() {
                            if !y.is_null() {
                                walk(y, &format!("{path}.{k}[{i}]"), bad);
                            }
                        }
                        continue;
                    }
                    if x.is_null() {
                        continue;
                    }
                }
                walk(x, &format!("{path}.{k}"), bad);
            }
        }
        _ => {}
    }
}

pub fn csv_header(report: &RunReport) -> Vec<String> {
    let mut cols: Vec<String> = ["r", "H", "D", "N", "eta"].iter().map(|s| s.to_string()).collect();
    if let Some(row) = report.blowup.coefficients.first() {
        cols.extend(row.iter().map(|c| format!("phi_{}_{}", c.degree, c.index)));
    }
    cols
}

/// One row per radius: r, H, D, 𝒩, η and the Fourier coefficients at λ = r.
pub fn to_csv(report: &RunReport) -> String {
    let p = &report.frequency.profile;
    let mut out = csv_header(report).join(",");
    out.push('\n');
    for i in 0..p.radii.len() {
        let mut row = vec![p.radii[i], p.height[i], p.energy[i], p.frequency[i], p.eta[i]];
        let lambda_row = report.blowup.lambdas.iter().position(|&l| l == p.radii[i]);
        if let Some(j) = lambda_row {
            row.extend(report.blowup.coefficients[j].iter().map(|c| c.value));
        } else {
            row.extend(std::iter::repeat_n(f64::NAN, csv_header(report).len() - 5));
        }
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn to_json(report: &RunReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::Numeric(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<RunReport> {
    let r: RunReport = serde_json::from_str(text).map_err(|e| Error::Config(format!("report JSON: {e}")))?;
    if r.schema != SCHEMA {
        return Err(Error::Config(format!("unsupported report schema `{}`", r.schema)));
    }
    Ok(r)
}

struct Panel<'a> {
    title: &'a str,
    x: Vec<f64>,
    y: Vec<f64>,
    line: Option<(f64, f64)>,
}

const W: f64 = 420.0;
const HGT: f64 = 300.0;
const PAD: f64 = 48.0;

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-12 * (1.0 + hi.abs()) {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn panel(out: &mut String, p: &Panel, x0: f64) {
    let (xl, xh) = bounds(&p.x);
    let mut ys = p.y.clone();
    if let Some((a, b)) = p.line {
        ys.push(a + b * xl);
        ys.push(a + b * xh);
    }
    let (yl, yh) = bounds(&ys);
    let sx = |x: f64| x0 + PAD + (x - xl) / (xh - xl) * (W - 2.0 * PAD);
    let sy = |y: f64| HGT - PAD - (y - yl) / (yh - yl) * (HGT - 2.0 * PAD);
    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#888"/>"##,
        x0 + PAD,
        PAD,
        W - 2.0 * PAD,
        HGT - 2.0 * PAD
    );
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="13">{}</text>"#, x0 + PAD, PAD - 12.0, p.title);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="10">{:.3e}</text><text x="{:.2}" y="{:.2}" font-size="10">{:.3e}</text>"#,
        x0 + 4.0,
        HGT - PAD,
        yl,
        x0 + 4.0,
        PAD + 10.0,
        yh
    );
    let pts: Vec<String> = p.x.iter().zip(&p.y).map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    let _ = writeln!(out, r##"<polyline fill="none" stroke="#1f4e9c" stroke-width="1.5" points="{}"/>"##, pts.join(" "));
    if let Some((a, b)) = p.line {
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#c0392b" stroke-dasharray="4 3"/>"##,
            sx(xl),
            sy(a + b * xl),
            sx(xh),
            sy(a + b * xh)
        );
    }
}

/// log H against log r with the fitted slope 2γ̂, and 𝒩 against log r.
pub fn to_svg(report: &RunReport) -> String {
    let p = &report.frequency.profile;
    let lx: Vec<f64> = p.radii.iter().map(|r| r.ln()).collect();
    let lh: Vec<f64> = p.height.iter().map(|h| h.ln()).collect();
    let gamma = report.verdict.gamma_hat;
    // intercept for slope 2γ̂ through the centroid
    let n = lx.len() as f64;
    let a = (lh.iter().sum::<f64>() - 2.0 * gamma * lx.iter().sum::<f64>()) / n;
    let fit = linear_fit(&lx, &lh);
    let left = Panel {
        title: &format!("log H vs log r (slope {:.4}, fitted 2γ̂ = {:.4})", fit.1, 2.0 * gamma),
        x: lx.clone(),
        y: lh,
        line: Some((a, 2.0 * gamma)),
    };
    let right = Panel {
        title: &format!("frequency 𝒩(r), m₀ = {}", report.verdict.m0),
        x: lx,
        y: p.frequency.clone(),
        line: None,
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
        2.0 * W,
        HGT,
        2.0 * W,
        HGT
    );
    let _ = writeln!(out, "<title>{}</title>", report.scenario.name);
    panel(&mut out, &left, 0.0);
    panel(&mut out, &right, W);
    out.push_str("</svg>\n");
    out
}

pub fn render(report: &RunReport, f: Format) -> Result<String> {
    match f {
        Format::Csv => Ok(to_csv(report)),
        Format::Json => to_json(report),
        Format::Svg => Ok(to_svg(report)),
    }
}

/// Writes `<name>.<ext>` for each format into `dir`.
pub fn emit(report: &RunReport, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let mut paths = Vec::new();
    for &f in formats {
        let path = dir.join(format!("{}.{}", report.scenario.name, f.extension()));
        let text = render(report, f)?;
        std::fs::write(&path, text).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_lists() {
        assert_eq!(parse_formats("csv,json,svg").unwrap(), vec![Format::Csv, Format::Json, Format::Svg]);
        assert_eq!(parse_formats("JSON, json").unwrap(), vec![Format::Json]);
        assert!(matches!(parse_formats("xml"), Err(Error::Usage(_))));
        assert!(parse_formats("").is_err());
    }

    #[test]
    fn walker_flags_nulls_outside_allowlist() {
        let v: Value = serde_json::json!({"a": [1.0, null], "rates": [null, 0.5], "orders": null, "b": {"c": null}});
        let mut bad = Vec::new();
        walk(&v, "", &mut bad);
        assert_eq!(bad, vec![".a[1]".to_string(), ".b.c".to_string()]);
    }
}
