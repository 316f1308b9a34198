//! Learning curves across seeds: mean with a standard-error band, written as
//! SVG, plus a markdown table of final values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("{path}: row {row}: {msg}")]
    Malformed { path: PathBuf, row: u64, msg: String },
    #[error("{path}: no column named {column:?}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{0}: no data rows")]
    Empty(PathBuf),
    #[error("no input files")]
    NoInput,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub step: u64,
    pub mean: f64,
    /// Standard error of the mean; `None` for a single seed.
    pub se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub seeds: usize,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotReport {
    pub svg: PathBuf,
    pub table: PathBuf,
    pub warnings: Vec<String>,
    pub curves: Vec<Curve>,
}

/// Reads `(step, value)` pairs of one column from a metrics CSV. Lines
/// starting with `#` are skipped. Row numbers in errors count data rows from 1.
pub fn read_series(path: &Path, column: &str) -> Result<Vec<(u64, f64)>, PlotError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(|e| PlotError::Malformed {
        path: path.into(),
        row: 0,
        msg: e.to_string(),
    })?;
    let malformed = |row: u64, msg: String| PlotError::Malformed { path: path.into(), row, msg };
    let headers = rdr.headers().map_err(|e| malformed(0, e.to_string()))?.clone();
    let step_col = headers.iter().position(|h| h == "step").ok_or_else(|| PlotError::MissingColumn {
        path: path.into(),
        column: "step".into(),
    })?;
    let val_col = headers.iter().position(|h| h == column).ok_or_else(|| PlotError::MissingColumn {
        path: path.into(),
        column: column.into(),
    })?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i as u64 + 1;
        let rec = rec.map_err(|e| malformed(row, e.to_string()))?;
        let step: u64 = rec
            .get(step_col)
            .unwrap_or("")
            .parse()
            .map_err(|_| malformed(row, format!("step {:?} is not an integer", rec.get(step_col).unwrap_or(""))))?;
        let raw = rec.get(val_col).unwrap_or("");
        let value: f64 = raw.parse().map_err(|_| malformed(row, format!("{column} {raw:?} is not a number")))?;
        out.push((step, value));
    }
    if out.is_empty() {
        return Err(PlotError::Empty(path.into()));
    }
    Ok(out)
}

/// Mean and standard error per step over the steps present in every series.
/// Returns a warning when the step grids differ.
pub fn aggregate(series: &[Vec<(u64, f64)>]) -> (Vec<CurvePoint>, Option<String>) {
    let n = series.len();
    let mut by_step: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for s in series {
        for &(step, v) in s {
            by_step.entry(step).or_default().push(v);
        }
    }
    let total = by_step.len();
    let points: Vec<CurvePoint> = by_step
        .into_iter()
        .filter(|(_, v)| v.len() == n)
        .map(|(step, v)| {
            let mean = v.iter().sum::<f64>() / n as f64;
            let se = (n > 1).then(|| {
                let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            });
            CurvePoint { step, mean, se }
        })
        .collect();
    let warning = (points.len() < total)
        .then(|| format!("step grids differ across {n} files: kept {} of {total} steps present in every file", points.len()));
    (points, warning)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub fn render_svg(curves: &[Curve], metric: &str) -> String {
    let (w, h, ml, mr, mt, mb) = (720.0, 440.0, 70.0, 160.0, 30.0, 50.0);
    let pw = w - ml - mr;
    let ph = h - mt - mb;
    let pts = curves.iter().flat_map(|c| c.points.iter());
    let max_step = pts.clone().map(|p| p.step).max().unwrap_or(1).max(1) as f64;
    let lo = pts.clone().map(|p| p.mean - p.se.unwrap_or(0.0)).fold(f64::INFINITY, f64::min);
    let hi = pts.map(|p| p.mean + p.se.unwrap_or(0.0)).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() && hi.is_finite() { (lo.min(0.0), hi) } else { (0.0, 1.0) };
    let hi = if hi - lo < 1e-12 { lo + 1.0 } else { hi };
    let x = |s: u64| ml + pw * s as f64 / max_step;
    let y = |v: f64| mt + ph * (1.0 - (v - lo) / (hi - lo));

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<line x1="{ml}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, mt + ph, ml + pw, mt + ph);
    let _ = writeln!(s, r#"<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{}" stroke="black"/>"#, mt + ph);
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.3}</text>"#, ml - 6.0, y(v) + 4.0);
        let st = (max_step * k as f64 / 4.0) as u64;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{st}</text>"#, x(st), mt + ph + 18.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">env steps</text>"#, ml + pw / 2.0, h - 8.0);
    let _ = writeln!(s, r#"<text x="{ml}" y="{}">{metric}</text>"#, mt - 10.0);
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if c.points.iter().all(|p| p.se.is_some()) && !c.points.is_empty() {
            let mut band = String::new();
            for p in &c.points {
                let _ = write!(band, "{:.2},{:.2} ", x(p.step), y(p.mean + p.se.unwrap_or(0.0)));
            }
            for p in c.points.iter().rev() {
                let _ = write!(band, "{:.2},{:.2} ", x(p.step), y(p.mean - p.se.unwrap_or(0.0)));
            }
            let _ = writeln!(s, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, band.trim_end());
        }
        let line: Vec<String> = c.points.iter().map(|p| format!("{:.2},{:.2}", x(p.step), y(p.mean))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, line.join(" "));
        let ly = mt + 16.0 * i as f64 + 10.0;
        let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/>"#, ml + pw + 10.0, ml + pw + 30.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{} (n={})</text>"#, ml + pw + 36.0, ly + 4.0, escape(&c.label), c.seeds);
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn summary_table(curves: &[Curve], metric: &str) -> String {
    let mut s = format!("| run | seeds | final step | {metric} | se |\n|---|---|---|---|---|\n");
    for c in curves {
        match c.points.last() {
            Some(p) => {
                let se = p.se.map_or("-".to_string(), |v| format!("{v:.4}"));
                let _ = writeln!(s, "| {} | {} | {} | {:.4} | {se} |", c.label, c.seeds, p.step, p.mean);
            }
            None => {
                let _ = writeln!(s, "| {} | {} | - | - | - |", c.label, c.seeds);
            }
        }
    }
    s
}

/// Groups are `(label, seed files)`. Writes `<out>/<metric>.svg` and
/// `<out>/summary.md`.
pub fn emit_plots(groups: &[(String, Vec<PathBuf>)], metric: &str, out: &Path) -> Result<PlotReport, PlotError> {
    if groups.iter().all(|(_, files)| files.is_empty()) {
        return Err(PlotError::NoInput);
    }
    let mut curves = Vec::new();
    let mut warnings = Vec::new();
    for (label, files) in groups {
        let series = files.iter().map(|f| read_series(f, metric)).collect::<Result<Vec<_>, _>>()?;
        let (points, warning) = aggregate(&series);
        if let Some(w) = warning {
            warnings.push(format!("{label}: {w}"));
        }
        curves.push(Curve { label: label.clone(), seeds: files.len(), points });
    }
    fs::create_dir_all(out)?;
    let svg = out.join(format!("{metric}.svg"));
    fs::write(&svg, render_svg(&curves, metric))?;
    let table = out.join("summary.md");
    fs::write(&table, summary_table(&curves, metric))?;
    Ok(PlotReport { svg, table, warnings, curves })
}

/// Splits `label=path` arguments into groups keyed by label; a bare path is
/// its own group labelled by its parent directory.
pub fn group_inputs(args: &[String]) -> Vec<(String, Vec<PathBuf>)> {
    let mut groups: Vec<(String, Vec<PathBuf>)> = Vec::new();
    for a in args {
        let (label, path) = match a.split_once('=') {
            Some((l, p)) => (l.to_string(), PathBuf::from(p)),
            None => {
                let p = PathBuf::from(a);
                let l = p.parent().and_then(|d| d.file_name()).map_or_else(|| a.clone(), |n| n.to_string_lossy().into_owned());
                (l, p)
            }
        };
        match groups.iter_mut().find(|(l, _)| *l == label) {
            Some((_, files)) => files.push(path),
            None => groups.push((label, vec![path])),
        }
    }
    groups
}
