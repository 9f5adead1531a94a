use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Rectangular table of sweep results with `#` provenance lines.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanResult {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub provenance: Vec<String>,
}

impl ScanResult {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new(), provenance: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::DimensionMismatch { expected: self.columns.len(), found: row.len() });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.provenance.push(line.into());
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for p in &self.provenance {
            let _ = writeln!(s, "# {p}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

/// 12 significant digits.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.11e}")
    }
}

pub fn emit_csv(result: &ScanResult, path: &Path) -> Result<()> {
    write_file(path, &result.to_csv())
}

/// Reads a table written by [`emit_csv`].
pub fn parse_csv(text: &str) -> Result<ScanResult> {
    let mut out = ScanResult { columns: Vec::new(), rows: Vec::new(), provenance: Vec::new() };
    for line in text.lines() {
        if let Some(p) = line.strip_prefix('#') {
            out.provenance.push(p.trim_start().to_string());
        } else if out.columns.is_empty() {
            out.columns = line.split(',').map(str::to_string).collect();
        } else if !line.is_empty() {
            let row = line
                .split(',')
                .map(|c| c.parse::<f64>().map_err(|e| Error::Config(format!("bad CSV cell {c:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            out.push(row)?;
        }
    }
    Ok(out)
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#000000"];

/// Minimal line plot of `ys` against `x`; NaN points split the polylines.
pub fn svg_lineplot(result: &ScanResult, x: &str, ys: &[&str], log_x: bool) -> Result<String> {
    let col = |name: &str| result.column(name).ok_or_else(|| Error::Config(format!("no column {name:?}")));
    let tx = |v: f64| if log_x { v.log10() } else { v };
    let xs: Vec<f64> = col(x)?.into_iter().map(tx).collect();
    let series = ys.iter().map(|y| col(y)).collect::<Result<Vec<_>>>()?;
    let finite = |v: &&f64| v.is_finite();
    let (x0, x1) = bounds(xs.iter().filter(finite));
    let (y0, y1) = bounds(series.iter().flatten().filter(finite));
    let px = |v: f64| MARGIN + (v - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |v: f64| H - MARGIN - (v - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r##"<rect width="{W}" height="{H}" fill="#ffffff"/>"##);
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(s, r#"<polyline points="{l},{t} {l},{b} {r},{b}" fill="none" stroke="black"/>"#);
    let xl = |v: f64| if log_x { format!("1e{v:.2}") } else { format!("{v:.4}") };
    let _ = writeln!(s, r#"<text x="{l}" y="{}" text-anchor="middle">{}</text>"#, b + 18.0, xl(x0));
    let _ = writeln!(s, r#"<text x="{r}" y="{}" text-anchor="middle">{}</text>"#, b + 18.0, xl(x1));
    let _ = writeln!(s, r#"<text x="{}" y="{b}" text-anchor="end">{y0:.4}</text>"#, l - 6.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y1:.4}</text>"#, l - 6.0, t + 4.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, 0.5 * W, H - 16.0, escape(x));
    for (k, (name, ys)) in ys.iter().zip(&series).enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut run: Vec<String> = Vec::new();
        let flush = |run: &mut Vec<String>, s: &mut String| {
            if run.len() > 1 {
                let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, run.join(" "));
            }
            run.clear();
        };
        for (xv, yv) in xs.iter().zip(ys) {
            if xv.is_finite() && yv.is_finite() {
                run.push(format!("{:.2},{:.2}", px(*xv), py(*yv)));
            } else {
                flush(&mut run, &mut s);
            }
        }
        flush(&mut run, &mut s);
        let ly = t + 16.0 * k as f64;
        let _ = writeln!(s, r#"<text x="{}" y="{ly}" fill="{color}">{}</text>"#, r - 150.0, escape(name));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_svg_lineplot(result: &ScanResult, x: &str, ys: &[&str], log_x: bool, path: &Path) -> Result<()> {
    write_file(path, &svg_lineplot(result, x, ys, log_x)?)
}

fn bounds<'a>(it: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
        }
    }
    fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ScanResult {
        let mut t = ScanResult::new(&["x", "y"]);
        t.note("config sha256 0");
        t.push(vec![0.1, 1.0 / 3.0]).unwrap();
        t.push(vec![2.0, f64::NAN]).unwrap();
        t
    }

    #[test]
    fn csv_layout_and_round_trip() {
        let t = table();
        let text = t.to_csv();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "x,y");
        assert_eq!(lines[2], "1.00000000000e-1,3.33333333333e-1");
        assert!(!text.contains('\r'));
        let back = parse_csv(&text).unwrap();
        assert_eq!(back.columns, t.columns);
        assert_eq!(back.provenance, t.provenance);
        assert_eq!(back.to_csv(), text);
        assert!(back.rows[1][1].is_nan());
        assert!(t.clone().push(vec![1.0]).is_err());
    }

    #[test]
    fn svg_is_deterministic() {
        let t = table();
        let a = svg_lineplot(&t, "x", &["y"], false).unwrap();
        assert_eq!(a, svg_lineplot(&t, "x", &["y"], false).unwrap());
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(svg_lineplot(&t, "x", &["z"], false).is_err());
    }

    #[test]
    fn io_errors_carry_the_path() {
        let err = emit_csv(&table(), Path::new("/proc/definitely/not/here.csv")).unwrap_err();
        assert!(err.to_string().contains("/proc/definitely"));
    }
}
