//! Sweep report files: CSV rows, JSON summary, and SVG trend plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::sweep::{EstimatorKind, Percentile, SweepReport};

pub const CSV_HEADER: [&str; 9] = ["axis", "axis_value", "trial", "estimator", "p50", "p75", "p95", "n_frames", "n_failures"];

/// CSV rows of several reports, in report order.
pub fn to_csv(reports: &[SweepReport]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in reports {
        for c in &r.cells {
            w.write_record([
                r.spec.axis.name().to_string(),
                c.axis_value.to_string(),
                c.trial.to_string(),
                c.estimator.name().to_string(),
                c.p50.to_string(),
                c.p75.to_string(),
                c.p95.to_string(),
                c.n_frames.to_string(),
                c.n_failures.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `<stem>.csv`, `<stem>.json` and one SVG per percentile.
pub fn write_report(report: &SweepReport, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    let csv = dir.join(format!("{stem}.csv"));
    write(&csv, &to_csv(std::slice::from_ref(report))?)?;
    paths.push(csv);
    let json = dir.join(format!("{stem}.json"));
    write(&json, serde_json::to_string_pretty(report).expect("report serializes").as_bytes())?;
    paths.push(json);
    for p in Percentile::ALL {
        let svg = dir.join(format!("{stem}_{}.svg", p.name()));
        write(&svg, trend_svg(report, p).as_bytes())?;
        paths.push(svg);
    }
    Ok(paths)
}

pub fn load_report(path: &Path) -> Result<SweepReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Line plot of per-value means with one-std whiskers for both estimators.
/// Values are spaced evenly, in sweep order, and labelled.
pub fn trend_svg(report: &SweepReport, p: Percentile) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 60.0;
    let values = report.axis_values();
    let n = values.len();
    let series: Vec<(EstimatorKind, Vec<f64>, Vec<f64>, &str)> = EstimatorKind::ALL
        .iter()
        .zip(["#1f77b4", "#d62728"])
        .map(|(&k, color)| (k, report.trend(k, p), report.trend_std(k, p), color))
        .collect();
    let top = series
        .iter()
        .flat_map(|(_, m, s, _)| m.iter().zip(s).map(|(a, b)| a + b))
        .fold(0.0f64, f64::max)
        .max(1e-9)
        * 1.1;
    let x = |i: usize| if n > 1 { M + (W - 2.0 * M) * i as f64 / (n - 1) as f64 } else { W / 2.0 };
    let y = |v: f64| H - M - (H - 2.0 * M) * v / top;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{} {} (deg), mean and std over trials</text>"#,
        W / 2.0,
        report.spec.axis.name(),
        p.name()
    );
    let _ = writeln!(s, r#"<line x1="{M}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, H - M, W - M, H - M);
    let _ = writeln!(s, r#"<line x1="{M}" y1="{M}" x2="{M}" y2="{}" stroke="black"/>"#, H - M);
    for k in 0..=4 {
        let v = top * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{:.2}</text>"#, M - 6.0, y(v) + 4.0, v);
    }
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, x(i), H - M + 18.0, v);
    }
    for (j, (kind, mean, std, color)) in series.iter().enumerate() {
        let pts: Vec<String> = mean.iter().enumerate().map(|(i, m)| format!("{:.1},{:.1}", x(i), y(*m))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, pts.join(" "));
        for (i, (m, sd)) in mean.iter().zip(std).enumerate() {
            let _ = writeln!(
                s,
                r#"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" stroke="{color}"/><circle cx="{0:.1}" cy="{3:.1}" r="3" fill="{color}"/>"#,
                x(i),
                y(m - sd),
                y(m + sd),
                y(*m)
            );
        }
        let ly = M + 16.0 * j as f64;
        let _ = writeln!(s, r#"<text x="{}" y="{ly}" fill="{color}">{}</text>"#, W - M - 80.0, kind.name());
    }
    s.push_str("</svg>\n");
    s
}
