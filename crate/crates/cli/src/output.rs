//! CSV and SVG writers.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::SCHEMA_VERSION;
use crate::experiment::Aggregate;

/// Writes `rows` as CSV preceded by a `# schema=... config_hash=...` line.
pub fn write_csv<T: Serialize>(path: &Path, config_hash: &str, rows: &[T]) -> io::Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "# schema={SCHEMA_VERSION} config_hash={config_hash}")?;
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row).map_err(io::Error::other)?;
    }
    w.flush()
}

/// Mean `R_T / sqrt(T)` against `T` with one-standard-deviation bars.
pub fn regret_svg(aggregates: &[Aggregate], title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 20.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 50.0;

    let x_max = aggregates.iter().map(|a| a.t as f64).fold(1.0, f64::max) * 1.05;
    let y_max = aggregates
        .iter()
        .map(|a| a.mean_normalized + a.std_normalized)
        .fold(1e-9, f64::max)
        * 1.1;
    let sx = |t: f64| LEFT + t / x_max * (W - LEFT - RIGHT);
    let sy = |y: f64| H - BOTTOM - y / y_max * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{title}</text>"#, W / 2.0);
    let (x0, y0) = (sx(0.0), sy(0.0));
    let _ = writeln!(
        s,
        r#"<path d="M{x0:.1} {:.1} V{y0:.1} H{:.1}" fill="none" stroke="black"/>"#,
        TOP,
        W - RIGHT
    );
    for i in 0..=5 {
        let t = x_max * i as f64 / 5.0;
        let y = y_max * i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" stroke="black"/><text x="{0:.1}" y="{3:.1}" text-anchor="middle">{4:.0}</text>"#,
            sx(t),
            y0,
            y0 + 5.0,
            y0 + 20.0,
            t
        );
        let _ = writeln!(
            s,
            r#"<line x1="{0:.1}" y1="{1:.1}" x2="{2:.1}" y2="{1:.1}" stroke="black"/><text x="{3:.1}" y="{4:.1}" text-anchor="end">{5:.2}</text>"#,
            x0 - 5.0,
            sy(y),
            x0,
            x0 - 8.0,
            sy(y) + 4.0,
            y
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">T</text>"#, (LEFT + W - RIGHT) / 2.0, H - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">mean R_T / sqrt(T)</text>"#,
        (TOP + H - BOTTOM) / 2.0
    );
    let points: Vec<String> = aggregates
        .iter()
        .map(|a| format!("{:.1},{:.1}", sx(a.t as f64), sy(a.mean_normalized)))
        .collect();
    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, points.join(" "));
    for a in aggregates {
        let (x, y) = (sx(a.t as f64), sy(a.mean_normalized));
        let (lo, hi) = (sy((a.mean_normalized - a.std_normalized).max(0.0)), sy(a.mean_normalized + a.std_normalized));
        let _ = writeln!(
            s,
            r#"<path d="M{x:.1} {lo:.1} V{hi:.1} M{:.1} {lo:.1} H{:.1} M{:.1} {hi:.1} H{:.1}" stroke="steelblue"/><circle cx="{x:.1}" cy="{y:.1}" r="3.5" fill="steelblue"/>"#,
            x - 4.0,
            x + 4.0,
            x - 4.0,
            x + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agg(t: u64, m: f64) -> Aggregate {
        Aggregate {
            t,
            runs: 1,
            mean_cumulative: m * (t as f64).sqrt(),
            std_cumulative: 0.0,
            mean_normalized: m,
            std_normalized: 0.1,
            mean_simple: 0.0,
            std_simple: 0.0,
            mean_simple_times_sqrt_t: 0.0,
            truncated_runs: 0,
        }
    }

    #[test]
    fn svg_has_one_marker_per_budget() {
        let s = regret_svg(&[agg(100, 1.0), agg(200, 1.2), agg(400, 1.1)], "test");
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert_eq!(s.matches("<circle").count(), 3);
        assert_eq!(s, regret_svg(&[agg(100, 1.0), agg(200, 1.2), agg(400, 1.1)], "test"));
    }

    #[test]
    fn csv_header_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_csv(&p, "abc", &[agg(10, 1.0)]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# schema=1 config_hash=abc"));
        assert!(lines.next().unwrap().starts_with("T,runs,mean_R_T,std_R_T,"));
    }
}
