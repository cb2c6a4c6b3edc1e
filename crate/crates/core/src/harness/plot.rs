//! Self-contained SVG line charts of summary CSVs.
//!
//! Alongside `out.svg` a companion `out.csv` lists every plotted point
//! (`series_name,slot,value`) so the figure can be audited.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::output::{csv_writer, fmt_f64, Metric, RATIO_HEADER, RSS_HEADER};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 210.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const COLORS: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub slots: Vec<u64>,
    pub values: Vec<f64>,
}

/// Reads the series of one summary CSV.
pub fn read_summary(path: &Path) -> Result<(Metric, Vec<Series>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| Error::Plot(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let metric = if header == RATIO_HEADER {
        Metric::Ratio
    } else if header == RSS_HEADER {
        Metric::Rss
    } else {
        return Err(Error::Plot(format!(
            "{}: not a summary file (header {header:?})",
            path.display()
        )));
    };
    // Keep first-seen order of series.
    let mut order: Vec<String> = Vec::new();
    let mut by_name: BTreeMap<String, Series> = BTreeMap::new();
    for row in rdr.records() {
        let row = row?;
        let bad = |what: &str| Error::Plot(format!("{}: bad {what} in row {:?}", path.display(), row));
        let slot: u64 = row[0].parse().map_err(|_| bad("slot"))?;
        let mean: f64 = row[1].parse().map_err(|_| bad("mean"))?;
        let name = row[3].to_string();
        let s = by_name.entry(name.clone()).or_insert_with(|| {
            order.push(name.clone());
            Series {
                name,
                slots: Vec::new(),
                values: Vec::new(),
            }
        });
        s.slots.push(slot);
        s.values.push(mean);
    }
    let series = order.into_iter().map(|n| by_name.remove(&n).expect("inserted above")).collect();
    Ok((metric, series))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Draws `series` as an SVG document. Ratio plots span `y = [0, 1.05]`;
/// RSS plots span `[0, 1.05 * max]`. `x` spans `[0, last slot]`.
pub fn render_svg(series: &[Series], metric: Metric, title: Option<&str>) -> String {
    let x_max = series.iter().flat_map(|s| s.slots.last()).copied().max().unwrap_or(1).max(1) as f64;
    let y_max = match metric {
        Metric::Ratio => 1.05,
        Metric::Rss => {
            let m = series.iter().flat_map(|s| s.values.iter().copied()).fold(0.0, f64::max);
            if m > 0.0 {
                1.05 * m
            } else {
                1.0
            }
        }
    };
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + pw * x / x_max;
    let py = |y: f64| TOP + ph * (1.0 - y / y_max);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(t) = title {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(t)
        );
    }
    // Grid and ticks.
    for k in 0..=5 {
        let xv = x_max * k as f64 / 5.0;
        let yv = y_max * k as f64 / 5.0;
        let (x, y) = (px(xv), py(yv));
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 18.0,
            xv.round()
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{:.3}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0,
            yv
        );
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let ylabel = match metric {
        Metric::Ratio => "beamforming gain ratio",
        Metric::Rss => "RSS",
    };
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">transmission slot</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{ylabel}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut points = String::new();
        for (slot, v) in s.slots.iter().zip(&s.values) {
            let _ = write!(points, "{:.2},{:.2} ", px(*slot as f64), py(v.clamp(0.0, y_max)));
        }
        let dash = if s.name.ends_with(super::output::RSS_MAX_SUFFIX) {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            points.trim_end()
        );
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Path of the companion CSV of `out`.
pub fn companion_path(out: &Path) -> PathBuf {
    out.with_extension("csv")
}

/// Reads every summary and writes one SVG with a polyline per series, plus
/// the companion CSV. All series must share the same slot axis.
pub fn emit_plot(summaries: &[PathBuf], out: &Path, title: Option<&str>) -> Result<()> {
    if summaries.is_empty() {
        return Err(Error::Plot("no summary files given".into()));
    }
    let mut metric = None;
    let mut all: Vec<Series> = Vec::new();
    for path in summaries {
        let (m, series) = read_summary(path)?;
        if series.is_empty() || series.iter().any(|s| s.slots.is_empty()) {
            return Err(Error::Plot(format!("{}: empty summary", path.display())));
        }
        if metric.is_some_and(|prev| prev != m) {
            return Err(Error::Plot("cannot mix ratio and RSS summaries in one plot".into()));
        }
        metric = Some(m);
        all.extend(series);
    }
    let axis = &all[0].slots;
    if let Some(bad) = all.iter().find(|s| &s.slots != axis) {
        return Err(Error::Plot(format!(
            "series `{}` does not share the slot axis of `{}`",
            bad.name, all[0].name
        )));
    }
    let svg = render_svg(&all, metric.expect("at least one summary"), title);
    fs::write(out, svg).map_err(|e| Error::io(out, e))?;
    let companion = companion_path(out);
    let mut w = csv_writer(&companion)?;
    w.write_record(["series_name", "slot", "value"])?;
    for s in &all {
        for (slot, v) in s.slots.iter().zip(&s.values) {
            w.write_record([s.name.clone(), slot.to_string(), fmt_f64(*v)])?;
        }
    }
    w.flush().map_err(|e| Error::io(&companion, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn two_series_two_polylines() {
        let d = tempfile::tempdir().unwrap();
        let a = write(d.path(), "a.csv", "slot,mean,std,series_name\n1,0.5,0,A\n2,0.7,0,A\n");
        let b = write(d.path(), "b.csv", "slot,mean,std,series_name\n1,0.2,0,B\n2,0.9,0,B\n");
        let out = d.path().join("p.svg");
        emit_plot(&[a, b], &out, Some("t")).unwrap();
        let svg = fs::read_to_string(&out).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">A</text>") && svg.contains(">B</text>"));
        let pts = fs::read_to_string(d.path().join("p.csv")).unwrap();
        assert_eq!(pts, "series_name,slot,value\nA,1,0.5\nA,2,0.7\nB,1,0.2\nB,2,0.9\n");
    }

    #[test]
    fn ratio_axis_defaults() {
        let s = Series {
            name: "x".into(),
            slots: vec![1, 1000],
            values: vec![1.0, 1.05],
        };
        let svg = render_svg(&[s], Metric::Ratio, None);
        // top tick is 1.05, rightmost tick is the budget
        assert!(svg.contains(">1.050</text>"));
        assert!(svg.contains(">1000</text>"));
        // y = 1.05 sits on the top edge of the plot area
        assert!(svg.contains(&format!("{:.2},{:.2}", LEFT + (WIDTH - LEFT - RIGHT), TOP)));
    }

    #[test]
    fn empty_summary_is_an_error_and_writes_nothing() {
        let d = tempfile::tempdir().unwrap();
        let a = write(d.path(), "a.csv", "slot,mean,std,series_name\n");
        let out = d.path().join("p.svg");
        assert!(emit_plot(&[a], &out, None).is_err());
        assert!(!out.exists());
        assert!(emit_plot(&[], &out, None).is_err());
    }

    #[test]
    fn mismatched_axes_rejected() {
        let d = tempfile::tempdir().unwrap();
        let a = write(d.path(), "a.csv", "slot,mean,std,series_name\n1,0.5,0,A\n2,0.7,0,A\n");
        let b = write(d.path(), "b.csv", "slot,mean,std,series_name\n1,0.2,0,B\n");
        assert!(emit_plot(&[a, b], &d.path().join("p.svg"), None).is_err());
    }
}
