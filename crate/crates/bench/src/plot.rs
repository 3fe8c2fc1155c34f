//! Mean test metric against B, one line per delta, with a ±std band.

use std::fmt::Write as _;
use std::path::Path;

use crate::report::{summarize_by_delta, SummaryRow};
use crate::runner::ResultRow;
use crate::BenchError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

/// One plotted line: summaries sharing dataset, learner and delta.
struct Series {
    label: String,
    points: Vec<SummaryRow>,
}

fn series(rows: &[ResultRow]) -> Vec<Series> {
    let summary = summarize_by_delta(rows);
    let many_learners = summary
        .iter()
        .any(|s| (&s.dataset, &s.learner) != (&summary[0].dataset, &summary[0].learner));
    let mut out: Vec<Series> = Vec::new();
    for s in summary {
        let delta = s.delta.expect("per-delta summary");
        let label = if many_learners {
            format!("{} {} δ={delta}", s.dataset, s.learner)
        } else {
            format!("δ={delta}")
        };
        match out.last_mut() {
            Some(last) if last.label == label => last.points.push(s),
            _ => out.push(Series {
                label,
                points: vec![s],
            }),
        }
    }
    out
}

/// Render the chart as an SVG string.
pub fn render_svg(rows: &[ResultRow]) -> Result<String, BenchError> {
    if rows.is_empty() {
        return Err(BenchError::Config("cannot plot an empty result set".into()));
    }
    let series = series(rows);
    let metric = rows[0].metric_kind.name();
    let title = {
        let first = &series[0].points[0];
        if series.iter().all(|s| s.points[0].learner == first.learner) {
            format!("{} / {}", first.dataset, first.learner)
        } else {
            first.dataset.clone()
        }
    };

    let all = series.iter().flat_map(|s| &s.points);
    let (mut b_min, mut b_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in all {
        b_min = b_min.min(p.b as f64);
        b_max = b_max.max(p.b as f64);
        y_min = y_min.min(p.test.mean - p.test.std);
        y_max = y_max.max(p.test.mean + p.test.std);
    }
    if b_max == b_min {
        b_min -= 1.0;
        b_max += 1.0;
    }
    let pad = ((y_max - y_min) * 0.08).max(1e-3);
    y_min -= pad;
    y_max += pad;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |b: f64| LEFT + (b - b_min) / (b_max - b_min) * plot_w;
    let sy = |y: f64| TOP + (y_max - y) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    let w = &mut svg;
    // Writing into a String cannot fail.
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        w,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(&title)
    );

    // Axes, ticks and grid.
    let (x0, x1, y0, y1) = (LEFT, LEFT + plot_w, TOP + plot_h, TOP);
    let _ = writeln!(
        w,
        r#"<path d="M{x0:.2},{y1:.2} V{y0:.2} H{x1:.2}" fill="none" stroke="black"/>"#
    );
    let mut bs: Vec<usize> = rows.iter().map(|r| r.b).collect();
    bs.sort_unstable();
    bs.dedup();
    for b in bs {
        let x = sx(b as f64);
        let _ = writeln!(
            w,
            r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{b}</text>"#,
            y0 + 5.0,
            y0 + 20.0
        );
    }
    for i in 0..=5 {
        let v = y_min + (y_max - y_min) * i as f64 / 5.0;
        let y = sy(v);
        let _ = writeln!(
            w,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0,
            tick_label(v, y_max - y_min)
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">B (ensemble size)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        w,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">test {metric} (mean ± std)</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let upper = s
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.b as f64), sy(p.test.mean + p.test.std)));
        let lower = s
            .points
            .iter()
            .rev()
            .map(|p| format!("{:.2},{:.2}", sx(p.b as f64), sy(p.test.mean - p.test.std)));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(
            w,
            r#"<polygon class="band" points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
            band.join(" ")
        );
        let line: Vec<String> = s
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.b as f64), sy(p.test.mean)))
            .collect();
        let _ = writeln!(
            w,
            r#"<polyline class="series" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = x1 + 15.0;
        let _ = writeln!(
            w,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

pub fn emit_plot(rows: &[ResultRow], path: &Path) -> Result<(), BenchError> {
    let svg = render_svg(rows)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    }
    std::fs::write(path, svg).map_err(|e| BenchError::io(path, e))
}

fn tick_label(v: f64, span: f64) -> String {
    let decimals = if span >= 10.0 {
        1
    } else if span >= 0.1 {
        2
    } else {
        3
    };
    format!("{v:.decimals$}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
