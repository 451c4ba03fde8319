//! Minimal SVG scatter and line charts.

use std::fmt::Write;

use kq_core::NodeSet;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const PANEL: f64 = 360.0;
const PAD: f64 = 40.0;

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One unit-square panel with its top-left corner at `(x0, y0)`.
fn scatter_panel(out: &mut String, nodes: &NodeSet, (a, b): (usize, usize), x0: f64, y0: f64) {
    let _ = writeln!(
        out,
        r##"<rect x="{x0}" y="{y0}" width="{PANEL}" height="{PANEL}" fill="none" stroke="#444"/>"##
    );
    for p in nodes.iter() {
        let cx = x0 + p[a] * PANEL;
        let cy = y0 + (1.0 - p[b]) * PANEL;
        let _ = writeln!(
            out,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3" fill="{}"/>"#,
            PALETTE[0]
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">x{} vs x{}</text>"#,
        x0 + PANEL / 2.0,
        y0 + PANEL + 20.0,
        a + 1,
        b + 1
    );
}

/// Scatter of the nodes on the unit square. In 3-D (and higher) the first
/// three coordinates are drawn as three orthographic projections.
pub fn scatter(nodes: &NodeSet) -> String {
    let pairs: Vec<(usize, usize)> = match nodes.dim() {
        1 => vec![(0, 0)],
        2 => vec![(0, 1)],
        _ => vec![(0, 1), (0, 2), (1, 2)],
    };
    let width = pairs.len() as f64 * (PANEL + PAD) + PAD;
    let height = PANEL + 2.0 * PAD;
    let mut out = String::new();
    header(&mut out, width, height);
    for (k, &pair) in pairs.iter().enumerate() {
        scatter_panel(&mut out, nodes, pair, PAD + k as f64 * (PANEL + PAD), PAD / 2.0);
    }
    out.push_str("</svg>\n");
    out
}

/// One named curve of a line chart.
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Line chart with a linear horizontal axis and a base-10 log vertical axis.
/// Non-positive values are dropped.
pub fn log_line_chart(series: &[Series], x_label: &str, y_label: &str) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (80.0, 180.0, 20.0, 50.0);
    let pts = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|p| p.1 > 0.0 && p.1.is_finite());
    let (mut x_lo, mut x_hi, mut d_lo, mut d_hi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        d_lo = d_lo.min(y.log10().floor());
        d_hi = d_hi.max(y.log10().ceil());
    }
    if !x_lo.is_finite() {
        (x_lo, x_hi, d_lo, d_hi) = (0.0, 1.0, 0.0, 1.0);
    }
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    if d_hi <= d_lo {
        d_hi = d_lo + 1.0;
    }
    let plot_w = w - left - right;
    let plot_h = h - top - bottom;
    let sx = |x: f64| left + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| top + (d_hi - y.log10()) / (d_hi - d_lo) * plot_h;

    let mut out = String::new();
    header(&mut out, w, h);
    let _ = writeln!(
        out,
        r##"<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>"##
    );
    let mut decade = d_lo as i32;
    while decade as f64 <= d_hi {
        let y = sy(10f64.powi(decade));
        let _ = writeln!(
            out,
            r##"<line x1="{left}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">1e{decade}</text>"##,
            left + plot_w,
            left - 6.0,
            y + 4.0
        );
        decade += 1;
    }
    let mut xs: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for x in xs {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{x}</text>"#,
            sx(x),
            top + plot_h + 18.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        left + plot_w / 2.0,
        h - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0,
        escape(y_label)
    );
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.1 > 0.0 && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            coords.join(" ")
        );
        for c in &coords {
            let (cx, cy) = c.split_once(',').expect("formatted pair");
            let _ = writeln!(out, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
        }
        let ly = top + 16.0 + 18.0 * k as f64;
        let lx = left + plot_w + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}
