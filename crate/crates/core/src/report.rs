//! Static SVG line chart of a curve table.

use std::fmt::Write;

use crate::bounds::CurveTable;
use crate::rational::to_f64;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 56.0;

/// k on the horizontal axis, SPoA on the vertical axis, one polyline per
/// available series.
pub fn curve_svg(table: &CurveTable) -> String {
    let ks: Vec<f64> = table.rows.iter().map(|r| r.k as f64).collect();
    let sharing: Vec<f64> = table.rows.iter().map(|r| to_f64(&r.spoa)).collect();
    let design: Vec<Option<f64>> = table
        .rows
        .iter()
        .map(|r| r.design_spoa.as_ref().map(to_f64))
        .collect();
    let k_min = ks.iter().copied().fold(f64::INFINITY, f64::min).min(1.0);
    let k_max = ks.iter().copied().fold(1.0, f64::max).max(k_min + 1.0);
    let low = sharing
        .iter()
        .chain(design.iter().flatten())
        .copied()
        .fold(1.0, f64::min);
    let y_min = ((low * 10.0).floor() / 10.0).clamp(0.0, 0.9);
    let y_max = 1.0;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x = |k: f64| LEFT + (k - k_min) / (k_max - k_min) * plot_w;
    let y = |v: f64| TOP + (y_max - v) / (y_max - y_min) * plot_h;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<path d="M{:.1} {:.1} V{:.1} H{:.1}" fill="none" stroke="black"/>"#,
        LEFT,
        TOP,
        TOP + plot_h,
        LEFT + plot_w
    );

    let k_step = ((k_max - k_min) / 10.0).ceil().max(1.0);
    let mut k = k_min;
    while k <= k_max + 1e-9 {
        let px = x(k);
        let _ = writeln!(
            out,
            r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">{k}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 19.0
        );
        k += k_step;
    }
    let ticks = ((y_max - y_min) / 0.1).round() as usize;
    for t in 0..=ticks {
        let v = y_min + t as f64 * 0.1;
        let py = y(v);
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"##,
            LEFT,
            LEFT + plot_w,
            LEFT - 6.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">coalition size k</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(16 {:.1}) rotate(-90)" text-anchor="middle">k-strong price of anarchy</text>"#,
        TOP + plot_h / 2.0
    );

    let polyline = |points: Vec<(f64, f64)>, colour: &str, dash: &str| {
        let coords: Vec<String> = points
            .iter()
            .map(|&(k, v)| format!("{:.2},{:.2}", x(k), y(v)))
            .collect();
        format!(
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"{dash}/>"#,
            coords.join(" ")
        )
    };
    let _ = writeln!(
        out,
        "{}",
        polyline(
            ks.iter().copied().zip(sharing.iter().copied()).collect(),
            "#2a9d45",
            ""
        )
    );
    let design_points: Vec<(f64, f64)> = ks
        .iter()
        .zip(&design)
        .filter_map(|(&k, v)| v.map(|v| (k, v)))
        .collect();
    let mut legend = vec![("#2a9d45", "welfare sharing")];
    if !design_points.is_empty() {
        let _ = writeln!(
            out,
            "{}",
            polyline(design_points, "#1f5fbf", r#" stroke-dasharray="6 4""#)
        );
        legend.push(("#1f5fbf", "utility design bound"));
    }
    for (i, (colour, name)) in legend.iter().enumerate() {
        let ly = TOP + plot_h - 16.0 - 18.0 * (legend.len() - 1 - i) as f64;
        let lx = LEFT + plot_w - 190.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{name}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}
