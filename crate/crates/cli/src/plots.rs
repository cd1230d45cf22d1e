//! Standalone SVG line plots of trace columns against `step`.

use std::fmt::Write;

use crate::engines::Series;

const WIDTH: f64 = 720.0;
const PANEL: f64 = 150.0;
const MARGIN_L: f64 = 90.0;
const MARGIN_R: f64 = 20.0;
const GAP: f64 = 40.0;

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One stacked panel per non-step column; non-finite points break the line.
pub fn render_svg(title: &str, series: &Series) -> String {
    let panels = series.columns.len().saturating_sub(1);
    let height = GAP + panels as f64 * (PANEL + GAP);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{MARGIN_L}" y="20" font-size="14">{}</text>"#, escape(title));

    let xs: Vec<f64> = series.rows.iter().map(|r| r[0]).collect();
    let (x_lo, x_hi) = range(xs.iter().copied());
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;

    for (p, name) in series.columns.iter().enumerate().skip(1) {
        let top = GAP + (p - 1) as f64 * (PANEL + GAP);
        let ys: Vec<f64> = series.rows.iter().map(|r| r[p]).collect();
        let (y_lo, y_hi) = range(ys.iter().copied());
        let _ = writeln!(
            out,
            r##"<rect x="{MARGIN_L}" y="{top}" width="{plot_w}" height="{PANEL}" fill="none" stroke="#888"/>"##
        );
        let _ = writeln!(out, r#"<text x="{MARGIN_L}" y="{}">{}</text>"#, top - 6.0, escape(name));
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, MARGIN_L - 6.0, top + 10.0, fmt_num(y_hi));
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, MARGIN_L - 6.0, top + PANEL, fmt_num(y_lo));
        let _ = writeln!(out, r#"<text x="{MARGIN_L}" y="{}">{}</text>"#, top + PANEL + 14.0, fmt_num(x_lo));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            MARGIN_L + plot_w,
            top + PANEL + 14.0,
            fmt_num(x_hi)
        );

        let mut segment: Vec<String> = Vec::new();
        let flush = |segment: &mut Vec<String>, out: &mut String| {
            if segment.len() > 1 {
                let _ = writeln!(
                    out,
                    r##"<polyline fill="none" stroke="#1f5fa8" stroke-width="1.2" points="{}"/>"##,
                    segment.join(" ")
                );
            }
            segment.clear();
        };
        for (x, y) in xs.iter().zip(&ys) {
            if !(x.is_finite() && y.is_finite()) {
                flush(&mut segment, &mut out);
                continue;
            }
            let px = MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w;
            let py = top + PANEL - (y - y_lo) / (y_hi - y_lo) * PANEL;
            segment.push(format!("{px:.2},{py:.2}"));
        }
        flush(&mut segment, &mut out);
    }
    out.push_str("</svg>\n");
    out
}

/// Finite min and max, widened when degenerate.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}
