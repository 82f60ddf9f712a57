//! Bare-bones SVG: axes with end labels, polylines, and heat-map cells.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(s: &mut String, title: &str, x_label: &str, y_label: &str, xr: (f64, f64), yr: (f64, f64)) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let (x0, y0, x1, y1) = (MARGIN, H - MARGIN, W - MARGIN / 2.0, MARGIN / 2.0);
    let _ = writeln!(s, r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{x0}" y="{}" text-anchor="middle">{:.4}</text>"#, y0 + 16.0, xr.0);
    let _ = writeln!(s, r#"<text x="{x1}" y="{}" text-anchor="middle">{:.4}</text>"#, y0 + 16.0, xr.1);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.4}</text>"#, x0 - 4.0, y0, yr.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.4}</text>"#, x0 - 4.0, y1 + 10.0, yr.1);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn map(v: f64, range: (f64, f64), lo: f64, hi: f64) -> f64 {
    lo + (v - range.0) / (range.1 - range.0) * (hi - lo)
}

pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let xr = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let yr = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let mut s = String::new();
    frame(&mut s, title, x_label, y_label, xr, yr);
    let many = series.len() > PALETTE.len();
    for (k, ser) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| {
                format!(
                    "{:.2},{:.2}",
                    map(x, xr, MARGIN, W - MARGIN / 2.0),
                    map(y, yr, H - MARGIN, MARGIN / 2.0)
                )
            })
            .collect();
        let opacity = if many { 0.3 } else { 1.0 };
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-opacity="{opacity}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        if !many {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" fill="{colour}">{}</text>"#,
                W - MARGIN / 2.0 - 140.0,
                MARGIN / 2.0 + 14.0 * (k as f64 + 1.0),
                escape(&ser.label)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// `values[i][j]` at `(xs[i], ys[j])`, blue (low) to red (high).
pub fn heatmap(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64], values: &[Vec<f64>]) -> String {
    let xr = bounds(xs.iter().copied());
    let yr = bounds(ys.iter().copied());
    let vr = bounds(values.iter().flatten().copied());
    let mut s = String::new();
    frame(&mut s, title, x_label, y_label, xr, yr);
    let cw = (W - 1.5 * MARGIN) / xs.len().max(1) as f64;
    let ch = (H - 1.5 * MARGIN) / ys.len().max(1) as f64;
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                continue;
            }
            let t = (v - vr.0) / (vr.1 - vr.0);
            let (r, b) = ((255.0 * t) as u8, (255.0 * (1.0 - t)) as u8);
            let x = MARGIN + i as f64 * cw;
            let y = H - MARGIN - (j as f64 + 1.0) * ch;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="rgb({r},64,{b})"/>"#,
                cw + 0.5,
                ch + 0.5
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">colour range [{:.3}, {:.3}]</text>"#,
        W - MARGIN / 2.0,
        MARGIN / 2.0 + 12.0,
        vr.0,
        vr.1
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documents_are_closed_and_escaped() {
        let line = line_plot(
            "a < b",
            "x",
            "y",
            &[Series { label: "s".into(), points: vec![(0.0, 1.0), (1.0, f64::NAN), (2.0, 3.0)] }],
        );
        assert!(line.starts_with("<svg") && line.trim_end().ends_with("</svg>"));
        assert!(line.contains("a &lt; b"));
        assert_eq!(line.matches("<polyline").count(), 1);
        let heat = heatmap("h", "x", "y", &[0.0, 1.0], &[0.0, 1.0, 2.0], &[vec![0.0, 1.0, 2.0], vec![3.0, 4.0, 5.0]]);
        assert_eq!(heat.matches("<rect").count(), 1 + 6);
    }
}
