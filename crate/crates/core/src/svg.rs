//! Static SVG line chart of capacity curves.

use std::fmt::Write;

use crate::model::ChannelModel;
use crate::series::CurveRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const TICKS: usize = 5;

fn color(model: ChannelModel) -> &'static str {
    match model {
        ChannelModel::Simple => "#1f77b4",
        ChannelModel::Gallager => "#d62728",
    }
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// One polyline per model, alpha on the x-axis.
pub fn curve_svg(rows: &[CurveRow]) -> String {
    let (mut x_lo, mut x_hi) = (0.0f64, f64::MIN);
    let (mut y_lo, mut y_hi) = (f64::MAX, f64::MIN);
    for r in rows {
        x_hi = x_hi.max(r.alpha);
        y_lo = y_lo.min(r.capacity_approx);
        y_hi = y_hi.max(r.capacity_approx);
    }
    if rows.is_empty() {
        (x_hi, y_lo, y_hi) = (1.0, 0.0, 1.0);
    }
    y_lo = y_lo.min(1.0);
    y_hi = y_hi.max(1.0);
    if x_hi <= x_lo {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    let pad = 0.05 * (y_hi - y_lo).max(1e-9);
    y_lo -= pad;
    y_hi += pad;
    let px = |x: f64| MARGIN + (x - x_lo) / (x_hi - x_lo) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{left} {top} V{bottom} H{right}" fill="none" stroke="black"/>"#
    );
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let xv = x_lo + f * (x_hi - x_lo);
        let yv = y_lo + f * (y_hi - y_lo);
        let (tx, ty) = (px(xv), py(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{tx:.2}" y1="{bottom}" x2="{tx:.2}" y2="{:.2}" stroke="black"/><text x="{tx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 5.0,
            bottom + 20.0,
            tick_label(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ty:.2}" x2="{left}" y2="{ty:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 5.0,
            left - 8.0,
            ty + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">alpha</text>"#,
        (left + right) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">capacity (bits per input bit)</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0
    );

    for (k, model) in ChannelModel::ALL.iter().enumerate() {
        let pts: Vec<String> = std::iter::once((0.0, 1.0))
            .chain(rows.iter().filter(|r| r.model == *model).map(|r| (r.alpha, r.capacity_approx)))
            .map(|(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        if pts.len() < 2 {
            continue;
        }
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            pts.join(" "),
            color(*model)
        );
        let ly = top + 15.0 + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            right - 110.0,
            right - 85.0,
            color(*model),
            right - 78.0,
            ly + 4.0,
            model
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::curve;

    #[test]
    fn one_polyline_per_model() {
        let rows = curve(&ChannelModel::ALL, &[0.05, 0.1, 0.25]).unwrap();
        let svg = curve_svg(&rows);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        let only = curve(&[ChannelModel::Gallager], &[0.1]).unwrap();
        assert_eq!(curve_svg(&only).matches("<polyline").count(), 1);
    }

    #[test]
    fn empty_input_is_still_a_document() {
        let svg = curve_svg(&[]);
        assert!(svg.contains("</svg>"));
        assert!(!svg.contains("NaN"));
    }
}
