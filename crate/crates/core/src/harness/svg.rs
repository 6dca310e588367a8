use std::fmt::Write as _;
use std::path::Path;

use crate::curve::ScoreCurve;
use crate::error::{Error, Result};
use crate::format::sig;
use crate::harness::select_count;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const Y_TICKS: usize = 5;

/// Line chart of a score curve with the selected K circled. Output depends
/// only on the curve.
pub fn render_curve_svg(curve: &ScoreCurve) -> String {
    let selected = select_count(curve).estimate;
    let finite: Vec<(usize, f64)> = curve.points().iter().copied().filter(|p| p.1.is_finite()).collect();
    let (mut lo, mut hi) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    if finite.is_empty() {
        (lo, hi) = (0.0, 1.0);
    } else if hi <= lo {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
        (lo, hi) = (lo - pad, hi + pad);
    }
    let k_max = curve.k_max();
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x_of = |k: usize| {
        if k_max == 1 {
            LEFT + plot_w / 2.0
        } else {
            LEFT + (k - 1) as f64 / (k_max - 1) as f64 * plot_w
        }
    };
    let y_of = |s: f64| TOP + (hi - s) / (hi - lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{} score, selected K={}</text>"#,
        WIDTH / 2.0,
        curve.method(),
        selected
    );
    // Axes
    let _ = writeln!(
        svg,
        r#"<path d="M{LEFT:.2},{TOP:.2} L{LEFT:.2},{:.2} L{:.2},{:.2}" fill="none" stroke="black" stroke-width="1"/>"#,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    let x_step = if k_max <= 25 { 1 } else { k_max.div_ceil(25) };
    for k in (1..=k_max).filter(|k| (k - 1) % x_step == 0) {
        let x = x_of(k);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{k}</text>"#,
            TOP + plot_h + 16.0
        );
    }
    for i in 0..Y_TICKS {
        let v = lo + (hi - lo) * i as f64 / (Y_TICKS - 1) as f64;
        let y = y_of(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT:.2}" y2="{y:.2}" stroke="black" stroke-width="1"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"##,
            LEFT - 4.0,
            LEFT - 6.0,
            y + 3.0,
            sig(v, 5)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">K</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );

    let vertices: Vec<String> = finite
        .iter()
        .map(|&(k, s)| format!("{:.2},{:.2}", x_of(k), y_of(s)))
        .collect();
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
        vertices.join(" ")
    );
    if let Some(s) = curve.score_at(selected).filter(|s| s.is_finite()) {
        let _ = writeln!(
            svg,
            r##"<circle cx="{:.2}" cy="{:.2}" r="5" fill="#d62728"/>"##,
            x_of(selected),
            y_of(s)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn emit_curve_svg(curve: &ScoreCurve, path: &Path) -> Result<()> {
    std::fs::write(path, render_curve_svg(curve)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Method;

    fn polyline_vertices(svg: &str) -> usize {
        let start = svg.find("<polyline points=\"").unwrap() + "<polyline points=\"".len();
        let end = start + svg[start..].find('"').unwrap();
        svg[start..end].split_whitespace().count()
    }

    #[test]
    fn single_point_curve_has_one_marker() {
        let c = ScoreCurve::new(Method::GmmAic, vec![(1, 42.0)]).unwrap();
        let svg = render_curve_svg(&c);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(polyline_vertices(&svg), 1);
    }

    #[test]
    fn polyline_has_a_vertex_per_k_and_is_deterministic() {
        let pts: Vec<(usize, f64)> = (1..=25).map(|k| (k, 1000.0 / k as f64 + k as f64)).collect();
        let c = ScoreCurve::new(Method::GmmAic, pts).unwrap();
        let svg = render_curve_svg(&c);
        assert_eq!(polyline_vertices(&svg), 25);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg, render_curve_svg(&c.clone()));
    }

    #[test]
    fn writes_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.svg");
        let c = ScoreCurve::new(Method::Kmeans, vec![(1, -3.0), (2, -1.0), (3, -0.5)]).unwrap();
        emit_curve_svg(&c, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), render_curve_svg(&c));
    }
}
