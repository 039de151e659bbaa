use std::fmt::Write as _;
use std::path::Path;

use super::SweepRow;
use crate::error::{invalid, Result};
use crate::sync::Solver;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

struct Series {
    solver: Solver,
    group: usize,
    /// `(x, mean, std)` sorted by `x`.
    points: Vec<(f64, f64, f64)>,
}

/// One polyline per (solver, group) with a shaded ±1 std band; a series with a
/// single grid point is drawn as a marker without band. Output is a pure
/// function of `rows`.
pub fn render_svg(rows: &[SweepRow]) -> Result<String> {
    let Some(first) = rows.first() else {
        return invalid("no rows to plot");
    };
    if rows.iter().any(|r| r.mode != first.mode) {
        return invalid("rows mix several modes");
    }
    let by_eta = first.gamma.is_some();
    let x_of = |r: &SweepRow| if by_eta { r.eta } else { r.lambda };

    let mut series: Vec<Series> = Vec::new();
    for r in rows {
        let pos = series
            .iter()
            .position(|s| s.solver == r.solver && s.group == r.group);
        let s = match pos {
            Some(i) => &mut series[i],
            None => {
                series.push(Series {
                    solver: r.solver,
                    group: r.group,
                    points: Vec::new(),
                });
                series.last_mut().expect("just pushed")
            }
        };
        s.points.push((x_of(r), r.mean_corr, r.std_corr));
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let (mut x0, mut x1) = rows
        .iter()
        .map(x_of)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
            (lo.min(x), hi.max(x))
        });
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let y0 = rows
        .iter()
        .map(|r| r.mean_corr - r.std_corr)
        .fold(0.0, f64::min);
    let y1 = rows
        .iter()
        .map(|r| r.mean_corr + r.std_corr)
        .fold(1.0, f64::max);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * plot_h;

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        w,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let (ax, ay, bx) = (LEFT, TOP + plot_h, LEFT + plot_w);
    let _ = writeln!(
        w,
        r#"<path d="M{ax:.2},{TOP:.2} L{ax:.2},{ay:.2} L{bx:.2},{ay:.2}" fill="none" stroke="black"/>"#
    );
    for t in 0..=4 {
        let f = t as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            w,
            r#"<line x1="{px:.2}" y1="{ay:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{xv:.2}</text>"#,
            ay + 5.0,
            ay + 20.0
        );
        let _ = writeln!(
            w,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{ax:.2}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.2}</text>"#,
            ax - 5.0,
            ax - 8.0,
            py + 4.0
        );
    }
    let x_label = if by_eta {
        "η (outlier probability)"
    } else {
        "λ (edge probability)"
    };
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        w,
        r#"<text transform="translate(18,{:.2}) rotate(-90)" text-anchor="middle">mean correlation (band: ±1 std)</text>"#,
        TOP + plot_h / 2.0
    );

    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let label = format!("{} group {}", s.solver, s.group);
        let _ = writeln!(w, r#"<g class="series" data-label="{label}">"#);
        if let [(x, m, _)] = s.points[..] {
            let _ = writeln!(
                w,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}"/>"#,
                sx(x),
                sy(m)
            );
        } else {
            let mut band = String::new();
            for &(x, m, sd) in &s.points {
                let _ = write!(band, "{:.2},{:.2} ", sx(x), sy(m + sd));
            }
            for &(x, m, sd) in s.points.iter().rev() {
                let _ = write!(band, "{:.2},{:.2} ", sx(x), sy(m - sd));
            }
            let _ = writeln!(
                w,
                r#"<polygon points="{}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#,
                band.trim_end()
            );
            let line: Vec<String> = s
                .points
                .iter()
                .map(|&(x, m, _)| format!("{:.2},{:.2}", sx(x), sy(m)))
                .collect();
            let _ = writeln!(
                w,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                line.join(" ")
            );
        }
        let ly = TOP + 10.0 + 18.0 * si as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(
            w,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{label}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0
        );
        let _ = writeln!(w, "</g>");
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

pub fn emit_plot(rows: &[SweepRow], path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(rows)?)?;
    Ok(())
}
