//! Self-contained SVG rendering of a KL summary: one line per method on a
//! log-scaled y axis, with a shaded band where confidence intervals exist.
//! Coordinates are emitted at fixed precision so identical summaries
//! render byte-identical files.

use std::fmt::Write as _;

use crate::experiment::Method;
use crate::summary::SummaryRow;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;

/// Values at or below this are clamped before taking logs.
const KL_FLOOR: f64 = 1e-12;

fn color(method: Method) -> &'static str {
    match method {
        Method::Mcmc => "#1f77b4",
        Method::Opad => "#d62728",
        Method::OpadPlus => "#2ca02c",
    }
}

fn log10_clamped(v: f64) -> f64 {
    v.max(KL_FLOOR).log10()
}

struct Axes {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Axes {
    fn x(&self, iteration: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(1.0);
        MARGIN_LEFT + (iteration - self.x_min) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, kl: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(1e-9);
        let frac = (log10_clamped(kl) - self.y_min) / span;
        HEIGHT - MARGIN_BOTTOM - frac * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn point(axes: &Axes, iteration: usize, kl: f64) -> String {
    format!("{:.2},{:.2}", axes.x(iteration as f64), axes.y(kl))
}

/// Renders summary rows to an SVG document string.
pub fn render_svg(rows: &[SummaryRow]) -> String {
    let x_min = rows.iter().map(|r| r.iteration).min().unwrap_or(1) as f64;
    let x_max = rows.iter().map(|r| r.iteration).max().unwrap_or(1) as f64;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for r in rows {
        for v in [Some(r.mean), r.lo, r.hi].into_iter().flatten() {
            let lv = log10_clamped(v);
            y_min = y_min.min(lv);
            y_max = y_max.max(lv);
        }
    }
    if !y_min.is_finite() {
        y_min = -1.0;
        y_max = 1.0;
    }
    if (y_max - y_min).abs() < 1e-9 {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let axes = Axes { x_min, x_max, y_min, y_max };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");

    // axes box
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#333333\"/>",
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    );

    // y grid lines and labels at integer powers of ten
    let lo_tick = y_min.ceil() as i64;
    let hi_tick = y_max.floor() as i64;
    for tick in lo_tick..=hi_tick {
        let y = axes.y(10f64.powi(tick as i32));
        let _ = writeln!(
            svg,
            "<line x1=\"{MARGIN_LEFT}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#dddddd\"/>",
            WIDTH - MARGIN_RIGHT
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\" fill=\"#333333\">1e{tick}</text>",
            MARGIN_LEFT - 6.0,
            y + 4.0
        );
    }

    // x labels at the ends
    for (it, anchor) in [(x_min, "start"), (x_max, "end")] {
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"{anchor}\" fill=\"#333333\">{}</text>",
            axes.x(it),
            HEIGHT - MARGIN_BOTTOM + 18.0,
            it as usize
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" fill=\"#333333\">iteration</text>",
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" fill=\"#333333\" transform=\"rotate(-90 16 {:.2})\">KL divergence</text>",
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0
    );

    for method in Method::ALL {
        let mut series: Vec<&SummaryRow> =
            rows.iter().filter(|r| r.method == method).collect();
        series.sort_by_key(|r| r.iteration);
        if series.is_empty() {
            continue;
        }
        // confidence band: upper bound forward, lower bound back
        if series.iter().all(|r| r.lo.is_some() && r.hi.is_some()) {
            let mut band = String::new();
            for r in &series {
                let _ = write!(band, "{} ", point(&axes, r.iteration, r.hi.unwrap()));
            }
            for r in series.iter().rev() {
                let _ = write!(band, "{} ", point(&axes, r.iteration, r.lo.unwrap()));
            }
            let _ = writeln!(
                svg,
                "<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.15\" stroke=\"none\"/>",
                band.trim_end(),
                color(method)
            );
        }
        let line: Vec<String> =
            series.iter().map(|r| point(&axes, r.iteration, r.mean)).collect();
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"/>",
            line.join(" "),
            color(method)
        );
    }

    // legend
    for (i, method) in Method::ALL.into_iter().enumerate() {
        let y = MARGIN_TOP + 16.0 + 18.0 * i as f64;
        let x = WIDTH - MARGIN_RIGHT - 110.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{}\" stroke-width=\"1.8\"/>",
            x + 24.0,
            color(method)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"#333333\">{}</text>",
            x + 30.0,
            y + 4.0,
            method
        );
    }
    svg.push_str("</svg>\n");
    svg
}
