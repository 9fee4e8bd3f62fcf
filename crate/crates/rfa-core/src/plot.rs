//! Self-contained SVG rendering of aggregated learning curves: sample
//! size on a log2 x-axis, mean test error on a log10 y-axis, one series
//! per model with plus/minus one standard error bars.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::features::ModelKind;
use crate::sweep::AggregateCell;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 56.0;

fn series_color(model: ModelKind) -> &'static str {
    match model {
        ModelKind::Rfa => "#1f77b4",
        ModelKind::Brfa => "#d62728",
        ModelKind::Rfmlp => "#2ca02c",
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = (self.x1 - self.x0).max(1e-12);
        MARGIN_LEFT + (x - self.x0) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let span = (self.y1 - self.y0).max(1e-12);
        HEIGHT - MARGIN_BOTTOM - (y - self.y0) / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

/// Renders one target's aggregated cells to an SVG document string. All
/// cells must belong to the same target; render one file per target.
pub fn render_plot(cells: &[AggregateCell]) -> Result<String> {
    if cells.is_empty() {
        return Err(Error::InvalidConfig("no aggregated cells to plot".into()));
    }
    let target = &cells[0].target;
    if cells.iter().any(|c| &c.target != target) {
        return Err(Error::InvalidConfig(format!(
            "plot covers one target per file, found `{target}` mixed with others"
        )));
    }
    if cells
        .iter()
        .any(|c| !(c.mean_test_mse.is_finite() && c.mean_test_mse > 0.0))
    {
        return Err(Error::Numerical(
            "plot needs finite positive mean errors on the log axis".into(),
        ));
    }

    // Per-point vertical extent on the log10 axis; the lower bar end is
    // clamped so a stderr that swallows the mean cannot push it to zero.
    let point_bounds = |c: &AggregateCell| -> (f64, f64) {
        let hi = c.mean_test_mse + c.stderr;
        let lo = (c.mean_test_mse - c.stderr).max(c.mean_test_mse * 1e-3);
        (lo.log10(), hi.log10())
    };

    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for c in cells {
        let x = (c.n as f64).log2();
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        let (lo, hi) = point_bounds(c);
        y_lo = y_lo.min(lo);
        y_hi = y_hi.max(hi);
    }
    let x_pad = ((x_hi - x_lo) * 0.04).max(0.4);
    let y_pad = ((y_hi - y_lo) * 0.06).max(0.1);
    let frame = Frame {
        x0: x_lo - x_pad,
        x1: x_hi + x_pad,
        y0: y_lo - y_pad,
        y1: y_hi + y_pad,
    };

    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(
        svg,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = write!(
        svg,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="15">target {}</text>"#,
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        target
    );

    // Axes box.
    let _ = write!(
        svg,
        r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#444"/>"##,
        MARGIN_LEFT,
        MARGIN_TOP,
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    );

    // X ticks at every distinct sample size.
    let mut ns: Vec<usize> = cells.iter().map(|c| c.n).collect();
    ns.sort_unstable();
    ns.dedup();
    for &n in &ns {
        let px = frame.px((n as f64).log2());
        let _ = write!(
            svg,
            r##"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="#ddd"/>"##,
            MARGIN_TOP,
            HEIGHT - MARGIN_BOTTOM
        );
        let _ = write!(
            svg,
            r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{n}</text>"#,
            HEIGHT - MARGIN_BOTTOM + 16.0
        );
    }
    let _ = write!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">training samples n (log2 axis)</text>"#,
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 14.0
    );

    // Y ticks at powers of ten inside the frame, or fallback positions
    // when the data spans less than a decade.
    let mut y_ticks: Vec<f64> = ((frame.y0.ceil() as i64)..=(frame.y1.floor() as i64))
        .map(|e| e as f64)
        .collect();
    if y_ticks.len() < 2 {
        y_ticks = vec![frame.y0, (frame.y0 + frame.y1) / 2.0, frame.y1];
    }
    for &t in &y_ticks {
        let py = frame.py(t);
        let _ = write!(
            svg,
            r##"<line x1="{:.1}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#ddd"/>"##,
            MARGIN_LEFT,
            WIDTH - MARGIN_RIGHT
        );
        let label = if t == t.round() {
            format!("1e{}", t as i64)
        } else {
            format!("{:.2}", 10f64.powf(t))
        };
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#,
            MARGIN_LEFT - 6.0,
            py + 4.0
        );
    }
    let _ = write!(
        svg,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">mean test mse (log10 axis)</text>"#,
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0
    );

    // One series per model, in enum order.
    let mut legend_row = 0;
    for model in ModelKind::ALL {
        let mut series: Vec<&AggregateCell> = cells.iter().filter(|c| c.model == model).collect();
        if series.is_empty() {
            continue;
        }
        series.sort_by_key(|c| c.n);
        let color = series_color(model);

        let points: Vec<String> = series
            .iter()
            .map(|c| {
                format!(
                    "{:.1},{:.1}",
                    frame.px((c.n as f64).log2()),
                    frame.py(c.mean_test_mse.log10())
                )
            })
            .collect();
        let _ = write!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
            points.join(" ")
        );
        for c in &series {
            let px = frame.px((c.n as f64).log2());
            let py = frame.py(c.mean_test_mse.log10());
            let _ = write!(
                svg,
                r#"<circle cx="{px:.1}" cy="{py:.1}" r="3" fill="{color}"/>"#
            );
            if c.stderr > 0.0 {
                let (lo, hi) = point_bounds(c);
                let (plo, phi) = (frame.py(lo), frame.py(hi));
                let _ = write!(
                    svg,
                    r#"<line class="errbar" x1="{px:.1}" y1="{plo:.1}" x2="{px:.1}" y2="{phi:.1}" stroke="{color}"/>"#
                );
                for end in [plo, phi] {
                    let _ = write!(
                        svg,
                        r#"<line x1="{:.1}" y1="{end:.1}" x2="{:.1}" y2="{end:.1}" stroke="{color}"/>"#,
                        px - 4.0,
                        px + 4.0
                    );
                }
            }
        }

        let ly = MARGIN_TOP + 14.0 + 18.0 * legend_row as f64;
        let lx = WIDTH - MARGIN_RIGHT - 110.0;
        let _ = write!(
            svg,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="1.8"/>"#,
            lx + 24.0
        );
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 30.0,
            ly + 4.0,
            model.as_str()
        );
        legend_row += 1;
    }

    svg.push_str("</svg>");
    Ok(svg)
}
