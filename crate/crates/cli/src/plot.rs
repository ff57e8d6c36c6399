//! Log-linear SVG plots of `residual2` against `k`.

use std::fmt::Write;

use rowstoch_core::TraceRecord;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 180.0;
const MARGIN_Y: f64 = 40.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub records: Vec<TraceRecord>,
}

#[derive(Clone, Debug)]
pub struct Plot {
    pub svg: String,
    /// Screen coordinates of each series' polyline.
    pub polylines: Vec<Vec<(f64, f64)>>,
    pub legend: Vec<String>,
}

/// Nonpositive or non-finite residuals have no logarithm and are skipped.
fn log_points(records: &[TraceRecord]) -> Vec<(f64, f64)> {
    records
        .iter()
        .filter(|r| r.residual2 > 0.0 && r.residual2.is_finite())
        .map(|r| (r.k as f64, r.residual2.log10()))
        .collect()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn render(series: &[Series]) -> Plot {
    let logs: Vec<Vec<(f64, f64)>> = series.iter().map(|s| log_points(&s.records)).collect();
    let all = logs.iter().flatten();
    let (mut k_max, mut y_min, mut y_max) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for &(k, y) in all {
        k_max = k_max.max(k);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if !y_min.is_finite() {
        (y_min, y_max) = (0.0, 1.0);
    }
    let (y_lo, y_hi) = (y_min.floor(), y_max.ceil().max(y_min.floor() + 1.0));
    let k_max = k_max.max(1.0);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - 2.0 * MARGIN_Y;
    let sx = |k: f64| MARGIN_LEFT + plot_w * k / k_max;
    let sy = |y: f64| MARGIN_Y + plot_h * (y_hi - y) / (y_hi - y_lo);

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_Y}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    let mut decade = y_lo;
    let step = ((y_hi - y_lo) / 10.0).ceil().max(1.0);
    while decade <= y_hi {
        let y = sy(decade);
        writeln!(svg, r##"<line x1="{MARGIN_LEFT}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/>"##, MARGIN_LEFT + plot_w).unwrap();
        writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">1e{decade}</text>"#, MARGIN_LEFT - 6.0, y + 4.0).unwrap();
        decade += step;
    }
    writeln!(svg, r#"<text x="{MARGIN_LEFT}" y="{}">0</text>"#, HEIGHT - MARGIN_Y + 16.0).unwrap();
    writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{k_max}</text>"#, MARGIN_LEFT + plot_w, HEIGHT - MARGIN_Y + 16.0).unwrap();
    writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">iteration k</text>"#, MARGIN_LEFT + plot_w / 2.0, HEIGHT - 8.0).unwrap();
    writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">residual (log10)</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    )
    .unwrap();

    let mut polylines = Vec::with_capacity(series.len());
    let mut legend = Vec::with_capacity(series.len());
    for (i, (s, points)) in series.iter().zip(&logs).enumerate() {
        let color = COLORS[i % COLORS.len()];
        let screen: Vec<(f64, f64)> = points.iter().map(|&(k, y)| (sx(k), sy(y))).collect();
        let coords: Vec<String> = screen.iter().map(|(x, y)| format!("{x},{y}")).collect();
        writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, coords.join(" ")).unwrap();
        let ly = MARGIN_Y + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 12.0;
        writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0).unwrap();
        writeln!(svg, r#"<text x="{}" y="{}" class="legend">{}</text>"#, lx + 26.0, ly + 4.0, escape(&s.label)).unwrap();
        polylines.push(screen);
        legend.push(s.label.clone());
    }
    svg.push_str("</svg>\n");
    Plot { svg, polylines, legend }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric(ratio: f64, len: usize) -> Vec<TraceRecord> {
        (0..len)
            .map(|k| TraceRecord {
                k,
                residual2: 3.0 * ratio.powi(k as i32),
                consensus_err: 0.0,
                opt_err: 0.0,
                grad_track_err: 0.0,
                grad_norm: 0.0,
            })
            .collect()
    }

    #[test]
    fn geometric_series_is_a_straight_line() {
        let plot = render(&[Series { label: "g".into(), records: geometric(0.8, 60) }]);
        let line = &plot.polylines[0];
        let (x0, y0) = line[0];
        let (x1, y1) = line[line.len() - 1];
        let slope = (y1 - y0) / (x1 - x0);
        for &(x, y) in line {
            assert!((y - (y0 + slope * (x - x0))).abs() < 1e-6);
        }
        // Vertical coordinates are affine in k as well.
        let dk = line[1].0 - line[0].0;
        for w in line.windows(2) {
            assert!((w[1].0 - w[0].0 - dk).abs() < 1e-9);
        }
    }

    #[test]
    fn two_series_two_legend_entries() {
        let plot = render(&[
            Series { label: "a<b".into(), records: geometric(0.8, 20) },
            Series { label: "b".into(), records: geometric(0.9, 20) },
        ]);
        assert_eq!(plot.svg.matches("<polyline").count(), 2);
        assert_eq!(plot.svg.matches(r#"class="legend""#).count(), 2);
        assert!(plot.svg.contains("a&lt;b"));
    }
}
