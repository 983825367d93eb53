//! Minimal static SVG line plots for ledgers and sweep tables.
//!
//! Hand-rolled on purpose: the report path needs axes, ticks, a legend, and
//! polylines — nothing interactive — and writing the ~100 lines of SVG keeps
//! the binary free of a plotting stack. Output is deterministic text.

use crate::error::Result;
use std::fmt::Write as _;
use std::path::Path;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 78.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 42.0;
const MARGIN_B: f64 = 58.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone)]
struct Series {
    name: String,
    points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Plot {
    title: String,
    xlabel: String,
    ylabel: String,
    log_y: bool,
    series: Vec<Series>,
}

impl Plot {
    pub fn new(title: &str, xlabel: &str, ylabel: &str) -> Self {
        Plot {
            title: title.to_string(),
            xlabel: xlabel.to_string(),
            ylabel: ylabel.to_string(),
            log_y: false,
            series: Vec::new(),
        }
    }

    /// Plots log10 of the (positive) y values; non-positive points are dropped.
    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn add_series(mut self, name: &str, points: &[(f64, f64)]) -> Self {
        let points = if self.log_y {
            points
                .iter()
                .filter(|(_, y)| *y > 0.0)
                .map(|&(x, y)| (x, y.log10()))
                .collect()
        } else {
            points.to_vec()
        };
        self.series.push(Series { name: name.to_string(), points });
        self
    }

    fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
        let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for &(x, y) in &s.points {
                xs = (xs.0.min(x), xs.1.max(x));
                ys = (ys.0.min(y), ys.1.max(y));
            }
        }
        if !xs.0.is_finite() || xs.0 == xs.1 {
            xs = (xs.0.min(0.0), xs.0.max(0.0) + 1.0);
        }
        if !ys.0.is_finite() || ys.0 == ys.1 {
            let c = if ys.0.is_finite() { ys.0 } else { 0.0 };
            ys = (c - 0.5, c + 0.5);
        }
        (xs, ys)
    }

    /// Renders the SVG document as a string.
    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.bounds();
        let px = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * (WIDTH - MARGIN_L - MARGIN_R);
        let py = |y: f64| HEIGHT - MARGIN_B - (y - y0) / (y1 - y0) * (HEIGHT - MARGIN_T - MARGIN_B);

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="Helvetica, Arial, sans-serif">"#
        );
        let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="24" font-size="16" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );

        // frame
        let _ = writeln!(
            svg,
            r##"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{}" height="{}" fill="none" stroke="#333" stroke-width="1"/>"##,
            WIDTH - MARGIN_L - MARGIN_R,
            HEIGHT - MARGIN_T - MARGIN_B
        );

        // ticks: 5 per axis
        for i in 0..=4 {
            let fx = x0 + (x1 - x0) * i as f64 / 4.0;
            let fy = y0 + (y1 - y0) * i as f64 / 4.0;
            let gx = px(fx);
            let gy = py(fy);
            let _ = writeln!(
                svg,
                r##"<line x1="{gx:.2}" y1="{}" x2="{gx:.2}" y2="{}" stroke="#333"/>"##,
                HEIGHT - MARGIN_B,
                HEIGHT - MARGIN_B + 5.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{gx:.2}" y="{}" font-size="11" text-anchor="middle">{}</text>"#,
                HEIGHT - MARGIN_B + 18.0,
                tick_label(fx)
            );
            let _ = writeln!(
                svg,
                r##"<line x1="{}" y1="{gy:.2}" x2="{MARGIN_L}" y2="{gy:.2}" stroke="#333"/>"##,
                MARGIN_L - 5.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
                MARGIN_L - 8.0,
                gy + 4.0,
                tick_label(fy)
            );
        }

        // axis labels
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">{}</text>"#,
            (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
            HEIGHT - 14.0,
            escape(&self.xlabel)
        );
        let ylab = if self.log_y {
            format!("log10 {}", self.ylabel)
        } else {
            self.ylabel.clone()
        };
        let _ = writeln!(
            svg,
            r#"<text x="18" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
            (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
            escape(&ylab)
        );

        // polylines
        for (si, s) in self.series.iter().enumerate() {
            let color = PALETTE[si % PALETTE.len()];
            let mut pts = String::new();
            for &(x, y) in &s.points {
                let _ = write!(pts, "{:.2},{:.2} ", px(x), py(y));
            }
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
                pts.trim_end()
            );
        }

        // legend
        for (si, s) in self.series.iter().enumerate() {
            let color = PALETTE[si % PALETTE.len()];
            let ly = MARGIN_T + 16.0 + 18.0 * si as f64;
            let lx = WIDTH - MARGIN_R - 170.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
                lx + 22.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" font-size="12">{}</text>"#,
                lx + 28.0,
                ly + 4.0,
                escape(&s.name)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
