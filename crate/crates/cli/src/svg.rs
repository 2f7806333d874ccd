//! Minimal static line plots.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: &str, points: Vec<(f64, f64)>) -> Self {
        Series { name: name.to_string(), points }
    }
}

#[derive(Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Shaded x-intervals drawn behind the series.
    pub bands: Vec<(f64, f64)>,
    /// Dashed horizontal reference lines.
    pub guides: Vec<f64>,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) =
        values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    pub fn render(&self) -> String {
        let points = || self.series.iter().flat_map(|s| s.points.iter());
        let frame = Frame {
            x: extent(points().map(|p| p.0)),
            y: extent(points().map(|p| p.1).chain(self.guides.iter().copied())),
        };
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );

        let (top, bottom) = (frame.py(frame.y.1), frame.py(frame.y.0));
        for &(lo, hi) in &self.bands {
            let (x0, x1) = (frame.px(lo.max(frame.x.0)), frame.px(hi.min(frame.x.1)));
            if x1 >= x0 {
                let _ = writeln!(
                    out,
                    r##"<rect x="{x0:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="#2ca02c" fill-opacity="0.18"/>"##,
                    (x1 - x0).max(1.0),
                    bottom - top
                );
            }
        }

        let (left, right) = (frame.px(frame.x.0), frame.px(frame.x.1));
        let _ = writeln!(
            out,
            r#"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            right - left,
            bottom - top
        );
        for i in 0..=4 {
            let fx = frame.x.0 + (frame.x.1 - frame.x.0) * i as f64 / 4.0;
            let fy = frame.y.0 + (frame.y.1 - frame.y.0) * i as f64 / 4.0;
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{fx:.3}</text>"#,
                frame.px(fx),
                bottom + 18.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{fy:.3}</text>"#,
                left - 6.0,
                frame.py(fy) + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (left + right) / 2.0,
            HEIGHT - 10.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            (top + bottom) / 2.0,
            (top + bottom) / 2.0,
            escape(&self.y_label)
        );

        for &g in &self.guides {
            let y = frame.py(g);
            let _ = writeln!(
                out,
                r##"<line x1="{left:.2}" y1="{y:.2}" x2="{right:.2}" y2="{y:.2}" stroke="#777" stroke-dasharray="5,4"/>"##
            );
        }

        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let coords: Vec<String> = s
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#,
                coords.join(" ")
            );
            let ly = MARGIN_TOP + 18.0 * i as f64 + 10.0;
            let lx = WIDTH - MARGIN_RIGHT + 12.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
                lx + 20.0
            );
            let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&s.name));
        }
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_polyline_per_series() {
        let plot = Plot {
            title: "a < b".into(),
            series: vec![
                Series::new("one", vec![(0.0, 0.0), (1.0, 1.0)]),
                Series::new("two", vec![(0.0, 1.0), (1.0, 0.0)]),
            ],
            bands: vec![(0.2, 0.4)],
            guides: vec![0.5],
            ..Plot::default()
        };
        let svg = plot.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &lt; b"));
        assert_eq!(svg, plot.render());
    }

    #[test]
    fn flat_and_empty_data_do_not_divide_by_zero() {
        let flat = Plot { series: vec![Series::new("c", vec![(0.0, 2.0), (1.0, 2.0)])], ..Plot::default() };
        assert!(!flat.render().contains("NaN"));
        let empty = Plot::default();
        assert!(!empty.render().contains("NaN"));
    }
}
