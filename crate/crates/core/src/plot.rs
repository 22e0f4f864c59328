//! Deterministic SVG scatter plots.
//!
//! Fixed `800 x 600` view box. The plot area spans `x in [80, 770]` and
//! `y in [40, 530]`; a data value `v` in axis range `[lo, hi]` maps to
//! `80 + 690 (v - lo) / (hi - lo)` horizontally and `530 - 490 (v - lo) /
//! (hi - lo)` vertically. Axis ranges are widened to multiples of a "nice"
//! tick step (1, 2 or 5 times a power of ten, about five ticks). A
//! degenerate range `[v, v]` is padded to `v +- |v|/2`, or `[-1, 1]` at zero.
//! Coordinates are printed with two decimals.

use std::fmt::Write as _;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
pub const LEFT: f64 = 80.0;
pub const RIGHT: f64 = 770.0;
pub const TOP: f64 = 40.0;
pub const BOTTOM: f64 = 530.0;
const TARGET_TICKS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

fn nice_step(span: f64) -> f64 {
    let raw = span / TARGET_TICKS;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f < 1.5 {
        1.0
    } else if f < 3.0 {
        2.0
    } else if f < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

impl Axis {
    /// Axis covering `values` (default `[0, 1]` when empty).
    pub fn fit(values: &[f64]) -> Axis {
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        let (mut lo, mut hi) = if finite.is_empty() {
            (0.0, 1.0)
        } else {
            (
                finite.iter().copied().fold(f64::INFINITY, f64::min),
                finite.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            )
        };
        if lo == hi {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() / 2.0 };
            lo -= pad;
            hi += pad;
        }
        let step = nice_step(hi - lo);
        Axis {
            lo: (lo / step).floor() * step,
            hi: (hi / step).ceil() * step,
            step,
        }
    }

    pub fn ticks(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step).round() as i64;
        (0..=n).map(|i| self.lo + i as f64 * self.step).collect()
    }

    fn decimals(&self) -> usize {
        (-self.step.log10().floor()).max(0.0) as usize
    }

    pub fn label(&self, v: f64) -> String {
        let s = format!("{:.*}", self.decimals(), v);
        if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
            s[1..].to_string()
        } else {
            s
        }
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }

    pub fn to_x(&self, v: f64) -> f64 {
        LEFT + (RIGHT - LEFT) * self.frac(v)
    }

    pub fn to_y(&self, v: f64) -> f64 {
        BOTTOM - (BOTTOM - TOP) * self.frac(v)
    }
}

/// A straight line drawn in data coordinates, e.g. a fitted trend.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scatter {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// `(x, y, series)`; the series index picks the marker colour.
    pub points: Vec<(f64, f64, usize)>,
    pub series_names: Vec<String>,
    pub line: Option<Line>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f",
];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Scatter {
    pub fn render(&self) -> String {
        let xs: Vec<f64> = self.points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = self.points.iter().map(|p| p.1).collect();
        let ax = Axis::fit(&xs);
        let ay = Axis::fit(&ys);
        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
        )
        .unwrap();
        writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
        writeln!(
            s,
            r#"<clipPath id="area"><rect x="{LEFT:.2}" y="{TOP:.2}" width="{:.2}" height="{:.2}"/></clipPath>"#,
            RIGHT - LEFT,
            BOTTOM - TOP
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
            (LEFT + RIGHT) / 2.0,
            esc(&self.title)
        )
        .unwrap();
        for t in ax.ticks() {
            let x = ax.to_x(t);
            writeln!(s, r##"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{BOTTOM:.2}" stroke="#e0e0e0"/>"##).unwrap();
            writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                BOTTOM + 18.0,
                ax.label(t)
            )
            .unwrap();
        }
        for t in ay.ticks() {
            let y = ay.to_y(t);
            writeln!(s, r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{RIGHT:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##).unwrap();
            writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 8.0,
                y + 4.0,
                ay.label(t)
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            RIGHT - LEFT,
            BOTTOM - TOP
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (LEFT + RIGHT) / 2.0,
            BOTTOM + 45.0,
            esc(&self.x_label)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
            (TOP + BOTTOM) / 2.0,
            (TOP + BOTTOM) / 2.0,
            esc(&self.y_label)
        )
        .unwrap();
        if let Some(line) = &self.line {
            let f = |x: f64| line.slope * x + line.intercept;
            writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-dasharray="6 4" clip-path="url(#area)"/>"#,
                ax.to_x(ax.lo),
                ay.to_y(f(ax.lo)),
                ax.to_x(ax.hi),
                ay.to_y(f(ax.hi))
            )
            .unwrap();
            writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                RIGHT - 8.0,
                TOP + 16.0,
                esc(&line.label)
            )
            .unwrap();
        }
        for &(x, y, k) in &self.points {
            if !(x.is_finite() && y.is_finite()) {
                continue;
            }
            writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}"/>"#,
                ax.to_x(x),
                ay.to_y(y),
                PALETTE[k % PALETTE.len()]
            )
            .unwrap();
        }
        for (k, name) in self.series_names.iter().enumerate() {
            let y = TOP + 16.0 + 18.0 * k as f64;
            writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                LEFT + 16.0,
                y - 4.0,
                PALETTE[k % PALETTE.len()],
                LEFT + 26.0,
                y,
                esc(name)
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        s
    }
}
