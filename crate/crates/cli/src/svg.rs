// SPDX-License-Identifier: Apache-2.0

//! Minimal line and scatter charts written as plain SVG.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 450.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub style: Style,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn line(label: &str, color: &'static str, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.to_string(),
            color,
            style: Style::Line,
            points,
        }
    }

    pub fn markers(label: &str, color: &'static str, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.to_string(),
            color,
            style: Style::Markers,
            points,
        }
    }
}

/// Shaded region between a lower and an upper curve.
#[derive(Debug, Clone)]
pub struct Band {
    pub label: String,
    pub color: &'static str,
    /// (x, lower, upper)
    pub points: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub bands: Vec<Band>,
    pub series: Vec<Series>,
}

/// Tick positions at 1, 2 or 5 times a power of ten.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
    let s = format!("{v:.decimals$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        "0".to_string()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

impl Chart {
    fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
        let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
        let mut add = |x: f64, y: f64| {
            if x.is_finite() && y.is_finite() {
                xs = (xs.0.min(x), xs.1.max(x));
                ys = (ys.0.min(y), ys.1.max(y));
            }
        };
        for s in &self.series {
            s.points.iter().for_each(|&(x, y)| add(x, y));
        }
        for b in &self.bands {
            for &(x, lo, hi) in &b.points {
                add(x, lo);
                add(x, hi);
            }
        }
        if xs.0 > xs.1 {
            return ((0.0, 1.0), (0.0, 1.0));
        }
        (padded(xs.0, xs.1), padded(ys.0, ys.1))
    }

    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.bounds();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        let mut o = String::new();
        let _ = writeln!(
            o,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(o, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            o,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );

        // axes and ticks
        let _ = writeln!(
            o,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        let xt = ticks(x0, x1, 8);
        let xstep = if xt.len() > 1 { xt[1] - xt[0] } else { 1.0 };
        for &t in &xt {
            let px = sx(t);
            let _ = writeln!(
                o,
                r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0,
                tick_label(t, xstep)
            );
        }
        let yt = ticks(y0, y1, 6);
        let ystep = if yt.len() > 1 { yt[1] - yt[0] } else { 1.0 };
        for &t in &yt {
            let py = sy(t);
            let _ = writeln!(
                o,
                r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                py + 4.0,
                tick_label(t, ystep)
            );
        }
        let _ = writeln!(
            o,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            o,
            r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for b in &self.bands {
            if b.points.is_empty() {
                continue;
            }
            let mut d = String::new();
            for &(x, _, hi) in &b.points {
                let _ = write!(d, "{:.2},{:.2} ", sx(x), sy(hi));
            }
            for &(x, lo, _) in b.points.iter().rev() {
                let _ = write!(d, "{:.2},{:.2} ", sx(x), sy(lo));
            }
            let _ = writeln!(
                o,
                r#"<polygon points="{}" fill="{}" fill-opacity="0.3" stroke="none"/>"#,
                d.trim_end(),
                b.color
            );
        }

        for s in &self.series {
            match s.style {
                Style::Line => {
                    let mut d = String::new();
                    for &(x, y) in &s.points {
                        let _ = write!(d, "{:.2},{:.2} ", sx(x), sy(y));
                    }
                    let _ = writeln!(
                        o,
                        r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                        d.trim_end(),
                        s.color
                    );
                }
                Style::Markers => {
                    let _ = writeln!(o, r#"<g fill="{}">"#, s.color);
                    for &(x, y) in &s.points {
                        let _ = writeln!(o, r#"<circle cx="{:.2}" cy="{:.2}" r="2"/>"#, sx(x), sy(y));
                    }
                    let _ = writeln!(o, "</g>");
                }
            }
        }

        // legend
        let entries: Vec<(&str, &str)> = self
            .bands
            .iter()
            .map(|b| (b.label.as_str(), b.color))
            .chain(self.series.iter().map(|s| (s.label.as_str(), s.color)))
            .collect();
        for (i, (label, color)) in entries.iter().enumerate() {
            let y = TOP + 15.0 + 16.0 * i as f64;
            let _ = writeln!(
                o,
                r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                LEFT + 10.0,
                y - 9.0,
                LEFT + 25.0,
                y,
                escape(label)
            );
        }
        o.push_str("</svg>\n");
        o
    }
}
