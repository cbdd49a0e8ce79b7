// SPDX-License-Identifier: MIT OR Apache-2.0

//! Minimal static SVG charts. Coordinates are printed with two decimals so
//! identical inputs give identical bytes.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let lo = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::INFINITY, f64::min);
        let hi = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NEG_INFINITY, f64::max);
        let (mut x_min, mut x_max) = (lo(&mut xs.clone()), hi(&mut xs.clone()));
        let (mut y_min, mut y_max) = (lo(&mut ys.clone()), hi(&mut ys.clone()));
        if !x_min.is_finite() {
            (x_min, x_max) = (0.0, 1.0);
        }
        if !y_min.is_finite() {
            (y_min, y_max) = (0.0, 1.0);
        }
        if x_max - x_min < 1e-12 {
            x_max = x_min + 1.0;
        }
        if y_max - y_min < 1e-12 {
            y_max = y_min + 1.0;
        }
        Self { x_min, x_max, y_min, y_max }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn open(out: &mut String, title: &str, x_label: &str, y_label: &str, frame: &Frame) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.2}" y="20" font-size="14" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    let (x0, x1) = (frame.px(frame.x_min), frame.px(frame.x_max));
    let (y0, y1) = (frame.py(frame.y_min), frame.py(frame.y_max));
    let _ = writeln!(out, r#"<line class="axis" x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="black"/>"#);
    let _ = writeln!(out, r#"<line class="axis" x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="black"/>"#);
    for (v, anchor_y) in [(frame.y_min, y0), (frame.y_max, y1)] {
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 6.0, anchor_y + 4.0, fmt_tick(v));
    }
    for (v, anchor_x) in [(frame.x_min, x0), (frame.x_max, x1)] {
        let _ = writeln!(out, r#"<text x="{anchor_x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, y0 + 16.0, fmt_tick(v));
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 12.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn fmt_tick(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn legend(out: &mut String, index: usize, label: &str) {
    let y = MARGIN_TOP + 16.0 * index as f64;
    let x = WIDTH - MARGIN_RIGHT + 12.0;
    let color = PALETTE[index % PALETTE.len()];
    let _ = writeln!(out, r#"<rect x="{x:.2}" y="{:.2}" width="10" height="10" fill="{color}"/>"#, y - 9.0);
    let _ = writeln!(out, r#"<text x="{:.2}" y="{y:.2}">{}</text>"#, x + 14.0, escape(label));
}

/// One polyline per series. F1 charts use a fixed [0, 1] y range when
/// `unit_y` is set.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], unit_y: bool) -> String {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let mut frame = Frame::new(xs, ys);
    if unit_y {
        (frame.y_min, frame.y_max) = (0.0, 1.0);
    }
    let mut out = String::new();
    open(&mut out, title, x_label, y_label, &frame);
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        legend(&mut out, i, &s.label);
    }
    out.push_str("</svg>\n");
    out
}

/// Scatter plot with an optional fitted line `y = slope·x + intercept`.
pub fn scatter_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    points: &[(String, f64, f64)],
    fit: Option<(f64, f64)>,
) -> String {
    let frame = Frame::new(points.iter().map(|p| p.1), points.iter().map(|p| p.2));
    let mut out = String::new();
    open(&mut out, title, x_label, y_label, &frame);
    for (label, x, y) in points {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}"><title>{}</title></circle>"#,
            frame.px(*x),
            frame.py(*y),
            PALETTE[0],
            escape(label)
        );
    }
    if let Some((slope, intercept)) = fit {
        let (xa, xb) = (frame.x_min, frame.x_max);
        let _ = writeln!(
            out,
            r#"<line class="fit" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2"/>"#,
            frame.px(xa),
            frame.py(slope * xa + intercept),
            frame.px(xb),
            frame.py(slope * xb + intercept),
            PALETTE[1]
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Vertical bars in the given order, scores on a [0, 1] axis.
pub fn bar_chart(title: &str, x_label: &str, y_label: &str, bars: &[(String, f64)]) -> String {
    let n = bars.len().max(1) as f64;
    let frame = Frame { x_min: 0.0, x_max: n, y_min: 0.0, y_max: 1.0 };
    let mut out = String::new();
    open(&mut out, title, x_label, y_label, &frame);
    let slot = frame.px(1.0) - frame.px(0.0);
    for (i, (label, v)) in bars.iter().enumerate() {
        let x = frame.px(i as f64) + slot * 0.1;
        let top = frame.py(v.clamp(0.0, 1.0));
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{}</title></rect>"#,
            slot * 0.8,
            frame.py(0.0) - top,
            PALETTE[0],
            escape(&format!("{label}: {v}"))
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="9">{}</text>"#,
            x + slot * 0.4,
            frame.py(0.0) + 28.0,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}
