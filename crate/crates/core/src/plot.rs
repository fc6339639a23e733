//! Minimal self-contained SVG line plots with error bars.
//!
//! Output depends only on the input values (fixed formatting, no
//! timestamps), so identical data gives byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;
const TICKS: usize = 5;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    /// Half-length of the error bar; zero draws none.
    pub yerr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn map(&self, v: f64, out_lo: f64, out_hi: f64) -> f64 {
        out_lo + (v - self.lo) / (self.hi - self.lo) * (out_hi - out_lo)
    }

    fn ticks(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=TICKS).map(move |k| self.lo + (self.hi - self.lo) * k as f64 / TICKS as f64)
    }
}

fn padded(lo: f64, hi: f64) -> Range {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        Range { lo: lo - pad, hi: hi + pad }
    } else {
        let pad = if lo == 0.0 { 0.5 } else { 0.1 * lo.abs() };
        Range { lo: lo - pad, hi: hi + pad }
    }
}

/// Y-range is `[0, 1]` whenever every bar fits, since most plotted
/// quantities are probabilities.
fn y_range(points: &[Point]) -> Range {
    let lo = points.iter().map(|p| p.y - p.yerr).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.y + p.yerr).fold(f64::NEG_INFINITY, f64::max);
    if lo >= 0.0 && hi <= 1.0 {
        Range { lo: 0.0, hi: 1.0 }
    } else {
        padded(lo, hi)
    }
}

fn label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn render_svg(plot: &Plot) -> Result<String> {
    let all: Vec<Point> = plot.series.iter().flat_map(|s| s.points.iter().copied()).collect();
    if all.is_empty() {
        return Err(Error::Plot("nothing to plot: every series is empty".into()));
    }
    if let Some(p) = all.iter().find(|p| !(p.x.is_finite() && p.y.is_finite() && p.yerr.is_finite() && p.yerr >= 0.0)) {
        return Err(Error::Plot(format!("invalid point ({}, {} ± {})", p.x, p.y, p.yerr)));
    }
    let xr = padded(
        all.iter().map(|p| p.x).fold(f64::INFINITY, f64::min),
        all.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max),
    );
    let yr = y_range(&all);
    let (left, right) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (top, bottom) = (MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
    let px = |x: f64| xr.map(x, left, right);
    let py = |y: f64| yr.map(y, bottom, top);

    let mut svg = String::new();
    let w = &mut svg;
    // fmt::Write into a String cannot fail
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        (left + right) / 2.0,
        escape(&plot.title)
    );
    let _ = writeln!(
        w,
        r#"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - top
    );

    for x in xr.ticks() {
        let sx = px(x);
        let _ = writeln!(
            w,
            r#"<line x1="{sx:.2}" y1="{bottom:.2}" x2="{sx:.2}" y2="{:.2}" stroke="black"/>"#,
            bottom + 5.0
        );
        let _ = writeln!(w, r#"<text x="{sx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, bottom + 18.0, label(x));
    }
    for y in yr.ticks() {
        let sy = py(y);
        let _ =
            writeln!(w, r#"<line x1="{:.2}" y1="{sy:.2}" x2="{left:.2}" y2="{sy:.2}" stroke="black"/>"#, left - 5.0);
        let _ = writeln!(w, r##"<line x1="{left:.2}" y1="{sy:.2}" x2="{right:.2}" y2="{sy:.2}" stroke="#dddddd"/>"##);
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, left - 8.0, sy + 4.0, label(y));
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        HEIGHT - 15.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        w,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(&plot.y_label)
    );

    for (k, series) in plot.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut points = series.points.clone();
        points.sort_by(|a, b| a.x.total_cmp(&b.x));
        if points.len() > 1 {
            let path: Vec<String> = points.iter().map(|p| format!("{:.2},{:.2}", px(p.x), py(p.y))).collect();
            let _ = writeln!(
                w,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                path.join(" ")
            );
        }
        for p in &points {
            let (sx, sy) = (px(p.x), py(p.y));
            if p.yerr > 0.0 {
                let (y0, y1) = (py(p.y - p.yerr), py(p.y + p.yerr));
                let _ = writeln!(w, r#"<line x1="{sx:.2}" y1="{y0:.2}" x2="{sx:.2}" y2="{y1:.2}" stroke="{color}"/>"#);
                for yb in [y0, y1] {
                    let _ = writeln!(
                        w,
                        r#"<line x1="{:.2}" y1="{yb:.2}" x2="{:.2}" y2="{yb:.2}" stroke="{color}"/>"#,
                        sx - 3.0,
                        sx + 3.0
                    );
                }
            }
            let _ = writeln!(w, r#"<circle cx="{sx:.2}" cy="{sy:.2}" r="3.5" fill="{color}"/>"#);
        }
        let ly = top + 10.0 + 18.0 * k as f64;
        let _ = writeln!(w, r#"<circle cx="{:.2}" cy="{ly:.2}" r="3.5" fill="{color}"/>"#, right + 15.0);
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, right + 25.0, ly + 4.0, escape(&series.name));
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

/// Renders `plot` and writes it to `path`.
pub fn emit_plot(plot: &Plot, path: &Path) -> Result<()> {
    let svg = render_svg(plot)?;
    std::fs::write(path, svg)?;
    Ok(())
}
