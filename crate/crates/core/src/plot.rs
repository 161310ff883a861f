//! SVG rose plots of orientation histograms.

use std::f64::consts::PI;
use std::fmt::Write;

use crate::histogram::DirectionHistogram;

/// Axis an orientation angle is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleReference {
    /// Image row axis (pointing down); used for transport routes.
    RowAxis,
    /// Image column axis with angles counter-clockwise; used for gradients.
    ColumnAxis,
}

const PANEL: f64 = 200.0;
const RADIUS: f64 = 80.0;
const TITLE_HEIGHT: f64 = 20.0;

fn point(cx: f64, cy: f64, r: f64, theta: f64, reference: AngleReference) -> (f64, f64) {
    match reference {
        AngleReference::RowAxis => (cx + r * theta.sin(), cy + r * theta.cos()),
        AngleReference::ColumnAxis => (cx + r * theta.cos(), cy - r * theta.sin()),
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Draws one rose into `out` centred at `(cx, cy)`. Bins are scaled so the
/// largest reaches [`RADIUS`]; each bin is drawn twice, at `theta` and
/// `theta + pi`.
fn draw_rose(out: &mut String, cx: f64, cy: f64, hist: &DirectionHistogram, reference: AngleReference) {
    let _ = writeln!(
        out,
        r##"<circle cx="{cx:.3}" cy="{cy:.3}" r="{RADIUS:.3}" fill="none" stroke="#bbbbbb" stroke-width="1"/>"##
    );
    let peak = hist.bins().iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return;
    }
    let width = hist.bin_width();
    for (k, &b) in hist.bins().iter().enumerate() {
        let r = RADIUS * b / peak;
        if r <= 0.0 {
            continue;
        }
        for half in [0.0, PI] {
            let t0 = k as f64 * width + half;
            let t1 = t0 + width;
            let (x0, y0) = point(cx, cy, r, t0, reference);
            let (x1, y1) = point(cx, cy, r, t1, reference);
            let _ = writeln!(
                out,
                r##"<path d="M {cx:.3} {cy:.3} L {x0:.3} {y0:.3} A {r:.3} {r:.3} 0 0 0 {x1:.3} {y1:.3} Z" fill="#4a7ab5" fill-opacity="0.8" stroke="#1f3d66" stroke-width="0.5"/>"##
            );
        }
    }
}

/// One panel of a rose-plot grid.
#[derive(Debug, Clone)]
pub struct RosePanel {
    pub title: String,
    pub histogram: DirectionHistogram,
    pub reference: AngleReference,
}

/// Single rose plot with an optional title.
pub fn rose_svg(hist: &DirectionHistogram, reference: AngleReference, title: &str) -> String {
    rose_grid_svg(
        &[RosePanel {
            title: title.to_string(),
            histogram: hist.clone(),
            reference,
        }],
        1,
    )
}

/// Small-multiples grid of rose plots, `columns` panels per row, filled
/// row-major.
pub fn rose_grid_svg(panels: &[RosePanel], columns: usize) -> String {
    let columns = columns.max(1);
    let rows = panels.len().div_ceil(columns).max(1);
    let (w, h) = (columns as f64 * PANEL, rows as f64 * (PANEL + TITLE_HEIGHT));
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, panel) in panels.iter().enumerate() {
        let title = &panel.title;
        let x = (i % columns) as f64 * PANEL;
        let y = (i / columns) as f64 * (PANEL + TITLE_HEIGHT);
        if !title.is_empty() {
            let _ = writeln!(
                out,
                r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
                x + PANEL / 2.0,
                y + 14.0,
                escape(title)
            );
        }
        draw_rose(
            &mut out,
            x + PANEL / 2.0,
            y + TITLE_HEIGHT + PANEL / 2.0,
            &panel.histogram,
            panel.reference,
        );
    }
    out.push_str("</svg>\n");
    out
}
