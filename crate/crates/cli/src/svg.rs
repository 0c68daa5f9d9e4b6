//! Minimal standalone SVG 1.1 output: polylines, circles and point clouds.

use std::fmt::Write as _;

const SIZE: f64 = 640.0;
const MARGIN: f64 = 32.0;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// A plot in data coordinates mapped onto a square canvas.
pub struct Plot {
    x_range: (f64, f64),
    y_range: (f64, f64),
    equal_aspect: bool,
    body: String,
}

impl Plot {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), equal_aspect: bool) -> Self {
        let fix = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (mut x_range, mut y_range) = (fix(x_range), fix(y_range));
        if equal_aspect {
            let half = 0.5 * (x_range.1 - x_range.0).max(y_range.1 - y_range.0);
            let (cx, cy) = (0.5 * (x_range.0 + x_range.1), 0.5 * (y_range.0 + y_range.1));
            x_range = (cx - half, cx + half);
            y_range = (cy - half, cy + half);
        }
        Self { x_range, y_range, equal_aspect, body: String::new() }
    }

    /// Bounding box of a point set, padded by `pad` times its size.
    pub fn fit<'a>(points: impl IntoIterator<Item = &'a (f64, f64)>, pad: f64, equal_aspect: bool) -> Self {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in points {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            return Self::new((0.0, 1.0), (0.0, 1.0), equal_aspect);
        }
        let (dx, dy) = ((x1 - x0) * pad, (y1 - y0) * pad);
        Self::new((x0 - dx, x1 + dx), (y0 - dy, y1 + dy), equal_aspect)
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let w = SIZE - 2.0 * MARGIN;
        let px = MARGIN + (x - self.x_range.0) / (self.x_range.1 - self.x_range.0) * w;
        let py = SIZE - MARGIN - (y - self.y_range.0) / (self.y_range.1 - self.y_range.0) * w;
        (px, py)
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, width: f64, closed: bool) {
        if points.is_empty() {
            return;
        }
        let tag = if closed { "polygon" } else { "polyline" };
        let _ = write!(self.body, "<{tag} fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width}\" points=\"");
        for &(x, y) in points {
            let (px, py) = self.map(x, y);
            let _ = write!(self.body, "{px:.2},{py:.2} ");
        }
        self.body.push_str("\"/>\n");
    }

    pub fn circle(&mut self, center: (f64, f64), radius: f64, stroke: &str) {
        let (px, py) = self.map(center.0, center.1);
        let r = radius / (self.x_range.1 - self.x_range.0) * (SIZE - 2.0 * MARGIN);
        let _ = writeln!(
            self.body,
            "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"{r:.2}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"0.6\" stroke-dasharray=\"3,3\"/>"
        );
    }

    pub fn points(&mut self, points: &[(f64, f64)], fill: &str, radius: f64) {
        if points.is_empty() {
            return;
        }
        let _ = write!(self.body, "<g fill=\"{fill}\">");
        for &(x, y) in points {
            let (px, py) = self.map(x, y);
            let _ = write!(self.body, "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"{radius}\"/>");
        }
        self.body.push_str("</g>\n");
    }

    pub fn render(&self, title: &str, x_label: &str, y_label: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>");
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">"
        );
        let _ = writeln!(out, "<title>{}</title>", escape(title));
        let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
        if !self.equal_aspect {
            let (x0, y0) = self.map(self.x_range.0, self.y_range.0);
            let (x1, y1) = self.map(self.x_range.1, self.y_range.1);
            let _ = writeln!(
                out,
                "<rect x=\"{x0:.2}\" y=\"{y1:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#888\" stroke-width=\"0.8\"/>",
                x1 - x0,
                y0 - y1
            );
        }
        out.push_str(&self.body);
        let _ = writeln!(
            out,
            "<text x=\"{:.0}\" y=\"{:.0}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
            SIZE / 2.0,
            SIZE - 8.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            "<text x=\"12\" y=\"{:.0}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 12 {:.0})\">{}</text>",
            SIZE / 2.0,
            SIZE / 2.0,
            escape(y_label)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.0}\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
            SIZE / 2.0,
            escape(title)
        );
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
