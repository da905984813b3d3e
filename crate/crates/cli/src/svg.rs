//! Minimal SVG emitter with a fixed style sheet.

use std::fmt::Write;

const STYLE: &str = "\
.disc{fill:none;stroke:#000;stroke-width:1}\
.axis{stroke:#c8c8c8;stroke-width:0.5}\
.orbit{fill:none;stroke:#808080;stroke-width:0.7}\
.sep{fill:none;stroke:#c0392b;stroke-width:1.2}\
.hc{fill:none;stroke:#1f5fbf;stroke-width:0.6;stroke-dasharray:3 2}\
.saddle{fill:#000}\
.node{fill:#fff;stroke:#000;stroke-width:1}\
.focus{fill:#7f8c8d;stroke:#000;stroke-width:0.6}\
.sn{fill:#8e44ad}\
.bd{fill:#f1c40f;stroke:#000;stroke-width:0.8}\
text{font-family:sans-serif;font-size:10px}";

/// A disc drawn at `(cx, cy)` with radius `r`; disc coordinates `(u, w)`
/// have `w` pointing up.
#[derive(Clone, Copy, Debug)]
pub struct Panel {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl Panel {
    pub fn map(&self, p: [f64; 2]) -> (f64, f64) {
        (self.cx + self.r * p[0], self.cy - self.r * p[1])
    }
}

pub struct Svg {
    width: f64,
    height: f64,
    body: String,
}

fn n(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Self {
            width,
            height,
            body: String::new(),
        }
    }

    pub fn disc(&mut self, p: &Panel) {
        let _ = writeln!(
            self.body,
            "<line class=\"axis\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
            n(p.cx - p.r),
            n(p.cy),
            n(p.cx + p.r),
            n(p.cy)
        );
        let _ = writeln!(
            self.body,
            "<line class=\"axis\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
            n(p.cx),
            n(p.cy - p.r),
            n(p.cx),
            n(p.cy + p.r)
        );
        let _ = writeln!(
            self.body,
            "<circle class=\"disc\" cx=\"{}\" cy=\"{}\" r=\"{}\"/>",
            n(p.cx),
            n(p.cy),
            n(p.r)
        );
    }

    /// Polyline through disc points; runs shorter than two points are skipped.
    pub fn polyline(&mut self, p: &Panel, pts: &[[f64; 2]], class: &str) {
        if pts.len() < 2 {
            return;
        }
        let mut d = String::new();
        for (k, q) in pts.iter().enumerate() {
            let (x, y) = p.map(*q);
            let _ = write!(d, "{}{} {}", if k == 0 { "M" } else { " L" }, n(x), n(y));
        }
        let _ = writeln!(self.body, "<path class=\"{class}\" d=\"{d}\"/>");
    }

    /// Independent segments in one path element.
    pub fn segments(&mut self, p: &Panel, segs: &[([f64; 2], [f64; 2])], class: &str) {
        if segs.is_empty() {
            return;
        }
        let mut d = String::new();
        for (a, b) in segs {
            let (x0, y0) = p.map(*a);
            let (x1, y1) = p.map(*b);
            let _ = write!(d, "M{} {} L{} {} ", n(x0), n(y0), n(x1), n(y1));
        }
        let _ = writeln!(self.body, "<path class=\"{class}\" d=\"{}\"/>", d.trim_end());
    }

    pub fn marker(&mut self, p: &Panel, q: [f64; 2], class: &str, size: f64) {
        let (x, y) = p.map(q);
        match class {
            "saddle" => {
                let _ = writeln!(
                    self.body,
                    "<rect class=\"saddle\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/>",
                    n(x - size),
                    n(y - size),
                    n(2.0 * size),
                    n(2.0 * size)
                );
            }
            "node" | "sn" => {
                let _ = writeln!(
                    self.body,
                    "<path class=\"{class}\" d=\"M{} {} L{} {} L{} {} L{} {} Z\"/>",
                    n(x),
                    n(y - size),
                    n(x + size),
                    n(y),
                    n(x),
                    n(y + size),
                    n(x - size),
                    n(y)
                );
            }
            _ => {
                let _ = writeln!(
                    self.body,
                    "<circle class=\"{class}\" cx=\"{}\" cy=\"{}\" r=\"{}\"/>",
                    n(x),
                    n(y),
                    n(size)
                );
            }
        }
    }

    pub fn text(&mut self, x: f64, y: f64, s: &str) {
        let _ = writeln!(self.body, "<text x=\"{}\" y=\"{}\">{}</text>", n(x), n(y), escape(s));
    }

    /// Document with `meta` in a `<desc>` element; no timestamps.
    pub fn finish(self, meta: &str) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <desc>{}</desc>\n<style>{STYLE}</style>\n<rect width=\"{w}\" height=\"{h}\" fill=\"#fff\"/>\n{}</svg>\n",
            escape(meta),
            self.body,
            w = n(self.width),
            h = n(self.height),
        )
    }
}
