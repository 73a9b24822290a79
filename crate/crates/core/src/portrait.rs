//! Static SVG phase portraits.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::compactify::{infinity_singularities, InfinityKind};
use crate::dline::{census, DClass, DSingularityKind};
use crate::flow::{integrate_smooth, FlowOptions, Window};
use crate::linalg::PointType;
use crate::poly::{PiecewiseField, Side};
use crate::stability::interior_singularities;
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortraitOptions {
    pub window: Window,
    /// Streak seeds per axis and side.
    pub grid: usize,
    /// Time length of each streak.
    pub streak: f64,
    /// Add the compactified disk panel.
    pub compactified: bool,
}

impl PortraitOptions {
    pub fn new(window: Window) -> Self {
        Self { window, grid: 12, streak: 0.25, compactified: false }
    }
}

const SIZE: f64 = 600.0;
const STYLE: &str = "\
.axis{stroke:#999;stroke-width:1}
.arc-sewing{stroke:#2a7;stroke-width:4}
.arc-sliding{stroke:#d33;stroke-width:4}
.arc-escaping{stroke:#36c;stroke-width:4}
.arc-tangency{stroke:#a3a;stroke-width:4}
.streak-x{stroke:#555;fill:none;stroke-width:1}
.streak-y{stroke:#b70;fill:none;stroke-width:1}
.glyph-fz-saddle{fill:none;stroke:#000;stroke-width:2}
.glyph-fz-node{fill:#000}
.glyph-fold-x{fill:#a3a}
.glyph-fold-y{fill:#b70}
.glyph-nonelementary{fill:#f80;stroke:#000}
.glyph-saddle{fill:none;stroke:#00a;stroke-width:2}
.glyph-singular{fill:#00a}
.glyph-infinity{fill:#000}
.infinity-circle{fill:none;stroke:#000;stroke-width:1.5}
";

struct Frame {
    w: Window,
    x0: f64,
}

impl Frame {
    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        let u = (p[0] - self.w.x.0) / (self.w.x.1 - self.w.x.0);
        let v = (p[1] - self.w.y.0) / (self.w.y.1 - self.w.y.0);
        (self.x0 + u * SIZE, (1.0 - v) * SIZE)
    }
}

fn polyline(out: &mut String, class: &str, pts: impl Iterator<Item = (f64, f64)>) {
    let coords: Vec<String> = pts.map(|(a, b)| format!("{a:.3},{b:.3}")).collect();
    if coords.len() >= 2 {
        writeln!(out, r#"<polyline class="{class}" points="{}"/>"#, coords.join(" ")).unwrap();
    }
}

fn glyph(out: &mut String, class: &str, (cx, cy): (f64, f64), x: f64) {
    if class == "glyph-fz-saddle" || class == "glyph-saddle" {
        writeln!(
            out,
            r#"<path class="{class}" data-x="{x:.6}" d="M{:.3},{:.3}L{:.3},{:.3}M{:.3},{:.3}L{:.3},{:.3}"/>"#,
            cx - 6.0,
            cy - 6.0,
            cx + 6.0,
            cy + 6.0,
            cx - 6.0,
            cy + 6.0,
            cx + 6.0,
            cy - 6.0
        )
        .unwrap();
    } else {
        writeln!(out, r#"<circle class="{class}" data-x="{x:.6}" cx="{cx:.3}" cy="{cy:.3}" r="5"/>"#).unwrap();
    }
}

fn arc_class(c: DClass) -> &'static str {
    match c {
        DClass::Sewing => "arc-sewing",
        DClass::Sliding => "arc-sliding",
        DClass::Escaping => "arc-escaping",
        _ => "arc-tangency",
    }
}

fn d_glyph(k: DSingularityKind) -> &'static str {
    match k {
        DSingularityKind::FzSaddle => "glyph-fz-saddle",
        DSingularityKind::FzNode => "glyph-fz-node",
        DSingularityKind::FoldX => "glyph-fold-x",
        DSingularityKind::FoldY => "glyph-fold-y",
        DSingularityKind::NonElementary => "glyph-nonelementary",
    }
}

fn plane_panel(out: &mut String, z: &PiecewiseField, o: &PortraitOptions, tol: &Tolerances) {
    let w = o.window;
    let f = Frame { w, x0: 0.0 };
    if w.y.0 <= 0.0 && 0.0 <= w.y.1 {
        if let Ok(c) = census(z, w.x, tol) {
            for a in &c.arcs {
                polyline(out, arc_class(a.class), [f.map([a.start, 0.0]), f.map([a.end, 0.0])].into_iter());
            }
            for s in &c.singularities {
                glyph(out, d_glyph(s.kind), f.map([s.x, 0.0]), s.x);
            }
        }
    }
    let n = o.grid.max(1);
    let opts = FlowOptions { h_max: Some(o.streak / 8.0), ..FlowOptions::new(o.streak, w) };
    for (side, class) in [(Side::X, "streak-x"), (Side::Y, "streak-y")] {
        let (ylo, yhi) = match side {
            Side::X => (w.y.0.max(0.0), w.y.1),
            Side::Y => (w.y.0, w.y.1.min(0.0)),
        };
        if !(ylo < yhi) {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                let p = [
                    w.x.0 + (w.x.1 - w.x.0) * (i as f64 + 0.5) / n as f64,
                    ylo + (yhi - ylo) * (j as f64 + 0.5) / n as f64,
                ];
                if let Ok(tr) = integrate_smooth(z.side(side), p, &opts, tol) {
                    polyline(out, class, tr.samples.iter().map(|(_, q)| f.map(*q)));
                }
            }
        }
        for s in interior_singularities(z.side(side), side, w, tol) {
            let class = if s.kind == PointType::Saddle { "glyph-saddle" } else { "glyph-singular" };
            glyph(out, class, f.map(s.point), s.point[0]);
        }
    }
}

/// Disk model: a point at radius `r` is drawn at radius `r / (1 + r)`, so
/// the circle at infinity is the unit circle.
fn disk_panel(out: &mut String, z: &PiecewiseField, o: &PortraitOptions, tol: &Tolerances) {
    let c = (SIZE + SIZE / 2.0, SIZE / 2.0);
    let scale = 0.45 * SIZE;
    let map = |p: [f64; 2]| {
        let r = p[0].hypot(p[1]);
        let k = 1.0 / (1.0 + r);
        (c.0 + scale * p[0] * k, c.1 - scale * p[1] * k)
    };
    writeln!(out, r#"<circle class="infinity-circle" cx="{:.3}" cy="{:.3}" r="{scale:.3}"/>"#, c.0, c.1).unwrap();
    writeln!(out, r#"<line class="axis" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#, c.0 - scale, c.1, c.0 + scale, c.1).unwrap();
    let w = o.window;
    let opts = FlowOptions { h_max: Some(0.05), ..FlowOptions::new(2.0, Window::square(1e3)) };
    let n = o.grid.max(1);
    for (side, class, sign) in [(Side::X, "streak-x", 1.0), (Side::Y, "streak-y", -1.0)] {
        for i in 0..n {
            for j in 0..n {
                let p = [
                    w.x.0 + (w.x.1 - w.x.0) * (i as f64 + 0.5) / n as f64,
                    sign * w.y.1.abs().max(w.y.0.abs()) * (j as f64 + 0.5) / n as f64,
                ];
                if let Ok(tr) = integrate_smooth(z.side(side), p, &opts, tol) {
                    polyline(out, class, tr.samples.iter().map(|(_, q)| map(*q)));
                }
            }
        }
    }
    if let Ok(list) = infinity_singularities(z, tol) {
        for s in list {
            if matches!(s.kind, InfinityKind::FilippovPoint { singular: false, .. }) {
                continue;
            }
            let (sn, cs) = s.theta.sin_cos();
            glyph(out, "glyph-infinity", (c.0 + scale * cs, c.1 - scale * sn), s.theta / PI);
        }
    }
}

pub fn render_svg(z: &PiecewiseField, o: &PortraitOptions, tol: &Tolerances) -> String {
    let width = if o.compactified { 2.0 * SIZE } else { SIZE };
    let mut out = String::new();
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(out, "<!-- filippov {} -->", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{SIZE}" viewBox="0 0 {width} {SIZE}">"#
    )
    .unwrap();
    writeln!(out, "<style>\n{STYLE}</style>").unwrap();
    let w = o.window;
    let valid = w.x.0 < w.x.1 && w.y.0 < w.y.1 && [w.x.0, w.x.1, w.y.0, w.y.1].iter().all(|v| v.is_finite());
    if valid {
        let f = Frame { w, x0: 0.0 };
        if w.y.0 <= 0.0 && 0.0 <= w.y.1 {
            let (a, b) = (f.map([w.x.0, 0.0]), f.map([w.x.1, 0.0]));
            writeln!(out, r#"<line class="axis" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#, a.0, a.1, b.0, b.1).unwrap();
        }
        if w.x.0 <= 0.0 && 0.0 <= w.x.1 {
            let (a, b) = (f.map([0.0, w.y.0]), f.map([0.0, w.y.1]));
            writeln!(out, r#"<line class="axis" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#, a.0, a.1, b.0, b.1).unwrap();
        }
        plane_panel(&mut out, z, o, tol);
        if o.compactified {
            disk_panel(&mut out, z, o, tol);
        }
    } else {
        writeln!(out, r#"<line class="axis" x1="0" y1="{h:.3}" x2="{SIZE:.3}" y2="{h:.3}"/>"#, h = SIZE / 2.0).unwrap();
        writeln!(out, r#"<line class="axis" x1="{h:.3}" y1="0" x2="{h:.3}" y2="{SIZE:.3}"/>"#, h = SIZE / 2.0).unwrap();
    }
    out.push_str("</svg>\n");
    out
}
