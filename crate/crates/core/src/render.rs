//! SVG rendering of space-time diagrams.
//!
//! Coordinates are converted to `f64` here and nowhere else.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::scalar::ExactScalar;
use crate::simulator::SpaceTimeDiagram;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone)]
pub struct RenderOptions {
    pub width: u32,
    pub height: u32,
    pub time_up: bool,
    /// Stroke colour per signal name; unlisted signals cycle through a palette.
    pub colors: BTreeMap<String, String>,
    pub decimals: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { width: 800, height: 600, time_up: true, colors: BTreeMap::new(), decimals: 3 }
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    t0: f64,
    t1: f64,
    w: f64,
    h: f64,
    time_up: bool,
}

impl Frame {
    fn px(&self, x: f64, t: f64) -> (f64, f64) {
        let u = (x - self.x0) / (self.x1 - self.x0) * self.w;
        let v = (t - self.t0) / (self.t1 - self.t0) * self.h;
        (u, if self.time_up { self.h - v } else { v })
    }
}

fn widen(lo: f64, hi: f64) -> (f64, f64) {
    let (lo, hi) = if hi - lo < 1e-12 { (lo - 1.0, hi + 1.0) } else { (lo, hi) };
    let m = (hi - lo) * 0.05;
    (lo - m, hi + m)
}

/// Renders the diagram, drawing unfinished segments up to the horizon.
///
/// `accumulation` marks a point such as a certified limit.
pub fn render_svg<S: ExactScalar>(
    diagram: &SpaceTimeDiagram<S>,
    opts: &RenderOptions,
    accumulation: Option<(&S, &S)>,
) -> String {
    let machine = &diagram.machine;
    let top = match &diagram.horizon {
        Some(h) => h.to_f64(),
        None => {
            let last = diagram.last_time().to_f64();
            last + last.abs().max(1.0) * 0.25
        }
    };
    let mut lines = Vec::with_capacity(diagram.segments.len());
    for seg in &diagram.segments {
        let (sx, st) = (seg.start.0.to_f64(), seg.start.1.to_f64());
        let (ex, et) = match &seg.end {
            Some((x, t)) => (x.to_f64(), t.to_f64()),
            None => (sx + machine.speed(seg.signal).to_f64() * (top - st), top),
        };
        lines.push((seg.signal, sx, st, ex, et));
    }
    let mut xs: Vec<f64> = lines.iter().flat_map(|l| [l.1, l.3]).collect();
    let mut ts: Vec<f64> = vec![0.0, top];
    if let Some((x, t)) = accumulation {
        xs.push(x.to_f64());
        ts.push(t.to_f64());
    }
    let fold = |v: &[f64]| v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let (x0, x1) = if xs.is_empty() { (-1.0, 1.0) } else { widen(fold(&xs).0, fold(&xs).1) };
    let (t0, t1) = widen(fold(&ts).0, fold(&ts).1);
    let (w, h) = (opts.width as f64, opts.height as f64);
    let f = Frame { x0, x1, t0, t1, w, h, time_up: opts.time_up };
    let d = opts.decimals;

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        opts.width, opts.height, opts.width, opts.height
    )
    .unwrap();
    writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##).unwrap();

    let (ax, ay) = f.px(x0, 0.0);
    let (bx, _) = f.px(x1, 0.0);
    let (_, ty) = f.px(x0, t1);
    writeln!(out, r##"<g class="axes" stroke="#999999" stroke-width="0.5">"##).unwrap();
    writeln!(out, r#"<line x1="{ax:.2}" y1="{ay:.2}" x2="{bx:.2}" y2="{ay:.2}"/>"#).unwrap();
    let (zx, _) = f.px(0.0_f64.clamp(x0, x1), 0.0);
    writeln!(out, r#"<line x1="{zx:.2}" y1="{ay:.2}" x2="{zx:.2}" y2="{ty:.2}"/>"#).unwrap();
    writeln!(out, "</g>").unwrap();
    let label_y = if opts.time_up { ay + 12.0 } else { ay - 4.0 };
    writeln!(out, r##"<g class="labels" font-family="monospace" font-size="10" fill="#555555">"##).unwrap();
    writeln!(out, r#"<text x="{:.2}" y="{label_y:.2}">{:.d$}</text>"#, ax + 2.0, x0 + (x1 - x0) / 21.0).unwrap();
    writeln!(
        out,
        r#"<text x="{:.2}" y="{label_y:.2}" text-anchor="end">{:.d$}</text>"#,
        bx - 2.0,
        x1 - (x1 - x0) / 21.0
    )
    .unwrap();
    writeln!(out, r#"<text x="{:.2}" y="{:.2}">t={top:.d$}</text>"#, zx + 3.0, f.px(0.0, top).1).unwrap();
    writeln!(out, "</g>").unwrap();

    writeln!(out, r#"<g class="signals" stroke-width="1" fill="none">"#).unwrap();
    for (id, sx, st, ex, et) in &lines {
        let name = machine.name(*id);
        let color = opts.colors.get(name).map(String::as_str).unwrap_or(PALETTE[id % PALETTE.len()]);
        let (a, b) = f.px(*sx, *st);
        let (c, e) = f.px(*ex, *et);
        writeln!(out, r#"<polyline data-signal="{name}" stroke="{color}" points="{a:.2},{b:.2} {c:.2},{e:.2}"/>"#)
            .unwrap();
    }
    writeln!(out, "</g>").unwrap();

    writeln!(out, r##"<g class="events" fill="#000000">"##).unwrap();
    for ev in &diagram.events {
        let (u, v) = f.px(ev.position.to_f64(), ev.time.to_f64());
        writeln!(out, r#"<circle cx="{u:.2}" cy="{v:.2}" r="1.5"/>"#).unwrap();
    }
    writeln!(out, "</g>").unwrap();

    if let Some((x, t)) = accumulation {
        let (u, v) = f.px(x.to_f64(), t.to_f64());
        writeln!(
            out,
            r##"<g class="accumulation" stroke="#e00000" fill="none"><circle cx="{u:.2}" cy="{v:.2}" r="5"/><line x1="{:.2}" y1="{v:.2}" x2="{:.2}" y2="{v:.2}"/></g>"##,
            u - 8.0,
            u + 8.0
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}
