use std::fmt::Write as _;

use crate::pipeline::PipelineArtifacts;
use crate::plane::{Point, Square};

/// Renders every geometric artifact of a run into a standalone SVG string:
/// the Whitney decomposition (grey), selected squares (blue), circle supports
/// (green), discretized data atoms (black), dilated growth balls (orange),
/// absorbing squares (red), high-transform balls (purple), and dominance
/// squares (brown). The vertical axis is flipped so the picture matches the
/// usual mathematical orientation.
pub fn pipeline_svg(art: &PipelineArtifacts) -> String {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut grow = |p: Point| {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    };
    if !art.omega.is_empty() {
        let (a, b) = art.omega.grid_bbox();
        grow(a);
        grow(b);
    }
    for ws in &art.whitney.squares {
        grow(ws.square.corner_lo());
        grow(ws.square.corner_hi());
    }
    for b in &art.exceptional.h.dilated {
        grow(Point::new(b.center.x - b.radius, b.center.y - b.radius));
        grow(Point::new(b.center.x + b.radius, b.center.y + b.radius));
    }
    for &(p, _) in art.e_atoms.atoms() {
        grow(p);
    }
    for c in &art.circles.circles {
        grow(Point::new(c.center.x - c.radius, c.center.y - c.radius));
        grow(Point::new(c.center.x + c.radius, c.center.y + c.radius));
    }
    if !(lo.x.is_finite() && hi.x.is_finite()) {
        return String::from("<svg xmlns=\"http://www.w3.org/2000/svg\"/>");
    }
    let extent = (hi.x - lo.x).max(hi.y - lo.y).max(1e-9);
    let pad = extent * 0.05;
    lo = Point::new(lo.x - pad, lo.y - pad);
    hi = Point::new(hi.x + pad, hi.y + pad);
    let width = hi.x - lo.x;
    let height = hi.y - lo.y;
    let stroke = art.whitney.rho * 0.3;
    let tx = |x: f64| x - lo.x;
    let ty = |y: f64| hi.y - y;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width:.6} {height:.6}\">"
    );
    let rect = |out: &mut String, s: Square, style: &str| {
        let c = s.corner_lo();
        let top = ty(c.y + s.side);
        let _ = writeln!(
            out,
            "<rect x=\"{:.6}\" y=\"{:.6}\" width=\"{:.6}\" height=\"{:.6}\" {style}/>",
            tx(c.x),
            top,
            s.side,
            s.side
        );
    };
    let circle = |out: &mut String, c: Point, r: f64, style: &str| {
        let _ = writeln!(
            out,
            "<circle cx=\"{:.6}\" cy=\"{:.6}\" r=\"{:.6}\" {style}/>",
            tx(c.x),
            ty(c.y),
            r
        );
    };

    let grey = format!("fill=\"none\" stroke=\"#999999\" stroke-width=\"{stroke:.6}\"");
    for ws in &art.whitney.squares {
        rect(&mut out, ws.square, &grey);
    }
    let red = "fill=\"#dd2222\" fill-opacity=\"0.5\" stroke=\"none\"";
    for q in &art.exceptional.hd.squares {
        rect(&mut out, art.lattice.to_square(*q), red);
    }
    let brown = "fill=\"#8b5a2b\" fill-opacity=\"0.4\" stroke=\"none\"";
    for t in &art.exceptional.td.squares {
        rect(&mut out, art.lattice.to_square(t.square), brown);
    }
    let purple = format!("fill=\"none\" stroke=\"#8844cc\" stroke-width=\"{stroke:.6}\"");
    for b in &art.exceptional.s.balls {
        circle(&mut out, b.center, b.radius, &purple);
    }
    let blue = format!("fill=\"none\" stroke=\"#2255dd\" stroke-width=\"{:.6}\"", stroke * 2.0);
    for s in &art.f_squares {
        rect(&mut out, *s, &blue);
    }
    let green = format!("fill=\"none\" stroke=\"#22aa44\" stroke-width=\"{stroke:.6}\"");
    for c in &art.circles.circles {
        circle(&mut out, c.center, c.radius, &green);
    }
    let orange = format!("fill=\"none\" stroke=\"#ee8800\" stroke-width=\"{stroke:.6}\"");
    for b in &art.exceptional.h.dilated {
        circle(&mut out, b.center, b.radius, &orange);
    }
    let black = "fill=\"#000000\" stroke=\"none\"";
    for &(p, _) in art.e_atoms.atoms() {
        circle(&mut out, p, stroke * 1.5, black);
    }
    out.push_str("</svg>\n");
    out
}
