//! SVG drawings of networks.
//!
//! Bond stroke widths map the spring-constant band `[k_min, k_max]`
//! linearly onto 1.5–2.5 display millimeters, the printable width range of
//! a physical bond. Fixed nodes draw as triangles, input nodes as dots,
//! output nodes as stars.

use crate::lattice::Network;

/// Marker sets for a drawing. Node ids not listed draw as plain joints.
#[derive(Debug, Clone, Default)]
pub struct RenderOptions {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

/// Stroke width in display millimeters for a spring constant within its
/// band.
pub fn width_mm(k: f64, bounds: (f64, f64)) -> f64 {
    let (lo, hi) = bounds;
    if hi > lo {
        1.5 + (k - lo) / (hi - lo)
    } else {
        2.0
    }
}

/// Render a network to an SVG string. Coordinates are display millimeters;
/// every numeric attribute carries three decimals.
pub fn render_svg(net: &Network, opts: &RenderOptions) -> String {
    // scale geometry so a typical bond is ~15 display-mm long
    let min_rest = net
        .bonds
        .iter()
        .map(|b| b.rest_length)
        .fold(f64::INFINITY, f64::min);
    let scale = if min_rest.is_finite() && min_rest > 0.0 {
        15.0 / min_rest
    } else {
        15.0
    };
    let margin = 10.0;

    let (mut x_min, mut x_max, mut y_min, mut y_max) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for n in &net.nodes {
        x_min = x_min.min(n.position[0]);
        x_max = x_max.max(n.position[0]);
        y_min = y_min.min(n.position[1]);
        y_max = y_max.max(n.position[1]);
    }
    if net.nodes.is_empty() {
        x_min = 0.0;
        x_max = 0.0;
        y_min = 0.0;
        y_max = 0.0;
    }

    let w = (x_max - x_min) * scale + 2.0 * margin;
    let h = (y_max - y_min) * scale + 2.0 * margin;
    let px = |x: f64| (x - x_min) * scale + margin;
    let py = |y: f64| (y_max - y) * scale + margin; // flip: svg y grows down

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {:.3} {:.3}\" width=\"{:.3}mm\" height=\"{:.3}mm\">\n",
        w, h, w, h
    ));

    for b in &net.bonds {
        let pi = net.nodes[b.i].position;
        let pj = net.nodes[b.j].position;
        s.push_str(&format!(
            "  <line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"#333333\" stroke-width=\"{:.3}\" stroke-linecap=\"round\"/>\n",
            px(pi[0]),
            py(pi[1]),
            px(pj[0]),
            py(pj[1]),
            width_mm(b.k, net.k_bounds)
        ));
    }

    for n in &net.nodes {
        let (x, y) = (px(n.position[0]), py(n.position[1]));
        if n.fixed {
            // triangle, point down onto the joint
            s.push_str(&format!(
                "  <polygon points=\"{:.3},{:.3} {:.3},{:.3} {:.3},{:.3}\" fill=\"#2b6cb0\"/>\n",
                x,
                y,
                x - 3.2,
                y - 5.0,
                x + 3.2,
                y - 5.0
            ));
        } else {
            s.push_str(&format!(
                "  <circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"1.100\" fill=\"#555555\"/>\n",
                x, y
            ));
        }
        if opts.inputs.contains(&n.id) {
            s.push_str(&format!(
                "  <circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"2.200\" fill=\"#e53e3e\"/>\n",
                x, y
            ));
        }
        if opts.outputs.contains(&n.id) {
            s.push_str(&format!("  {}\n", star(x, y, 3.5, 1.4)));
        }
    }

    s.push_str("</svg>\n");
    s
}

fn star(cx: f64, cy: f64, r_out: f64, r_in: f64) -> String {
    let mut pts = Vec::with_capacity(10);
    for i in 0..10 {
        let r = if i % 2 == 0 { r_out } else { r_in };
        let a = std::f64::consts::PI * (i as f64 / 5.0) - std::f64::consts::FRAC_PI_2;
        pts.push(format!("{:.3},{:.3}", cx + r * a.cos(), cy + r * a.sin()));
    }
    format!("<polygon points=\"{}\" fill=\"#00a3c4\"/>", pts.join(" "))
}
