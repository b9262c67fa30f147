use super::{Edge, Network, Terminals};
use crate::error::{Error, Result};

/// Face dual of a full rectangle whose left and right columns are the terminals.
///
/// Dual vertices are the `W·H` unit faces (row by row) followed by a bottom
/// and a top outer node. Every primal edge except the vertical edges inside
/// the two terminal columns is crossed by exactly one dual edge with the same
/// midpoint and negated log-resistance. The returned network carries
/// `{top}, {bottom}` as terminals.
pub fn dual_network(net: &Network) -> Result<Network> {
    let s = net.shape().ok_or_else(|| Error::Shape("dual requires a full rectangle".into()))?;
    if s.width == 0 || s.height == 0 {
        return Err(Error::Shape(format!("degenerate {}x{} rectangle", s.width, s.height)));
    }
    if let Some(t) = net.terminals() {
        if *t != net.left_right_terminals()? && *t != net.left_right_terminals()?.swapped() {
            return Err(Error::Shape("terminals are not the left and right columns".into()));
        }
    }
    let (w, h) = (s.width, s.height);
    let face = |c: usize, r: usize| r * w + c;
    let bottom = w * h;
    let top = w * h + 1;

    let coords = net.coords();
    let corner = |c: usize, r: usize| coords[s.vertex(c, r)];
    let mut dual_coords = Vec::with_capacity(w * h + 2);
    for r in 0..h {
        for c in 0..w {
            let (p, q) = (corner(c, r), corner(c + 1, r + 1));
            dual_coords.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
        }
    }
    let (lo, hi) = (corner(0, 0), corner(w, h));
    let cell = corner(0, 1)[1] - lo[1];
    let mid_x = 0.5 * (lo[0] + hi[0]);
    dual_coords.push([mid_x, lo[1] - 0.5 * cell]);
    dual_coords.push([mid_x, hi[1] + 0.5 * cell]);

    let mut edges = Vec::with_capacity(net.edge_count());
    for r in 0..=h {
        for c in 0..w {
            let e = net.edge(s.horizontal_edge(c, r));
            let below = if r == 0 { bottom } else { face(c, r - 1) };
            let above = if r == h { top } else { face(c, r) };
            edges.push(Edge { u: below, v: above, log_resistance: -e.log_resistance, midpoint: e.midpoint });
        }
    }
    for r in 0..h {
        for c in 1..w {
            let e = net.edge(s.vertical_edge(c, r));
            edges.push(Edge { u: face(c - 1, r), v: face(c, r), log_resistance: -e.log_resistance, midpoint: e.midpoint });
        }
    }
    Network::new(dual_coords, edges, format!("dual of {}", net.provenance))?.with_terminals(Terminals::pair(top, bottom)?)
}
