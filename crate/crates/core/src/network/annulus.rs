use std::collections::HashMap;

use super::{Edge, Network, Terminals};
use crate::error::{Error, Result};

/// Direction of the ray along which the ring is cut open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Slit {
    #[default]
    PosX,
    NegX,
    PosY,
    NegY,
}

impl Slit {
    fn direction(self) -> [i64; 2] {
        match self {
            Slit::PosX => [1, 0],
            Slit::NegX => [-1, 0],
            Slit::PosY => [0, 1],
            Slit::NegY => [0, -1],
        }
    }
}

/// A square ring `r_inner ≤ |x - center|_∞ ≤ r_outer` of a lattice network.
#[derive(Debug, Clone)]
pub struct AnnulusView {
    pub center: [i64; 2],
    pub r_inner: i64,
    pub r_outer: i64,
    pub slit: Slit,
    /// Induced network on the ring vertices.
    pub ring: Network,
    /// Ring vertex to vertex of the parent network.
    pub ring_vertices: Vec<usize>,
    /// Ring edge to edge of the parent network.
    pub ring_edges: Vec<usize>,
    pub inner: Vec<usize>,
    pub outer: Vec<usize>,
    /// Signed slit crossing of each ring edge, oriented `u → v`.
    pub jumps: Vec<f64>,
    /// Ring cut along the slit, slit vertices doubled; terminals are the two copies.
    pub around: Network,
    /// Parent edges with an endpoint strictly inside the hole.
    pub hole_edges: Vec<usize>,
}

fn linf(p: [i64; 2], c: [i64; 2]) -> i64 {
    (p[0] - c[0]).abs().max((p[1] - c[1]).abs())
}

/// Cut a square annulus out of a lattice network.
pub fn annulus_views(net: &Network, center: [i64; 2], r_inner: i64, r_outer: i64, slit: Slit) -> Result<AnnulusView> {
    let lattice = net
        .lattice_coords()
        .ok_or_else(|| Error::Domain("annulus views need lattice coordinates".into()))?;
    if r_inner < 1 || r_outer < r_inner {
        return Err(Error::Domain(format!("radii must satisfy 1 <= {r_inner} <= {r_outer}")));
    }
    let index = net.lattice_index().expect("lattice present");
    let reach = r_outer + 1;
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            if !index.contains_key(&[center[0] + dx, center[1] + dy]) {
                return Err(Error::Domain("annulus touches the network boundary".into()));
            }
        }
    }

    let mut local = vec![usize::MAX; net.vertex_count()];
    let mut ring_vertices = Vec::new();
    for (i, &p) in lattice.iter().enumerate() {
        let d = linf(p, center);
        if (r_inner..=r_outer).contains(&d) {
            local[i] = ring_vertices.len();
            ring_vertices.push(i);
        }
    }
    let ring_lattice: Vec<[i64; 2]> = ring_vertices.iter().map(|&i| lattice[i]).collect();
    let inner = (0..ring_vertices.len()).filter(|&i| linf(ring_lattice[i], center) == r_inner).collect();
    let outer = (0..ring_vertices.len()).filter(|&i| linf(ring_lattice[i], center) == r_outer).collect();

    let mut ring_edges = Vec::new();
    let mut edges = Vec::new();
    let mut hole_edges = Vec::new();
    for (k, e) in net.edges().iter().enumerate() {
        if linf(lattice[e.u], center) < r_inner || linf(lattice[e.v], center) < r_inner {
            hole_edges.push(k);
        }
        if local[e.u] != usize::MAX && local[e.v] != usize::MAX {
            ring_edges.push(k);
            edges.push(Edge { u: local[e.u], v: local[e.v], ..*e });
        }
    }
    let coords: Vec<[f64; 2]> = ring_vertices.iter().map(|&i| net.coords()[i]).collect();
    let ring = Network::new(coords.clone(), edges.clone(), format!("ring of {}", net.provenance))?
        .with_lattice(ring_lattice.clone(), net.lattice_scale())?;

    // Slit bookkeeping: an endpoint on the slit attaches to its + copy when
    // the edge leaves on the counter-clockwise side or runs along the slit.
    let dir = slit.direction();
    let normal = [-dir[1], dir[0]];
    let on_slit = |p: [i64; 2]| {
        let o = [p[0] - center[0], p[1] - center[1]];
        let along = o[0] * dir[0] + o[1] * dir[1];
        o[0] * normal[0] + o[1] * normal[1] == 0 && along >= r_inner && along <= r_outer
    };
    let plus_end = |x: usize, y: usize| -> bool {
        let (p, q) = (ring_lattice[x], ring_lattice[y]);
        if !on_slit(p) {
            return false;
        }
        let side = (q[0] - p[0]) * normal[0] + (q[1] - p[1]) * normal[1];
        side > 0 || (side == 0 && on_slit(q))
    };
    let slit_vertices: Vec<usize> = (0..ring_lattice.len()).filter(|&i| on_slit(ring_lattice[i])).collect();
    let mut plus_copy = HashMap::new();
    let mut around_coords = coords.clone();
    let mut around_lattice = ring_lattice.clone();
    for &s in &slit_vertices {
        plus_copy.insert(s, around_coords.len());
        around_coords.push(coords[s]);
        around_lattice.push(ring_lattice[s]);
    }
    let mut jumps = Vec::with_capacity(edges.len());
    let mut around_edges = Vec::with_capacity(edges.len());
    for e in &edges {
        let pu = plus_end(e.u, e.v);
        let pv = plus_end(e.v, e.u);
        jumps.push(f64::from(u8::from(pu)) - f64::from(u8::from(pv)));
        let u = if pu { plus_copy[&e.u] } else { e.u };
        let v = if pv { plus_copy[&e.v] } else { e.v };
        around_edges.push(Edge { u, v, ..*e });
    }
    let plus: Vec<usize> = slit_vertices.iter().map(|s| plus_copy[s]).collect();
    let around = Network::new(around_coords, around_edges, format!("slit ring of {}", net.provenance))?
        .with_lattice(around_lattice, net.lattice_scale())?
        .with_terminals(Terminals::new(plus, slit_vertices)?)?;

    Ok(AnnulusView {
        center,
        r_inner,
        r_outer,
        slit,
        ring,
        ring_vertices,
        ring_edges,
        inner,
        outer,
        jumps,
        around,
        hole_edges,
    })
}

impl AnnulusView {
    /// The ring with inner and outer boundaries as terminals; `None` for a single loop.
    pub fn across(&self) -> Option<Network> {
        if self.r_inner == self.r_outer {
            return None;
        }
        let t = Terminals::new(self.inner.clone(), self.outer.clone()).ok()?;
        self.ring.clone().with_terminals(t).ok()
    }

    /// Face dual of the ring with a hole node and an outside node as terminals.
    ///
    /// Crossing resistance of the dual between its terminals is the reciprocal
    /// of the around resistance of the ring.
    pub fn dual(&self) -> Result<Network> {
        let lat = self.ring.lattice_coords().expect("ring has lattice coordinates");
        let c = self.center;
        // face keyed by its lower-left corner; twice the L∞ distance of its centre
        let face_dist = |ll: [i64; 2]| (2 * (ll[0] - c[0]) + 1).abs().max((2 * (ll[1] - c[1]) + 1).abs());
        let is_ring_face = |ll: [i64; 2]| {
            let d = face_dist(ll);
            d >= 2 * self.r_inner + 1 && d <= 2 * self.r_outer - 1
        };
        let mut faces: HashMap<[i64; 2], usize> = HashMap::new();
        let mut coords = Vec::new();
        let spacing = 1.0 / self.ring.lattice_scale();
        let origin = {
            let p = lat[0];
            let x = self.ring.coords()[0];
            [x[0] - p[0] as f64 * spacing, x[1] - p[1] as f64 * spacing]
        };
        for y in c[1] - self.r_outer..c[1] + self.r_outer {
            for x in c[0] - self.r_outer..c[0] + self.r_outer {
                if is_ring_face([x, y]) {
                    faces.insert([x, y], coords.len());
                    coords.push([origin[0] + (x as f64 + 0.5) * spacing, origin[1] + (y as f64 + 0.5) * spacing]);
                }
            }
        }
        let hole = coords.len();
        coords.push([origin[0] + c[0] as f64 * spacing, origin[1] + c[1] as f64 * spacing]);
        let outside = coords.len();
        coords.push([origin[0] + (c[0] + self.r_outer + 1) as f64 * spacing, origin[1] + c[1] as f64 * spacing]);
        let node = |ll: [i64; 2]| -> usize {
            match faces.get(&ll) {
                Some(&i) => i,
                None if face_dist(ll) < 2 * self.r_inner + 1 => hole,
                None => outside,
            }
        };
        let mut edges = Vec::with_capacity(self.ring.edge_count());
        for e in self.ring.edges() {
            let (p, q) = (lat[e.u], lat[e.v]);
            let lo = [p[0].min(q[0]), p[1].min(q[1])];
            let (a, b) = if p[1] == q[1] {
                (node([lo[0], lo[1] - 1]), node(lo))
            } else {
                (node([lo[0] - 1, lo[1]]), node(lo))
            };
            edges.push(Edge { u: a, v: b, log_resistance: -e.log_resistance, midpoint: e.midpoint });
        }
        Network::new_merging_parallel(coords, edges, "annulus dual")?.with_terminals(Terminals::pair(hole, outside)?)
    }
}
