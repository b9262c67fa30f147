//! Resistor networks on `Z_n²`, their planar duals, and annulus views.

mod annulus;
mod dual;

pub use annulus::{annulus_views, AnnulusView, Slit};
pub use dual::dual_network;

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::field::{FieldSample, LatticeBox};

/// Log-resistances beyond this magnitude are rejected so that both `r` and `1/r` stay finite.
pub const LOG_RESISTANCE_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub log_resistance: f64,
    pub midpoint: [f64; 2],
}

impl Edge {
    pub fn conductance(&self) -> f64 {
        (-self.log_resistance).exp()
    }

    pub fn resistance(&self) -> f64 {
        self.log_resistance.exp()
    }

    /// The endpoint opposite `x`.
    pub fn other(&self, x: usize) -> usize {
        if self.u == x { self.v } else { self.u }
    }
}

/// Source and sink vertex groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Terminals {
    pub a: Vec<usize>,
    pub z: Vec<usize>,
}

impl Terminals {
    pub fn new(a: Vec<usize>, z: Vec<usize>) -> Result<Self> {
        if a.is_empty() || z.is_empty() {
            return Err(Error::Terminals("terminal groups must be nonempty".into()));
        }
        let mut a = a;
        let mut z = z;
        a.sort_unstable();
        a.dedup();
        z.sort_unstable();
        z.dedup();
        if a.iter().any(|x| z.binary_search(x).is_ok()) {
            return Err(Error::Terminals("source and sink groups overlap".into()));
        }
        Ok(Terminals { a, z })
    }

    pub fn pair(a: usize, z: usize) -> Result<Self> {
        Terminals::new(vec![a], vec![z])
    }

    pub fn check(&self, vertex_count: usize) -> Result<()> {
        if let Some(&bad) = self.a.iter().chain(&self.z).find(|&&x| x >= vertex_count) {
            return Err(Error::Terminals(format!("vertex {bad} is not in the network")));
        }
        Ok(())
    }

    /// 1 for source vertices, -1 for sink vertices, 0 otherwise.
    pub fn roles(&self, vertex_count: usize) -> Vec<i8> {
        let mut r = vec![0i8; vertex_count];
        for &x in &self.a {
            r[x] = 1;
        }
        for &x in &self.z {
            r[x] = -1;
        }
        r
    }

    pub fn swapped(&self) -> Terminals {
        Terminals { a: self.z.clone(), z: self.a.clone() }
    }
}

/// Cell dimensions of a full lattice rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RectShape {
    pub width: usize,
    pub height: usize,
}

impl RectShape {
    pub fn vertex(&self, col: usize, row: usize) -> usize {
        row * (self.width + 1) + col
    }

    pub fn horizontal_edge(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    pub fn vertical_edge(&self, col: usize, row: usize) -> usize {
        (self.height + 1) * self.width + row * (self.width + 1) + col
    }

    pub fn left_column(&self) -> Vec<usize> {
        (0..=self.height).map(|r| self.vertex(0, r)).collect()
    }

    pub fn right_column(&self) -> Vec<usize> {
        (0..=self.height).map(|r| self.vertex(self.width, r)).collect()
    }

    pub fn bottom_row(&self) -> Vec<usize> {
        (0..=self.width).map(|c| self.vertex(c, 0)).collect()
    }

    pub fn top_row(&self) -> Vec<usize> {
        (0..=self.width).map(|c| self.vertex(c, self.height)).collect()
    }
}

/// An undirected, simple resistor network with log-domain resistances.
#[derive(Debug, Clone)]
pub struct Network {
    coords: Vec<[f64; 2]>,
    lattice: Option<Vec<[i64; 2]>>,
    scale: f64,
    edges: Vec<Edge>,
    terminals: Option<Terminals>,
    shape: Option<RectShape>,
    pub provenance: String,
    adj_start: Vec<usize>,
    adj: Vec<(usize, usize)>,
}

impl Network {
    pub fn new(coords: Vec<[f64; 2]>, edges: Vec<Edge>, provenance: impl Into<String>) -> Result<Self> {
        let nv = coords.len();
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            if e.u >= nv || e.v >= nv {
                return Err(Error::Network(format!("edge {i} references a missing vertex")));
            }
            if e.u == e.v {
                return Err(Error::Network(format!("edge {i} is a self-loop")));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(Error::Network(format!("edge {i} duplicates an earlier edge")));
            }
            if !e.log_resistance.is_finite() || e.log_resistance.abs() >= LOG_RESISTANCE_LIMIT {
                return Err(Error::Range(format!(
                    "edge {i} has log-resistance {} outside (-{LOG_RESISTANCE_LIMIT}, {LOG_RESISTANCE_LIMIT})",
                    e.log_resistance
                )));
            }
        }
        let mut deg = vec![0usize; nv + 1];
        for e in &edges {
            deg[e.u + 1] += 1;
            deg[e.v + 1] += 1;
        }
        for i in 0..nv {
            deg[i + 1] += deg[i];
        }
        let mut fill = deg.clone();
        let mut adj = vec![(0, 0); 2 * edges.len()];
        for (i, e) in edges.iter().enumerate() {
            adj[fill[e.u]] = (e.v, i);
            fill[e.u] += 1;
            adj[fill[e.v]] = (e.u, i);
            fill[e.v] += 1;
        }
        Ok(Network {
            coords,
            lattice: None,
            scale: 1.0,
            edges,
            terminals: None,
            shape: None,
            provenance: provenance.into(),
            adj_start: deg,
            adj,
        })
    }

    /// Like [`Network::new`], but parallel edges are merged by adding conductances.
    pub fn new_merging_parallel(coords: Vec<[f64; 2]>, edges: Vec<Edge>, provenance: impl Into<String>) -> Result<Self> {
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut merged: Vec<(Edge, f64)> = Vec::new();
        for e in edges {
            if e.u == e.v {
                continue;
            }
            let key = (e.u.min(e.v), e.u.max(e.v));
            match index.get(&key) {
                Some(&i) => merged[i].1 += e.conductance(),
                None => {
                    index.insert(key, merged.len());
                    merged.push((e, e.conductance()));
                }
            }
        }
        let edges = merged
            .into_iter()
            .map(|(e, c)| Edge { log_resistance: -c.ln(), ..e })
            .collect();
        Network::new(coords, edges, provenance)
    }

    /// A full lattice rectangle over `bounds`; `log_r` receives the endpoints of each edge.
    ///
    /// Vertices are numbered row by row; horizontal edges come first, then vertical ones.
    pub fn lattice_rectangle(
        bounds: LatticeBox,
        scale: f64,
        mut log_r: impl FnMut([i64; 2], [i64; 2]) -> Result<f64>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Domain("empty box".into()));
        }
        let shape = RectShape { width: bounds.width() as usize, height: bounds.height() as usize };
        let mut lattice = Vec::with_capacity(bounds.vertex_count());
        for y in bounds.y_min..=bounds.y_max {
            for x in bounds.x_min..=bounds.x_max {
                lattice.push([x, y]);
            }
        }
        let coords = lattice.iter().map(|p| [p[0] as f64 / scale, p[1] as f64 / scale]).collect();
        let mut edges = Vec::with_capacity(2 * lattice.len());
        let mut push = |p: [i64; 2], q: [i64; 2], u: usize, v: usize| -> Result<()> {
            edges.push(Edge {
                u,
                v,
                log_resistance: log_r(p, q)?,
                midpoint: [(p[0] + q[0]) as f64 / (2.0 * scale), (p[1] + q[1]) as f64 / (2.0 * scale)],
            });
            Ok(())
        };
        for r in 0..=shape.height {
            for c in 0..shape.width {
                let p = [bounds.x_min + c as i64, bounds.y_min + r as i64];
                push(p, [p[0] + 1, p[1]], shape.vertex(c, r), shape.vertex(c + 1, r))?;
            }
        }
        for r in 0..shape.height {
            for c in 0..=shape.width {
                let p = [bounds.x_min + c as i64, bounds.y_min + r as i64];
                push(p, [p[0], p[1] + 1], shape.vertex(c, r), shape.vertex(c, r + 1))?;
            }
        }
        let mut net = Network::new(coords, edges, provenance)?;
        net.lattice = Some(lattice);
        net.scale = scale;
        net.shape = Some(shape);
        Ok(net)
    }

    /// `W × H`-cell rectangle of unit resistors with unit spacing.
    pub fn uniform_rectangle(width: usize, height: usize) -> Result<Self> {
        Network::lattice_rectangle(
            LatticeBox::new(0, width as i64, 0, height as i64),
            1.0,
            |_, _| Ok(0.0),
            format!("uniform {width}x{height} rectangle"),
        )
    }

    /// A path `0 - 1 - ... - (len-1)` with the given conductances.
    pub fn path(conductances: &[f64]) -> Result<Self> {
        let coords = (0..=conductances.len()).map(|i| [i as f64, 0.0]).collect();
        let edges = conductances
            .iter()
            .enumerate()
            .map(|(i, &c)| Edge { u: i, v: i + 1, log_resistance: -c.ln(), midpoint: [i as f64 + 0.5, 0.0] })
            .collect();
        Network::new(coords, edges, "path")
    }

    pub fn vertex_count(&self) -> usize {
        self.coords.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    /// Lattice spacings per unit length.
    pub fn lattice_scale(&self) -> f64 {
        self.scale
    }

    pub fn lattice_coords(&self) -> Option<&[[i64; 2]]> {
        self.lattice.as_deref()
    }

    pub fn shape(&self) -> Option<RectShape> {
        self.shape
    }

    pub fn terminals(&self) -> Option<&Terminals> {
        self.terminals.as_ref()
    }

    pub fn with_terminals(mut self, t: Terminals) -> Result<Self> {
        t.check(self.vertex_count())?;
        self.terminals = Some(t);
        Ok(self)
    }

    pub fn with_lattice(mut self, lattice: Vec<[i64; 2]>, scale: f64) -> Result<Self> {
        if lattice.len() != self.vertex_count() {
            return Err(Error::Network("lattice coordinate count mismatch".into()));
        }
        self.lattice = Some(lattice);
        self.scale = scale;
        Ok(self)
    }

    /// Left and right columns of a rectangle as source and sink.
    pub fn left_right_terminals(&self) -> Result<Terminals> {
        let s = self.shape.ok_or_else(|| Error::Shape("network is not a full rectangle".into()))?;
        if s.width == 0 {
            return Err(Error::Shape("rectangle has zero width".into()));
        }
        Terminals::new(s.left_column(), s.right_column())
    }

    /// Bottom and top rows of a rectangle as source and sink.
    pub fn bottom_top_terminals(&self) -> Result<Terminals> {
        let s = self.shape.ok_or_else(|| Error::Shape("network is not a full rectangle".into()))?;
        if s.height == 0 {
            return Err(Error::Shape("rectangle has zero height".into()));
        }
        Terminals::new(s.bottom_row(), s.top_row())
    }

    /// `(neighbour, edge)` pairs of `v`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[self.adj_start[v]..self.adj_start[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj_start[v + 1] - self.adj_start[v]
    }

    /// Total conductance at `v`.
    pub fn conductance_mass(&self, v: usize) -> f64 {
        self.neighbors(v).iter().map(|&(_, e)| self.edges[e].conductance()).sum()
    }

    /// Index of the vertex at lattice position `p`, if any.
    pub fn find_lattice(&self, p: [i64; 2]) -> Option<usize> {
        let lat = self.lattice.as_ref()?;
        if let Some(s) = self.shape {
            let origin = lat[0];
            let (c, r) = (p[0] - origin[0], p[1] - origin[1]);
            if c < 0 || r < 0 || c as usize > s.width || r as usize > s.height {
                return None;
            }
            return Some(s.vertex(c as usize, r as usize));
        }
        lat.iter().position(|&q| q == p)
    }

    pub fn lattice_index(&self) -> Option<HashMap<[i64; 2], usize>> {
        Some(self.lattice.as_ref()?.iter().enumerate().map(|(i, &p)| (p, i)).collect())
    }

    /// The same network with the listed edges removed; vertex indices are unchanged.
    pub fn without_edges(&self, removed: &[usize]) -> Result<Self> {
        let mut drop = vec![false; self.edge_count()];
        for &e in removed {
            drop[e] = true;
        }
        let edges = self.edges.iter().zip(&drop).filter(|(_, &d)| !d).map(|(e, _)| *e).collect();
        let mut net = Network::new(self.coords.clone(), edges, format!("{} minus {} edges", self.provenance, removed.len()))?;
        net.lattice = self.lattice.clone();
        net.scale = self.scale;
        net.terminals = self.terminals.clone();
        Ok(net)
    }

    /// The same graph with every edge's log-resistance replaced.
    pub fn with_log_resistances(&self, log_r: &[f64]) -> Result<Self> {
        if log_r.len() != self.edge_count() {
            return Err(Error::Network("log-resistance count mismatch".into()));
        }
        let edges = self.edges.iter().zip(log_r).map(|(e, &l)| Edge { log_resistance: l, ..*e }).collect();
        let mut net = Network::new(self.coords.clone(), edges, self.provenance.clone())?;
        net.lattice = self.lattice.clone();
        net.scale = self.scale;
        net.terminals = self.terminals.clone();
        net.shape = self.shape;
        Ok(net)
    }

    /// Merge each group into a single vertex. Returns the contracted network and the vertex map.
    pub fn contract(&self, groups: &[&[usize]]) -> Result<(Network, Vec<usize>)> {
        let nv = self.vertex_count();
        let mut rep: Vec<Option<usize>> = vec![None; nv];
        for (gi, g) in groups.iter().enumerate() {
            for &x in g.iter() {
                if x >= nv {
                    return Err(Error::Terminals(format!("vertex {x} is not in the network")));
                }
                if rep[x].is_some() {
                    return Err(Error::Terminals(format!("vertex {x} appears in two groups")));
                }
                rep[x] = Some(gi);
            }
        }
        let mut map = vec![usize::MAX; nv];
        let mut coords: Vec<[f64; 2]> = Vec::new();
        let mut group_node = vec![usize::MAX; groups.len()];
        let mut group_sums = vec![([0.0, 0.0], 0usize); groups.len()];
        for x in 0..nv {
            match rep[x] {
                Some(g) => {
                    if group_node[g] == usize::MAX {
                        group_node[g] = coords.len();
                        coords.push([0.0, 0.0]);
                    }
                    map[x] = group_node[g];
                    let s = &mut group_sums[g];
                    s.0[0] += self.coords[x][0];
                    s.0[1] += self.coords[x][1];
                    s.1 += 1;
                }
                None => {
                    map[x] = coords.len();
                    coords.push(self.coords[x]);
                }
            }
        }
        for (g, &node) in group_node.iter().enumerate() {
            if node != usize::MAX {
                let (s, c) = group_sums[g];
                coords[node] = [s[0] / c as f64, s[1] / c as f64];
            }
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { u: map[e.u], v: map[e.v], ..*e })
            .collect();
        let net = Network::new_merging_parallel(coords, edges, format!("{} contracted", self.provenance))?;
        Ok((net, map))
    }

    /// Index of the edge joining the lattice positions `p` and `q` of a rectangle.
    pub fn rectangle_edge(&self, p: [i64; 2], q: [i64; 2]) -> Option<usize> {
        let s = self.shape?;
        let origin = self.lattice.as_ref()?[0];
        let (lo, hi) = if (p[0], p[1]) <= (q[0], q[1]) { (p, q) } else { (q, p) };
        let (c, r) = (lo[0] - origin[0], lo[1] - origin[1]);
        if c < 0 || r < 0 {
            return None;
        }
        let (c, r) = (c as usize, r as usize);
        match (hi[0] - lo[0], hi[1] - lo[1]) {
            (1, 0) if c < s.width && r <= s.height => Some(s.horizontal_edge(c, r)),
            (0, 1) if c <= s.width && r < s.height => Some(s.vertical_edge(c, r)),
            _ => None,
        }
    }

    /// The full sub-rectangle over `bounds`, with the parent's resistances.
    pub fn sub_rectangle(&self, bounds: LatticeBox) -> Result<Network> {
        if self.lattice.is_none() {
            return Err(Error::Shape("network has no lattice coordinates".into()));
        }
        Network::lattice_rectangle(
            bounds,
            self.scale,
            |p, q| {
                self.rectangle_edge(p, q)
                    .map(|e| self.edges[e].log_resistance)
                    .ok_or_else(|| Error::Domain(format!("{bounds:?} is not inside the network")))
            },
            format!("window {bounds:?} of {}", self.provenance),
        )
    }

    /// Connected components as a label per vertex.
    pub fn components(&self) -> Vec<usize> {
        let nv = self.vertex_count();
        let mut label = vec![usize::MAX; nv];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..nv {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            stack.push(s);
            while let Some(x) = stack.pop() {
                for &(y, _) in self.neighbors(x) {
                    if label[y] == usize::MAX {
                        label[y] = next;
                        stack.push(y);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Edge-list export: a header `network 1 <vertices> <edges>` then `u v mx my log_r` per edge.
    pub fn write_edge_list(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "network 1 {} {}", self.vertex_count(), self.edge_count())?;
        for e in &self.edges {
            writeln!(
                w,
                "{} {} {:.16e} {:.16e} {:.16e}",
                e.u, e.v, e.midpoint[0], e.midpoint[1], e.log_resistance
            )?;
        }
        Ok(())
    }
}

/// The resistor network on `Z_n² ∩ bounds` with `log r_e = γ φ(m_e)`.
pub fn build_network(sample: &FieldSample, gamma: f64, bounds: LatticeBox) -> Result<Network> {
    if bounds.is_empty() {
        return Err(Error::Domain("empty box".into()));
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::Range(format!("gamma = {gamma} must be finite and non-negative")));
    }
    if !sample.grid.bounds.contains_box(&bounds) {
        return Err(Error::Domain(format!("{bounds:?} is not inside the sampled box {:?}", sample.grid.bounds)));
    }
    Network::lattice_rectangle(
        bounds,
        sample.grid.scale(),
        |p, q| {
            let phi = sample.at_midpoint(p, q).ok_or_else(|| Error::Domain("midpoint outside sample".into()))?;
            let l = gamma * phi;
            if l.abs() >= LOG_RESISTANCE_LIMIT {
                return Err(Error::Range(format!("gamma * field = {l} exceeds the overflow guard")));
            }
            Ok(l)
        },
        format!(
            "n={} zeta={} gamma={gamma} seed={} kernel={:?}({},{})",
            sample.grid.n, sample.grid.zeta, sample.seed, sample.kernel.kind, sample.kernel.m, sample.kernel.n
        ),
    )
}
