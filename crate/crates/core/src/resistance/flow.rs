//! Max-flow / min-cut on undirected capacitated networks.

use std::collections::VecDeque;

use super::SolveResult;
use crate::error::{Error, Result};
use crate::network::{Network, Terminals};

const CUTOFF: f64 = 1e-12;

/// Maximum flow between terminal groups and a minimum cut certifying it.
#[derive(Debug, Clone)]
pub struct MaxFlow {
    pub value: f64,
    /// Edges from the source side of the cut to the sink side.
    pub cut: Vec<usize>,
    pub cut_capacity: f64,
    /// Flow through each edge, positive in the `u → v` direction.
    pub flow: Vec<f64>,
}

struct Arc {
    to: usize,
    cap: f64,
    edge: usize,
}

struct Dinic {
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
    level: Vec<i64>,
    next: Vec<usize>,
}

impl Dinic {
    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            for &a in &self.out[x] {
                let arc = &self.arcs[a];
                if arc.cap > CUTOFF && self.level[arc.to] < 0 {
                    self.level[arc.to] = self.level[x] + 1;
                    q.push_back(arc.to);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, x: usize, t: usize, pushed: f64) -> f64 {
        if x == t {
            return pushed;
        }
        while self.next[x] < self.out[x].len() {
            let a = self.out[x][self.next[x]];
            let (to, cap) = (self.arcs[a].to, self.arcs[a].cap);
            if cap > CUTOFF && self.level[to] == self.level[x] + 1 {
                let got = self.dfs(to, t, pushed.min(cap));
                if got > 0.0 {
                    self.arcs[a].cap -= got;
                    self.arcs[a ^ 1].cap += got;
                    return got;
                }
            }
            self.next[x] += 1;
        }
        0.0
    }
}

/// Contracted node of each vertex: 0 for the source group, 1 for the sink group.
fn contract_nodes(net: &Network, t: &Terminals) -> (Vec<usize>, usize) {
    let roles = t.roles(net.vertex_count());
    let mut node = vec![0; net.vertex_count()];
    let mut count = 2;
    for (x, &r) in roles.iter().enumerate() {
        node[x] = match r {
            1 => 0,
            -1 => 1,
            _ => {
                count += 1;
                count - 1
            }
        };
    }
    (node, count)
}

/// Maximum flow from `t.a` to `t.z` with per-edge capacities, and a minimum cut.
pub fn max_flow_min_cut(net: &Network, capacities: &[f64], t: &Terminals) -> Result<MaxFlow> {
    t.check(net.vertex_count())?;
    if capacities.len() != net.edge_count() {
        return Err(Error::Network("capacity count mismatch".into()));
    }
    if let Some(c) = capacities.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
        return Err(Error::Range(format!("capacity {c} must be finite and non-negative")));
    }
    let (node, count) = contract_nodes(net, t);
    let mut g = Dinic {
        arcs: Vec::with_capacity(2 * net.edge_count()),
        out: vec![Vec::new(); count],
        level: vec![-1; count],
        next: vec![0; count],
    };
    for (i, e) in net.edges().iter().enumerate() {
        let (a, b) = (node[e.u], node[e.v]);
        if a == b {
            continue;
        }
        g.out[a].push(g.arcs.len());
        g.arcs.push(Arc { to: b, cap: capacities[i], edge: i });
        g.out[b].push(g.arcs.len());
        g.arcs.push(Arc { to: a, cap: capacities[i], edge: i });
    }
    let mut value = 0.0;
    while g.bfs(0, 1) {
        g.next.iter_mut().for_each(|n| *n = 0);
        loop {
            let f = g.dfs(0, 1, f64::INFINITY);
            if f <= 0.0 {
                break;
            }
            value += f;
        }
    }
    let mut flow = vec![0.0; net.edge_count()];
    for pair in g.arcs.chunks_exact(2) {
        let e = pair[0].edge;
        // forward arc runs u → v; net flow is half the residual imbalance
        let f = 0.5 * (pair[1].cap - pair[0].cap);
        flow[e] = f;
    }
    g.bfs(0, 1);
    let source_side: Vec<bool> = (0..net.vertex_count()).map(|x| g.level[node[x]] >= 0).collect();
    let mut cut = Vec::new();
    let mut cut_capacity = 0.0;
    for (i, e) in net.edges().iter().enumerate() {
        if source_side[e.u] != source_side[e.v] {
            cut.push(i);
            cut_capacity += capacities[i];
        }
    }
    Ok(MaxFlow { value, cut, cut_capacity, flow })
}

/// Minimum cut by enumerating every bipartition of the non-terminal vertices.
pub fn brute_force_min_cut(net: &Network, capacities: &[f64], t: &Terminals) -> Result<f64> {
    let (node, count) = contract_nodes(net, t);
    let free = count - 2;
    if free > 22 {
        return Err(Error::Precondition(format!("{free} free vertices are too many to enumerate")));
    }
    let mut best = f64::INFINITY;
    for mask in 0u64..(1u64 << free) {
        let side = |n: usize| match n {
            0 => true,
            1 => false,
            k => mask >> (k - 2) & 1 == 1,
        };
        let cut: f64 = net
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| side(node[e.u]) != side(node[e.v]))
            .map(|(i, _)| capacities[i])
            .sum();
        best = best.min(cut);
    }
    Ok(best)
}

/// `θ(D)`: the part of the unit current that cannot be routed around `d` within `|θ|`.
pub fn current_through_set(net: &Network, result: &SolveResult, d: &[usize]) -> Result<f64> {
    let mut caps: Vec<f64> = result.current.iter().map(|c| c.abs()).collect();
    for &e in d {
        caps[e] = 0.0;
    }
    let mf = max_flow_min_cut(net, &caps, &result.terminals)?;
    Ok((1.0 - mf.value).clamp(0.0, 1.0))
}
