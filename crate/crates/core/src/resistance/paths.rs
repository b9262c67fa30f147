//! Decomposition of a unit current into weighted source-to-sink paths.

use super::SolveResult;
use crate::error::{Error, Result};
use crate::network::Network;

/// Residual flows below this are treated as exhausted.
const EMPTY: f64 = 1e-13;
/// Stripping stops once the remaining strength falls below this.
const DONE: f64 = 1e-12;
/// A dead end with more remaining strength than this is an error.
const STUCK: f64 = 1e-9;

#[derive(Debug, Clone, Default)]
pub struct WeightedPathSet {
    /// Vertex sequences from a source vertex to a sink vertex.
    pub paths: Vec<Vec<usize>>,
    /// Edge sequences of the same paths.
    pub edges: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
    /// `r_e |θ(e)| / α_k` for each edge of path `k`.
    pub split_resistances: Vec<Vec<f64>>,
}

impl WeightedPathSet {
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ_k α_k² Σ_{e ∈ P_k} r_{e,P_k}`.
    pub fn energy(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.split_resistances)
            .map(|(a, rs)| a * a * rs.iter().sum::<f64>())
            .sum()
    }

    /// Total weight of the paths through each edge.
    pub fn edge_loads(&self, edge_count: usize) -> Vec<f64> {
        let mut load = vec![0.0; edge_count];
        for (a, es) in self.weights.iter().zip(&self.edges) {
            for &e in es {
                load[e] += a;
            }
        }
        load
    }

    /// `Σ_{k: e ∈ P_k} 1 / r_{e,P_k}` for each edge.
    pub fn split_conductances(&self, edge_count: usize) -> Vec<f64> {
        let mut c = vec![0.0; edge_count];
        for (es, rs) in self.edges.iter().zip(&self.split_resistances) {
            for (&e, r) in es.iter().zip(rs) {
                c[e] += 1.0 / r;
            }
        }
        c
    }
}

/// Strip paths from a unit current, always following the largest residual outflow.
pub fn path_decomposition(net: &Network, result: &SolveResult) -> Result<WeightedPathSet> {
    let roles = result.terminals.roles(net.vertex_count());
    let mut residual: Vec<f64> = result.current.clone();
    let out_of = |res: &[f64], e: usize, x: usize| if net.edge(e).u == x { res[e] } else { -res[e] };
    let mut set = WeightedPathSet::default();
    let mut on_path = vec![false; net.vertex_count()];
    for _ in 0..=net.edge_count() {
        let remaining: f64 = result
            .terminals
            .a
            .iter()
            .flat_map(|&a| net.neighbors(a).iter().map(move |&(y, e)| (a, y, e)))
            .filter(|&(_, y, _)| roles[y] != 1)
            .map(|(a, _, e)| out_of(&residual, e, a))
            .filter(|&f| f > EMPTY)
            .sum();
        if remaining <= DONE {
            return Ok(set);
        }
        let best_out = |x_set: &mut dyn Iterator<Item = usize>, res: &[f64]| -> Option<(usize, usize, f64)> {
            let mut best: Option<(usize, usize, f64)> = None;
            for x in x_set {
                for &(y, e) in net.neighbors(x) {
                    if roles[x] == 1 && roles[y] == 1 {
                        continue;
                    }
                    let f = out_of(res, e, x);
                    if f > EMPTY && best.is_none_or(|(bx, be, bf)| f > bf || (f == bf && (x, e) < (bx, be))) {
                        best = Some((x, e, f));
                    }
                }
            }
            best
        };
        let Some((start, first_edge, _)) = best_out(&mut result.terminals.a.iter().copied(), &residual) else {
            return Ok(set);
        };
        let mut verts = vec![start];
        let mut es = vec![first_edge];
        let mut x = net.edge(first_edge).other(start);
        on_path[start] = true;
        let mut stuck = false;
        while roles[x] != -1 {
            if on_path[x] {
                return Err(Error::Decomposition(format!("residual flow cycles through vertex {x}")));
            }
            on_path[x] = true;
            verts.push(x);
            match best_out(&mut std::iter::once(x), &residual) {
                Some((_, e, _)) => {
                    es.push(e);
                    x = net.edge(e).other(x);
                }
                None => {
                    stuck = true;
                    break;
                }
            }
        }
        for &v in &verts {
            on_path[v] = false;
        }
        if stuck {
            if remaining <= STUCK {
                return Ok(set);
            }
            return Err(Error::Decomposition(format!(
                "dead end at vertex {x} with {remaining:e} strength left"
            )));
        }
        verts.push(x);
        let (mut alpha, mut arg) = (f64::INFINITY, 0);
        for (i, &e) in es.iter().enumerate() {
            let f = out_of(&residual, e, verts[i]);
            if f < alpha {
                alpha = f;
                arg = i;
            }
        }
        for (i, &e) in es.iter().enumerate() {
            let sign = if net.edge(e).u == verts[i] { 1.0 } else { -1.0 };
            residual[e] -= sign * alpha;
            if i == arg {
                residual[e] = 0.0;
            }
        }
        let split = es
            .iter()
            .map(|&e| net.edge(e).resistance() * result.current[e].abs() / alpha)
            .collect();
        set.paths.push(verts);
        set.edges.push(es);
        set.weights.push(alpha);
        set.split_resistances.push(split);
    }
    Err(Error::Decomposition("path stripping did not terminate".into()))
}
