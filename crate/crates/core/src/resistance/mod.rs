//! Two-terminal electrical solves and the quantities built on them.

mod flow;
mod green;
mod paths;

pub use flow::{brute_force_min_cut, current_through_set, max_flow_min_cut, MaxFlow};
pub use green::{green_function, green_row, hitting_probability};
pub use paths::{path_decomposition, WeightedPathSet};

use crate::error::{Error, Result};
use crate::linalg::{solve_spd, CsrMatrix, SolveStats};
use crate::network::{AnnulusView, Network, Terminals};

pub use crate::linalg::DEFAULT_TOL;

/// Potential and unit current of a two-terminal solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub terminals: Terminals,
    /// Vertex potentials with `f = 1` on the source group and `f = 0` on the sink group.
    pub potential: Vec<f64>,
    /// Unit current through each edge, positive in the `u → v` direction.
    pub current: Vec<f64>,
    pub resistance: f64,
    pub conductance: f64,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Whether the direct factorization was used.
    pub direct: bool,
}

impl SolveResult {
    /// Current from `x` into the other endpoint of edge `e`.
    pub fn flow_from(&self, net: &Network, e: usize, x: usize) -> f64 {
        if net.edge(e).u == x { self.current[e] } else { -self.current[e] }
    }

    /// Net current leaving vertex `x`.
    pub fn divergence(&self, net: &Network, x: usize) -> f64 {
        net.neighbors(x).iter().map(|&(_, e)| self.flow_from(net, e, x)).sum()
    }

    /// Net current leaving the source group.
    pub fn strength(&self, net: &Network) -> f64 {
        let roles = self.terminals.roles(net.vertex_count());
        net.edges()
            .iter()
            .zip(&self.current)
            .map(|(e, &c)| match (roles[e.u] == 1, roles[e.v] == 1) {
                (true, false) => c,
                (false, true) => -c,
                _ => 0.0,
            })
            .sum()
    }
}

/// Solution of a Laplace/Poisson problem with fixed values on part of the vertex set.
#[derive(Debug, Clone)]
pub struct DirichletSolution {
    pub values: Vec<f64>,
    /// Vertices that were solved for.
    pub free: Vec<bool>,
    pub stats: SolveStats,
}

/// Solve `(L u)(x) = source(x)` at every free vertex connected to a fixed one.
///
/// Vertices whose component contains no fixed vertex are left at zero and
/// marked as not free.
pub fn dirichlet_solve(net: &Network, fixed: &[Option<f64>], source: &[f64], tol: f64) -> Result<DirichletSolution> {
    let nv = net.vertex_count();
    let comp = net.components();
    let mut anchored = vec![false; nv];
    for x in 0..nv {
        if fixed[x].is_some() {
            anchored[comp[x]] = true;
        }
    }
    let mut index = vec![usize::MAX; nv];
    let mut unknowns = Vec::new();
    for x in 0..nv {
        if fixed[x].is_none() && anchored[comp[x]] {
            index[x] = unknowns.len();
            unknowns.push(x);
        }
    }
    let mut trip = Vec::with_capacity(5 * unknowns.len());
    let mut rhs: Vec<f64> = unknowns.iter().map(|&x| source[x]).collect();
    for (i, &x) in unknowns.iter().enumerate() {
        let mut diag = 0.0;
        for &(y, e) in net.neighbors(x) {
            let c = net.edge(e).conductance();
            diag += c;
            match fixed[y] {
                Some(v) => rhs[i] += c * v,
                None => trip.push((i, index[y], -c)),
            }
        }
        trip.push((i, i, diag));
    }
    let a = CsrMatrix::from_triplets(unknowns.len(), trip);
    let (sol, stats) = solve_spd(&a, &rhs, tol)?;
    let mut values: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    let mut free = vec![false; nv];
    for (i, &x) in unknowns.iter().enumerate() {
        values[x] = sol[i];
        free[x] = true;
    }
    Ok(DirichletSolution { values, free, stats })
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(Error::Precondition(format!("tolerance {tol} outside (0, 1e-6]")));
    }
    Ok(())
}

/// Effective resistance between the source and sink groups, with potential and unit current.
pub fn solve_two_terminal(net: &Network, t: &Terminals, tol: f64) -> Result<SolveResult> {
    check_tol(tol)?;
    t.check(net.vertex_count())?;
    let roles = t.roles(net.vertex_count());
    let comp = net.components();
    let mut reach_a = vec![false; net.vertex_count()];
    for &a in &t.a {
        reach_a[comp[a]] = true;
    }
    if !t.z.iter().any(|&z| reach_a[comp[z]]) {
        return Err(Error::Disconnected);
    }
    let fixed: Vec<Option<f64>> = roles
        .iter()
        .map(|&r| match r {
            1 => Some(1.0),
            -1 => Some(0.0),
            _ => None,
        })
        .collect();
    let source = vec![0.0; net.vertex_count()];
    let sol = dirichlet_solve(net, &fixed, &source, tol)?;
    let f = sol.values;
    let mut strength = 0.0;
    for e in net.edges() {
        let flow = e.conductance() * (f[e.u] - f[e.v]);
        match (roles[e.u] == 1, roles[e.v] == 1) {
            (true, false) => strength += flow,
            (false, true) => strength -= flow,
            _ => {}
        }
    }
    if !(strength > 0.0) {
        return Err(Error::Disconnected);
    }
    let current: Vec<f64> = net.edges().iter().map(|e| e.conductance() * (f[e.u] - f[e.v]) / strength).collect();
    let energy = net.edges().iter().zip(&current).map(|(e, c)| c * c * e.resistance()).sum();
    let resistance = 1.0 / strength;
    Ok(SolveResult {
        terminals: t.clone(),
        potential: f,
        current,
        resistance,
        conductance: 1.0 / resistance,
        energy,
        residual: sol.stats.residual,
        iterations: sol.stats.iterations,
        direct: sol.stats.direct,
    })
}

/// Effective resistance between two single vertices.
pub fn point_resistance(net: &Network, x: usize, y: usize, tol: f64) -> Result<f64> {
    if x == y {
        return Ok(0.0);
    }
    Ok(solve_two_terminal(net, &Terminals::pair(x, y)?, tol)?.resistance)
}

/// `Σ_{e ∈ subset} θ(e)² r_e`.
pub fn dirichlet_energy(net: &Network, current: &[f64], subset: &[usize]) -> f64 {
    subset.iter().map(|&e| current[e] * current[e] * net.edge(e).resistance()).sum()
}

/// Resistance of the family of contours winding once around the annulus.
///
/// Minimises `Σ c_e (g_u - g_v + s_e)²` over ring potentials `g`, where `s_e`
/// records how edge `e` crosses the slit; the minimum is the conductance of
/// the contour family.
pub fn around_resistance(view: &AnnulusView, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    let ring = &view.ring;
    let nv = ring.vertex_count();
    let mut source = vec![0.0; nv];
    for (e, &s) in ring.edges().iter().zip(&view.jumps) {
        if s != 0.0 {
            let c = e.conductance();
            source[e.u] -= c * s;
            source[e.v] += c * s;
        }
    }
    let mut fixed = vec![None; nv];
    fixed[0] = Some(0.0);
    let sol = dirichlet_solve(ring, &fixed, &source, tol)?;
    if sol.free.iter().skip(1).any(|&f| !f) {
        return Err(Error::Disconnected);
    }
    let g = sol.values;
    let c: f64 = ring
        .edges()
        .iter()
        .zip(&view.jumps)
        .map(|(e, &s)| e.conductance() * (g[e.u] - g[e.v] + s).powi(2))
        .sum();
    Ok(1.0 / c)
}

/// Both sides of the resistance-gap bound for removing `d` inside the annulus `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResdifGap {
    /// `R` without `d` minus `R`; infinite when removal disconnects the terminals.
    pub lhs: f64,
    pub rhs: f64,
    pub disconnected: bool,
    pub current_through_d: f64,
    pub around: f64,
}

impl ResdifGap {
    pub fn holds(&self, slack: f64) -> bool {
        !self.disconnected && self.lhs <= self.rhs + slack
    }
}

pub fn resdif_gap(
    net: &Network,
    t: &Terminals,
    d: &[usize],
    h: &[usize],
    contours: &AnnulusView,
    tol: f64,
) -> Result<ResdifGap> {
    if d.iter().any(|e| h.contains(e)) {
        return Err(Error::Precondition("removed set and annulus share edges".into()));
    }
    let base = solve_two_terminal(net, t, tol)?;
    let (lhs, disconnected) = match solve_two_terminal(&net.without_edges(d)?, t, tol) {
        Ok(r) => (r.resistance - base.resistance, false),
        Err(Error::Disconnected) => (f64::INFINITY, true),
        Err(e) => return Err(e),
    };
    let theta_d = current_through_set(net, &base, d)?;
    let around = around_resistance(contours, tol)?;
    let rhs = dirichlet_energy(net, &base.current, h) + 2.0 * theta_d * theta_d * around
        - dirichlet_energy(net, &base.current, d);
    Ok(ResdifGap { lhs, rhs, disconnected, current_through_d: theta_d, around })
}
