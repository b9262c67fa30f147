//! Exit statistics from linear solves on the absorbing domain.

use super::check_domain;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::resistance::{dirichlet_solve, green_row};

/// Solves `h = f + P h` on `domain` with `h = 0` outside.
fn potential_solve(net: &Network, domain: &[bool], f: &[f64], start: usize, tol: f64) -> Result<Vec<f64>> {
    check_domain(net, domain)?;
    let fixed: Vec<Option<f64>> = domain.iter().map(|&d| if d { None } else { Some(0.0) }).collect();
    let source: Vec<f64> = (0..net.vertex_count()).map(|x| if domain[x] { f[x] * net.conductance_mass(x) } else { 0.0 }).collect();
    let sol = dirichlet_solve(net, &fixed, &source, tol)?;
    if domain[start] && !sol.free[start] {
        return Err(Error::Structure(format!("vertex {start} cannot reach the exit set")));
    }
    Ok(sol.values)
}

/// Expected number of steps before the walk from `start` leaves `domain`.
pub fn exact_exit_expectation(net: &Network, domain: &[bool], start: usize, tol: f64) -> Result<f64> {
    let ones = vec![1.0; net.vertex_count()];
    Ok(potential_solve(net, domain, &ones, start, tol)?[start])
}

/// The same expectation as `Σ_y G(start, y)` from a Green-function row.
pub fn exit_expectation_green_sum(net: &Network, domain: &[bool], start: usize, tol: f64) -> Result<f64> {
    Ok(green_row(net, domain, start, tol)?.iter().sum())
}

/// Exact first and second moments of the exit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitMoments {
    pub mean: f64,
    pub second_moment: f64,
    /// `Σ_{y,z} G(x,y) G(y,z)`.
    pub green_double_sum: f64,
}

/// Uses `Σ_z G(y,z) = E^y τ` so that the double Green sum is one more solve.
pub fn exit_moments(net: &Network, domain: &[bool], start: usize, tol: f64) -> Result<ExitMoments> {
    let ones = vec![1.0; net.vertex_count()];
    let h = potential_solve(net, domain, &ones, start, tol)?;
    let u = potential_solve(net, domain, &h, start, tol)?;
    Ok(ExitMoments { mean: h[start], second_moment: 2.0 * u[start] - h[start], green_double_sum: u[start] })
}

/// Exact law of the exit vertex, indexed by vertex.
pub fn harmonic_exit_measure(net: &Network, domain: &[bool], start: usize, tol: f64) -> Result<Vec<f64>> {
    check_domain(net, domain)?;
    let nv = net.vertex_count();
    let mut law = vec![0.0; nv];
    if !domain[start] {
        law[start] = 1.0;
        return Ok(law);
    }
    let g = green_row(net, domain, start, tol)?;
    for y in (0..nv).filter(|&y| domain[y]) {
        let per_step = g[y] / net.conductance_mass(y);
        for &(z, e) in net.neighbors(y) {
            if !domain[z] {
                law[z] += per_step * net.edge(e).conductance();
            }
        }
    }
    Ok(law)
}
