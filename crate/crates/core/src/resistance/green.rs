//! Green functions and hitting probabilities through effective resistances.

use super::{dirichlet_solve, point_resistance, solve_two_terminal};
use crate::error::{Error, Result};
use crate::network::{Network, Terminals};

fn complement(domain: &[bool]) -> Vec<usize> {
    (0..domain.len()).filter(|&x| !domain[x]).collect()
}

/// Expected visits to `y` before leaving `domain`, for the walk started at `x`.
///
/// Uses `½ π(y) (R(x,Z) + R(y,Z) - R(x,y))` with `Z` the complement of the
/// domain shorted to a single node. Zero when `x` or `y` is outside the domain.
pub fn green_function(net: &Network, domain: &[bool], x: usize, y: usize, tol: f64) -> Result<f64> {
    if domain.len() != net.vertex_count() {
        return Err(Error::Precondition("domain mask has the wrong length".into()));
    }
    if !domain[x] || !domain[y] {
        return Ok(0.0);
    }
    let z = complement(domain);
    if z.is_empty() {
        return Err(Error::Precondition("domain has no exit set".into()));
    }
    let (c, map) = net.contract(&[&z])?;
    let zn = map[z[0]];
    let rxz = point_resistance(&c, map[x], zn, tol)?;
    let ryz = if x == y { rxz } else { point_resistance(&c, map[y], zn, tol)? };
    let rxy = point_resistance(&c, map[x], map[y], tol)?;
    Ok(0.5 * net.conductance_mass(y) * (rxz + ryz - rxy))
}

/// Row `G(x, ·)` of the Green function of `domain` by one linear solve.
pub fn green_row(net: &Network, domain: &[bool], x: usize, tol: f64) -> Result<Vec<f64>> {
    let nv = net.vertex_count();
    if domain.len() != nv {
        return Err(Error::Precondition("domain mask has the wrong length".into()));
    }
    if !domain[x] {
        return Ok(vec![0.0; nv]);
    }
    let fixed: Vec<Option<f64>> = domain.iter().map(|&d| if d { None } else { Some(0.0) }).collect();
    let mut source = vec![0.0; nv];
    source[x] = 1.0;
    let sol = dirichlet_solve(net, &fixed, &source, tol)?;
    if !sol.free[x] {
        return Err(Error::Structure(format!("vertex {x} cannot reach the exit set")));
    }
    Ok((0..nv).map(|y| if domain[y] { sol.values[y] * net.conductance_mass(y) } else { 0.0 }).collect())
}

/// `P^v(τ_A < τ_Z)` from three resistances in the network with `A` and `Z` shorted.
pub fn hitting_probability(net: &Network, v: usize, a: &[usize], z: &[usize], tol: f64) -> Result<f64> {
    let t = Terminals::new(a.to_vec(), z.to_vec())?;
    t.check(net.vertex_count())?;
    if t.a.contains(&v) || t.z.contains(&v) {
        return Err(Error::Precondition(format!("vertex {v} is a terminal")));
    }
    let (c, map) = net.contract(&[&t.a, &t.z])?;
    let (an, zn, vn) = (map[t.a[0]], map[t.z[0]], map[v]);
    let raz = solve_two_terminal(&c, &Terminals::pair(an, zn)?, tol)?.resistance;
    let rvz = point_resistance(&c, vn, zn, tol)?;
    let rva = point_resistance(&c, vn, an, tol)?;
    Ok(((rvz + raz - rva) / (2.0 * raz)).clamp(0.0, 1.0))
}
