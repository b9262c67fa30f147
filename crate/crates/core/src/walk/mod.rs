//! Conductance-weighted random walks: simulation, exact exit statistics and rescaled paths.

mod exact;
mod path;

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::rng::replica_rng;

pub use exact::{exact_exit_expectation, exit_expectation_green_sum, exit_moments, harmonic_exit_measure, ExitMoments};
pub use path::{cmp_distance, rescaled_path, time_scale, write_trace, RescaledPath, DEFAULT_RESOLUTION};

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000_000;
/// Networks expected to run more steps than this get alias tables.
pub const ALIAS_THRESHOLD: u64 = 10_000;

/// Outcome of one walk run until it leaves its domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExitRecord {
    pub exit_vertex: usize,
    pub steps: u64,
    pub trace: Option<Vec<usize>>,
}

/// One-step law from a vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    pub neighbors: Vec<usize>,
    pub edges: Vec<usize>,
    pub probabilities: Vec<f64>,
}

/// Neighbours of `v` with probabilities proportional to conductance.
pub fn step_distribution(net: &Network, v: usize) -> Result<StepDistribution> {
    let nb = net.neighbors(v);
    if nb.is_empty() {
        return Err(Error::Degree(v));
    }
    let mass = net.conductance_mass(v);
    Ok(StepDistribution {
        neighbors: nb.iter().map(|&(w, _)| w).collect(),
        edges: nb.iter().map(|&(_, e)| e).collect(),
        probabilities: nb.iter().map(|&(_, e)| net.edge(e).conductance() / mass).collect(),
    })
}

/// Step sampler over a fixed network.
pub struct Walker<'a> {
    net: &'a Network,
    alias: Option<Vec<Option<WeightedAliasIndex<f64>>>>,
}

impl<'a> Walker<'a> {
    /// Samples each step by a scan over the incident conductances.
    pub fn linear(net: &'a Network) -> Self {
        Walker { net, alias: None }
    }

    /// Precomputes an alias table at every vertex.
    pub fn alias(net: &'a Network) -> Result<Self> {
        let tables = (0..net.vertex_count())
            .map(|v| {
                let w: Vec<f64> = net.neighbors(v).iter().map(|&(_, e)| net.edge(e).conductance()).collect();
                if w.is_empty() {
                    Ok(None)
                } else {
                    WeightedAliasIndex::new(w).map(Some).map_err(|e| Error::Network(format!("vertex {v}: {e}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Walker { net, alias: Some(tables) })
    }

    /// Alias tables when `expected_steps` exceeds [`ALIAS_THRESHOLD`], linear scans otherwise.
    pub fn for_workload(net: &'a Network, expected_steps: u64) -> Result<Self> {
        if expected_steps > ALIAS_THRESHOLD {
            Walker::alias(net)
        } else {
            Ok(Walker::linear(net))
        }
    }

    pub fn network(&self) -> &'a Network {
        self.net
    }

    /// Next vertex from `v`.
    pub fn step<R: Rng + ?Sized>(&self, v: usize, rng: &mut R) -> Result<usize> {
        let nb = self.net.neighbors(v);
        if nb.is_empty() {
            return Err(Error::Degree(v));
        }
        let k = match &self.alias {
            Some(tables) => tables[v].as_ref().map_or(0, |t| t.sample(rng)),
            None => {
                let u = rng.random::<f64>() * self.net.conductance_mass(v);
                let mut acc = 0.0;
                let mut k = nb.len() - 1;
                for (i, &(_, e)) in nb.iter().enumerate() {
                    acc += self.net.edge(e).conductance();
                    if u < acc {
                        k = i;
                        break;
                    }
                }
                k
            }
        };
        Ok(nb[k].0)
    }

    /// Walks from `start` until the first vertex outside `domain`.
    pub fn run<R: Rng + ?Sized>(&self, start: usize, domain: &[bool], rng: &mut R, keep_trace: bool, budget: u64) -> Result<ExitRecord> {
        check_domain(self.net, domain)?;
        if start >= domain.len() {
            return Err(Error::Precondition(format!("start vertex {start} out of range")));
        }
        let mut trace = keep_trace.then(|| vec![start]);
        let mut v = start;
        let mut steps = 0u64;
        while domain[v] {
            if steps == budget {
                let partial = ExitRecord { exit_vertex: v, steps, trace };
                return Err(Error::StepBudget { budget, partial: Box::new(partial) });
            }
            v = self.step(v, rng)?;
            steps += 1;
            if let Some(t) = trace.as_mut() {
                t.push(v);
            }
        }
        Ok(ExitRecord { exit_vertex: v, steps, trace })
    }
}

pub(crate) fn check_domain(net: &Network, domain: &[bool]) -> Result<()> {
    if domain.len() != net.vertex_count() {
        return Err(Error::Precondition("domain mask has the wrong length".into()));
    }
    Ok(())
}

/// Runs the walk from `start` until it leaves `domain`, with the default step budget.
pub fn simulate_until_exit<R: Rng + ?Sized>(net: &Network, start: usize, domain: &[bool], rng: &mut R, keep_trace: bool) -> Result<ExitRecord> {
    Walker::linear(net).run(start, domain, rng, keep_trace, DEFAULT_STEP_BUDGET)
}

/// Starting point of a replica.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Start {
    Vertex(usize),
    /// Corners of a lattice triangle with barycentric weights.
    Barycentric { corners: [usize; 3], weights: [f64; 3] },
}

impl Start {
    fn check(&self, net: &Network) -> Result<()> {
        match *self {
            Start::Vertex(v) if v < net.vertex_count() => Ok(()),
            Start::Vertex(v) => Err(Error::Precondition(format!("start vertex {v} out of range"))),
            Start::Barycentric { corners, weights } => {
                if weights.iter().any(|&w| !(w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    return Err(Error::Precondition("barycentric weights must be nonnegative and sum to 1".into()));
                }
                let lat = net
                    .lattice_coords()
                    .ok_or_else(|| Error::Precondition("barycentric start needs lattice coordinates".into()))?;
                let p: Vec<[i64; 2]> = corners.iter().map(|&c| lat.get(c).copied()).collect::<Option<_>>().ok_or_else(|| {
                    Error::Precondition("barycentric corner out of range".into())
                })?;
                for i in 0..3 {
                    for j in i + 1..3 {
                        let d = (p[i][0] - p[j][0]).abs().max((p[i][1] - p[j][1]).abs());
                        if d != 1 {
                            return Err(Error::Precondition("corners do not form a lattice triangle".into()));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match *self {
            Start::Vertex(v) => v,
            Start::Barycentric { corners, weights } => {
                let u: f64 = rng.random();
                if u < weights[0] {
                    corners[0]
                } else if u < weights[0] + weights[1] {
                    corners[1]
                } else {
                    corners[2]
                }
            }
        }
    }
}

/// Empirical exit distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitMeasure {
    pub samples: u64,
    pub counts: BTreeMap<usize, u64>,
}

impl ExitMeasure {
    pub fn frequency(&self, v: usize) -> f64 {
        self.counts.get(&v).copied().unwrap_or(0) as f64 / self.samples as f64
    }

    /// Total variation distance to a probability vector indexed by vertex.
    pub fn total_variation(&self, law: &[f64]) -> f64 {
        let mut tv = 0.0;
        for (v, &p) in law.iter().enumerate() {
            tv += (self.frequency(v) - p).abs();
        }
        for (&v, &c) in &self.counts {
            if v >= law.len() {
                tv += c as f64 / self.samples as f64;
            }
        }
        0.5 * tv
    }

    /// CSV with columns `vertex_index,x,y,count,frequency`.
    pub fn write_csv(&self, net: &Network, mut w: impl Write) -> Result<()> {
        writeln!(w, "vertex_index,x,y,count,frequency")?;
        for (&v, &c) in &self.counts {
            let [x, y] = net.coords()[v];
            writeln!(w, "{v},{x},{y},{c},{}", c as f64 / self.samples as f64)?;
        }
        Ok(())
    }
}

fn run_replicas<T: Send>(
    walker: &Walker,
    start: Start,
    domain: &[bool],
    samples: u64,
    seed: u64,
    f: impl Fn(ExitRecord) -> T + Sync,
) -> Result<Vec<T>> {
    if samples == 0 {
        return Err(Error::Precondition("at least one sample is required".into()));
    }
    start.check(walker.network())?;
    check_domain(walker.network(), domain)?;
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i);
            let s = start.draw(&mut rng);
            walker.run(s, domain, &mut rng, false, DEFAULT_STEP_BUDGET).map(&f)
        })
        .collect()
}

/// Exit frequencies over `samples` replicas; replica `i` uses stream `(seed, i)`.
pub fn exit_measure(walker: &Walker, start: Start, domain: &[bool], samples: u64, seed: u64) -> Result<ExitMeasure> {
    let exits = run_replicas(walker, start, domain, samples, seed, |r| r.exit_vertex)?;
    let mut counts = BTreeMap::new();
    for v in exits {
        *counts.entry(v).or_insert(0) += 1;
    }
    Ok(ExitMeasure { samples, counts })
}

/// Monte Carlo moments of the exit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitTimeStats {
    pub samples: u64,
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
    pub second_moment: f64,
    pub second_moment_se: f64,
}

/// Exit-time statistics over `samples` replicas; sums are exact integers.
pub fn exit_time_stats(walker: &Walker, start: Start, domain: &[bool], samples: u64, seed: u64) -> Result<ExitTimeStats> {
    let steps = run_replicas(walker, start, domain, samples, seed, |r| r.steps)?;
    let (mut s1, mut s2, mut s4) = (0u128, 0u128, 0f64);
    for &k in &steps {
        let k = k as u128;
        s1 += k;
        s2 += k * k;
    }
    let n = samples as f64;
    let mean = s1 as f64 / n;
    let second = s2 as f64 / n;
    for &k in &steps {
        s4 += (k as f64 * k as f64 - second).powi(2);
    }
    let var = if samples > 1 { (second - mean * mean).max(0.0) * n / (n - 1.0) } else { 0.0 };
    let var2 = if samples > 1 { s4 / (n - 1.0) } else { 0.0 };
    Ok(ExitTimeStats {
        samples,
        mean,
        sd: var.sqrt(),
        se: (var / n).sqrt(),
        second_moment: second,
        second_moment_se: (var2 / n).sqrt(),
    })
}

#[cfg(test)]
mod tests;
