//! Vertex measures `η(B) = Σ e^{γφ(y)}` and `π(B) = Σ` conductance mass.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{truncated_covariance, FieldSample, KernelKind};
use crate::network::{Network, LOG_RESISTANCE_LIMIT};

/// How `normalized` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divided by the closed-form expectation.
    Analytic,
    /// Divided by the mean over a replica set.
    Empirical,
    /// Not yet normalized; `normalized == raw`.
    Unnormalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub raw: f64,
    pub normalized: f64,
    pub box_size: usize,
    pub gamma: Option<f64>,
    pub n: Option<u32>,
    pub zeta: Option<u32>,
    pub normalization: Normalization,
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Pointwise variance of the sampled field.
pub fn field_variance(sample: &FieldSample) -> f64 {
    match sample.kernel.kind {
        KernelKind::FullHeatKernel => f64::from(sample.kernel.layer_count()) * std::f64::consts::LN_2,
        KernelKind::Truncated => truncated_covariance(&sample.grid, &sample.kernel, [0, 0], [0, 0]),
    }
}

/// `η(B)` over lattice vertices `b`, normalized by `E η(B) = e^{γ² Var φ / 2} |B|`.
pub fn eta_measure(sample: &FieldSample, gamma: f64, b: &[[i64; 2]]) -> Result<MeasureReport> {
    if b.is_empty() {
        return Err(Error::Domain("empty vertex set".into()));
    }
    let mut terms = Vec::with_capacity(b.len());
    for &[x, y] in b {
        let phi = sample
            .at_vertex(x, y)
            .ok_or_else(|| Error::Domain(format!("vertex ({x}, {y}) outside the sampled box")))?;
        let l = gamma * phi;
        if l.abs() >= LOG_RESISTANCE_LIMIT {
            return Err(Error::Range(format!("gamma * field = {l} exceeds the overflow guard")));
        }
        terms.push(l.exp());
    }
    let raw = compensated_sum(terms);
    let expected = (0.5 * gamma * gamma * field_variance(sample)).exp() * b.len() as f64;
    Ok(MeasureReport {
        raw,
        normalized: raw / expected,
        box_size: b.len(),
        gamma: Some(gamma),
        n: Some(sample.grid.n),
        zeta: Some(sample.grid.zeta),
        normalization: Normalization::Analytic,
    })
}

/// `π(B) = Σ_{y∈B} Σ_{e∼y} c_e`, left unnormalized.
pub fn pi_measure(net: &Network, b: &[usize]) -> Result<MeasureReport> {
    if b.is_empty() {
        return Err(Error::Domain("empty vertex set".into()));
    }
    if let Some(&v) = b.iter().find(|&&v| v >= net.vertex_count()) {
        return Err(Error::Domain(format!("vertex {v} outside the network")));
    }
    let raw = compensated_sum(b.iter().flat_map(|&y| net.neighbors(y).iter().map(|&(_, e)| net.edge(e).conductance())));
    Ok(MeasureReport {
        raw,
        normalized: raw,
        box_size: b.len(),
        gamma: None,
        n: None,
        zeta: None,
        normalization: Normalization::Unnormalized,
    })
}

/// Divides every report by the mean raw value of the set.
pub fn normalize_empirical(reports: &mut [MeasureReport]) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::Precondition("no reports to normalize".into()));
    }
    let mean = compensated_sum(reports.iter().map(|r| r.raw)) / reports.len() as f64;
    for r in reports {
        r.normalized = r.raw / mean;
        r.normalization = Normalization::Empirical;
    }
    Ok(())
}
