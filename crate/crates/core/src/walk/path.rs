//! Time-rescaled interpolated walk paths and their distance modulo reparameterization.

use std::io::Write;

use super::ExitRecord;
use crate::error::{Error, Result};
use crate::network::Network;

pub const DEFAULT_RESOLUTION: usize = 512;

/// `χ = 2^{(2 + γ²/2) n} ζ²`.
pub fn time_scale(n: u32, zeta: u32, gamma: f64) -> f64 {
    ((2.0 + 0.5 * gamma * gamma) * n as f64).exp2() * (zeta as f64).powi(2)
}

/// Piecewise linear path through `(t, point)` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledPath {
    pub samples: Vec<(f64, [f64; 2])>,
    pub chi: f64,
}

impl RescaledPath {
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.0)
    }

    /// Position at time `t`, held constant after the last sample.
    pub fn at(&self, t: f64) -> [f64; 2] {
        let s = &self.samples;
        if t <= s[0].0 {
            return s[0].1;
        }
        if t >= self.duration() {
            return s[s.len() - 1].1;
        }
        let k = ((t * self.chi).floor() as usize).min(s.len() - 2);
        let (t0, p) = s[k];
        let (t1, q) = s[k + 1];
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        [p[0] + w * (q[0] - p[0]), p[1] + w * (q[1] - p[1])]
    }

    fn resample(&self, resolution: usize) -> Vec<[f64; 2]> {
        let d = self.duration();
        (0..resolution).map(|i| self.at(d * i as f64 / (resolution - 1) as f64)).collect()
    }
}

/// Interpolated path of a traced walk with sample times `k / χ`.
///
/// A trace with a single vertex gives one constant segment.
pub fn rescaled_path(record: &ExitRecord, net: &Network, n: u32, zeta: u32, gamma: f64) -> Result<RescaledPath> {
    let trace = record.trace.as_ref().ok_or_else(|| Error::Data("exit record has no trace".into()))?;
    if trace.is_empty() {
        return Err(Error::Data("empty trace".into()));
    }
    let chi = time_scale(n, zeta, gamma);
    let coords = net.coords();
    let mut samples: Vec<(f64, [f64; 2])> = trace.iter().enumerate().map(|(k, &v)| (k as f64 / chi, coords[v])).collect();
    if samples.len() == 1 {
        samples.push((1.0 / chi, samples[0].1));
    }
    Ok(RescaledPath { samples, chi })
}

fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

/// Discrete Fréchet distance between `resolution`-point resamplings of both paths.
pub fn cmp_distance(p1: &RescaledPath, p2: &RescaledPath, resolution: usize) -> f64 {
    let res = resolution.max(2);
    let a = p1.resample(res);
    let b = p2.resample(res);
    let mut prev = vec![0.0f64; res];
    let mut cur = vec![0.0f64; res];
    for i in 0..res {
        for j in 0..res {
            let d = dist(a[i], b[j]);
            cur[j] = match (i, j) {
                (0, 0) => d,
                (0, _) => cur[j - 1].max(d),
                (_, 0) => prev[0].max(d),
                _ => prev[j].min(prev[j - 1]).min(cur[j - 1]).max(d),
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[res - 1]
}

/// Lines `step_index x y` for every vertex of a traced walk.
pub fn write_trace(record: &ExitRecord, net: &Network, mut w: impl Write) -> Result<()> {
    let trace = record.trace.as_ref().ok_or_else(|| Error::Data("exit record has no trace".into()))?;
    for (k, &v) in trace.iter().enumerate() {
        let [x, y] = net.coords()[v];
        writeln!(w, "{k} {x} {y}")?;
    }
    Ok(())
}
