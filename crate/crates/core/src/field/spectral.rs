//! Full heat-kernel layers as random Fourier series.
//!
//! Layer `k` is a stationary field with spectral density
//! `π ∫_{t0}^{t1} e^{-t|ξ|²/2} dt`, `t0 = 4^{-k}`, `t1 = 4^{-(k-1)}`. It is
//! synthesized on a torus whose period exceeds the box by eight kernel widths,
//! so the periodized covariance differs from the planar one by less than
//! `e^{-32}`. The series is evaluated at absolute coordinates, so two grids of
//! the same physical box see the same realization.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{GridSpec, KernelSpec};
use crate::rng::{mix64, replica_rng};

const FIELD_STREAM: u64 = 0x6A09_E667_F3BC_C908;
/// Modes with `t0 |ξ|²/2` above this carry weight below `e^{-40}`.
const MODE_CUTOFF: f64 = 40.0;

pub(super) struct Layer {
    pub t0: f64,
    pub t1: f64,
    pub period: [f64; 2],
    pub jmax: [i64; 2],
}

impl Layer {
    pub fn new(grid: &GridSpec, k: u32) -> Layer {
        let t0 = 0.25f64.powi(k as i32);
        let t1 = 4.0 * t0;
        let pad = 8.0 * t1.sqrt();
        let ext = grid.extent();
        let period = [ext[0] + pad, ext[1] + pad];
        let xi_max = (2.0 * MODE_CUTOFF / t0).sqrt();
        let jmax = [
            (xi_max * period[0] / std::f64::consts::TAU).floor() as i64,
            (xi_max * period[1] / std::f64::consts::TAU).floor() as i64,
        ];
        Layer { t0, t1, period, jmax }
    }

    pub fn frequency(&self, jx: i64, jy: i64) -> [f64; 2] {
        [
            std::f64::consts::TAU * jx as f64 / self.period[0],
            std::f64::consts::TAU * jy as f64 / self.period[1],
        ]
    }

    /// `π ∫_{t0}^{t1} e^{-t u} dt` with `u = |ξ|²/2`.
    pub fn density(&self, xi: [f64; 2]) -> f64 {
        let u = 0.5 * (xi[0] * xi[0] + xi[1] * xi[1]);
        if u == 0.0 {
            return std::f64::consts::PI * (self.t1 - self.t0);
        }
        std::f64::consts::PI * (-self.t0 * u).exp() * (-(-(self.t1 - self.t0) * u).exp_m1()) / u
    }

    /// Half-plane modes with their coefficient variances, in the fixed draw order.
    pub fn modes(&self) -> Vec<(i64, i64, f64)> {
        let area = self.period[0] * self.period[1];
        let mut out = Vec::new();
        for jy in 0..=self.jmax[1] {
            for jx in -self.jmax[0]..=self.jmax[0] {
                if jy == 0 && jx < 0 {
                    continue;
                }
                let xi = self.frequency(jx, jy);
                if 0.5 * self.t0 * (xi[0] * xi[0] + xi[1] * xi[1]) > MODE_CUTOFF {
                    continue;
                }
                let mult = if jx == 0 && jy == 0 { 1.0 } else { 2.0 };
                out.push((jx, jy, mult * self.density(xi) / area));
            }
        }
        out
    }

    /// Covariance of the synthesized layer at displacement `d`.
    #[cfg(test)]
    pub fn covariance(&self, d: [f64; 2]) -> f64 {
        self.modes()
            .iter()
            .map(|&(jx, jy, var)| {
                let xi = self.frequency(jx, jy);
                var * (xi[0] * d[0] + xi[1] * d[1]).cos()
            })
            .sum()
    }
}

pub(super) fn required_bytes(grid: &GridSpec, kernel: &KernelSpec) -> u64 {
    let (nx, ny) = grid.refined_dims();
    let l = Layer::new(grid, kernel.n);
    let cx = (2 * l.jmax[0] + 1) as u64;
    let cy = (l.jmax[1] + 1) as u64;
    let (nx, ny) = (nx as u64, ny as u64);
    8 * nx * ny + 16 * (cx * cy + cx * nx + cy * ny + cy * nx)
}

pub(super) fn synthesize(grid: &GridSpec, kernel: &KernelSpec, seed: u64) -> Vec<f64> {
    let mut values = vec![0.0; grid.refined_len()];
    for k in kernel.m + 1..=kernel.n {
        add_layer(grid, k, seed, &mut values);
    }
    values
}

fn add_layer(grid: &GridSpec, k: u32, seed: u64, out: &mut [f64]) {
    let layer = Layer::new(grid, k);
    let (xs, ys) = grid.refined_axes();
    let (nx, ny) = (xs.len(), ys.len());
    let cx = (2 * layer.jmax[0] + 1) as usize;
    let cy = (layer.jmax[1] + 1) as usize;

    let mut rng = replica_rng(mix64(seed, FIELD_STREAM), u64::from(k));
    let mut a_re = vec![0.0; cy * cx];
    let mut a_im = vec![0.0; cy * cx];
    for (jx, jy, var) in layer.modes() {
        let s = var.sqrt();
        let g1: f64 = rng.sample(StandardNormal);
        let g2: f64 = rng.sample(StandardNormal);
        let idx = jy as usize * cx + (jx + layer.jmax[0]) as usize;
        a_re[idx] = s * g1;
        a_im[idx] = s * g2;
    }

    let phases = |coords: &[f64], count: usize, offset: i64, axis: usize| {
        let mut re = vec![0.0; count * coords.len()];
        let mut im = vec![0.0; count * coords.len()];
        for j in 0..count {
            let w = std::f64::consts::TAU * (j as i64 - offset) as f64 / layer.period[axis];
            for (i, &x) in coords.iter().enumerate() {
                let (s, c) = (w * x).sin_cos();
                re[j * coords.len() + i] = c;
                im[j * coords.len() + i] = s;
            }
        }
        (re, im)
    };
    let (ex_re, ex_im) = phases(&xs, cx, layer.jmax[0], 0);
    let (ey_re, ey_im) = phases(&ys, cy, 0, 1);

    // B[jy][i] = Σ_jx A[jy][jx] e^{i ξx x_i}
    let mut b_re = vec![0.0; cy * nx];
    let mut b_im = vec![0.0; cy * nx];
    for jy in 0..cy {
        let brow_re = &mut b_re[jy * nx..(jy + 1) * nx];
        let brow_im = &mut b_im[jy * nx..(jy + 1) * nx];
        for jx in 0..cx {
            let (ar, ai) = (a_re[jy * cx + jx], a_im[jy * cx + jx]);
            if ar == 0.0 && ai == 0.0 {
                continue;
            }
            let er = &ex_re[jx * nx..(jx + 1) * nx];
            let ei = &ex_im[jx * nx..(jx + 1) * nx];
            for i in 0..nx {
                brow_re[i] += ar * er[i] - ai * ei[i];
                brow_im[i] += ar * ei[i] + ai * er[i];
            }
        }
    }

    // f[j][i] += Re Σ_jy e^{i ξy y_j} B[jy][i]
    for j in 0..ny {
        let row = &mut out[j * nx..(j + 1) * nx];
        for jy in 0..cy {
            let (cr, ci) = (ey_re[jy * ny + j], ey_im[jy * ny + j]);
            let br = &b_re[jy * nx..(jy + 1) * nx];
            let bi = &b_im[jy * nx..(jy + 1) * nx];
            for i in 0..nx {
                row[i] += cr * br[i] - ci * bi[i];
            }
        }
    }
}
