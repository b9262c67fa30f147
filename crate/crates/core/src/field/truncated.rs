//! Finite-range layers built from the truncated heat kernel.
//!
//! Each dyadic layer is split into [`SLICES`] log-uniform time slices. A slice
//! contributes `√(πΔt) Σ_c p̃_{t*/2}(x - y_c) |cell| g_c`, a midpoint rule for
//! the white-noise integral on a noise grid fine enough to resolve the kernel.
//! Noise values are keyed by position, so two lattice points see the same
//! noise cell exactly when their kernels overlap it.

use std::collections::HashMap;

use super::{GridSpec, KernelSpec};
use crate::rng::keyed_normal;

pub const SLICES: u32 = 8;
const NOISE_TAG: u64 = 0xBB67_AE85_84CA_A73B;
/// Noise cells per truncation width.
const CELLS_PER_SIGMA: f64 = 3.0;

/// Smooth radial cutoff: 1 on `[0, 1]`, 0 on `[2, ∞)`.
pub fn bump(u: f64) -> f64 {
    if u <= 1.0 {
        return 1.0;
    }
    if u >= 2.0 {
        return 0.0;
    }
    let f = |s: f64| (-1.0 / s).exp();
    let (a, b) = (f(2.0 - u), f(u - 1.0));
    a / (a + b)
}

/// Convolution stencil of one time slice, relative to the noise cell under a lattice point.
#[derive(Debug, Clone)]
pub struct TruncatedStencil {
    pub layer: u32,
    pub slice: u32,
    /// Noise cells per refined lattice spacing.
    pub refine: i64,
    /// Truncation width `σ` at the slice midpoint.
    pub sigma: f64,
    pub weights: Vec<(i64, i64, f64)>,
}

impl TruncatedStencil {
    pub fn new(grid: &GridSpec, kernel: &KernelSpec, layer: u32, slice: u32) -> Self {
        let t0 = 0.25f64.powi(layer as i32);
        let ratio = 4f64.powf(1.0 / f64::from(SLICES));
        let lo = t0 * ratio.powi(slice as i32);
        let hi = lo * ratio;
        let dt = hi - lo;
        let s = 0.5 * (lo * hi).sqrt();
        let sigma = kernel.sigma(s);
        let h = grid.refined_spacing();
        let refine = ((CELLS_PER_SIGMA * h / sigma).ceil() as i64).max(1);
        let cell = h / refine as f64;
        let reach = (2.0 * sigma / cell).ceil() as i64 + 1;
        let amp = (std::f64::consts::PI * dt).sqrt() * cell;
        let mut weights = Vec::new();
        for ey in -reach..=reach {
            for ex in -reach..=reach {
                // lattice point sits at the corner shared by cells -1 and 0
                let dx = (ex as f64 + 0.5) * cell;
                let dy = (ey as f64 + 0.5) * cell;
                let r2 = dx * dx + dy * dy;
                let phi = bump(r2.sqrt() / sigma);
                if phi > 0.0 {
                    let p = (-r2 / (2.0 * s)).exp() / (std::f64::consts::TAU * s);
                    weights.push((ex, ey, amp * p * phi));
                }
            }
        }
        TruncatedStencil { layer, slice, refine, sigma, weights }
    }

    /// Radius beyond which the slice kernel vanishes.
    pub fn support_radius(&self) -> f64 {
        2.0 * self.sigma
    }

    fn reach(&self) -> i64 {
        self.weights.iter().map(|w| w.0.abs().max(w.1.abs())).max().unwrap_or(0)
    }
}

fn stencils(grid: &GridSpec, kernel: &KernelSpec) -> Vec<TruncatedStencil> {
    (kernel.m + 1..=kernel.n)
        .flat_map(|k| (0..SLICES).map(move |q| TruncatedStencil::new(grid, kernel, k, q)))
        .collect()
}

fn noise(seed: u64, st: &TruncatedStencil, cx: i64, cy: i64) -> f64 {
    keyed_normal(&[seed, NOISE_TAG, u64::from(st.layer), u64::from(st.slice), cx as u64, cy as u64])
}

pub(super) fn required_bytes(grid: &GridSpec, _kernel: &KernelSpec) -> u64 {
    16 * grid.refined_len() as u64
}

pub(super) fn synthesize(grid: &GridSpec, kernel: &KernelSpec, seed: u64) -> Vec<f64> {
    let (nx, ny) = grid.refined_dims();
    let ix0 = 2 * grid.bounds.x_min;
    let iy0 = 2 * grid.bounds.y_min;
    let mut values = vec![0.0; nx * ny];
    for st in stencils(grid, kernel) {
        let r = st.refine;
        let reach = st.reach();
        let cells_x = (nx as i64 - 1) * r + 2 * reach + 1;
        let cells_y = (ny as i64 - 1) * r + 2 * reach + 1;
        let dense = (cells_x * cells_y) as usize <= nx * ny * st.weights.len().max(1);
        let cx0 = ix0 * r - reach;
        let cy0 = iy0 * r - reach;
        let table: Vec<f64> = if dense {
            let mut t = Vec::with_capacity((cells_x * cells_y) as usize);
            for cy in 0..cells_y {
                for cx in 0..cells_x {
                    t.push(noise(seed, &st, cx0 + cx, cy0 + cy));
                }
            }
            t
        } else {
            Vec::new()
        };
        for j in 0..ny {
            for i in 0..nx {
                let bx = (ix0 + i as i64) * r;
                let by = (iy0 + j as i64) * r;
                let mut acc = 0.0;
                for &(ex, ey, w) in &st.weights {
                    let (cx, cy) = (bx + ex, by + ey);
                    let g = if dense {
                        table[((cy - cy0) * cells_x + (cx - cx0)) as usize]
                    } else {
                        noise(seed, &st, cx, cy)
                    };
                    acc += w * g;
                }
                values[j * nx + i] += acc;
            }
        }
    }
    values
}

/// Exact covariance of the synthesized truncated field between two refined lattice points.
pub fn truncated_covariance(grid: &GridSpec, kernel: &KernelSpec, a: [i64; 2], b: [i64; 2]) -> f64 {
    let mut total = 0.0;
    for st in stencils(grid, kernel) {
        let r = st.refine;
        let cells: HashMap<(i64, i64), f64> = st
            .weights
            .iter()
            .map(|&(ex, ey, w)| ((a[0] * r + ex, a[1] * r + ey), w))
            .collect();
        for &(ex, ey, w) in &st.weights {
            if let Some(v) = cells.get(&(b[0] * r + ex, b[1] * r + ey)) {
                total += v * w;
            }
        }
    }
    total
}
