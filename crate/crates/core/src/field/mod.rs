//! Gaussian field realizations on the refined half-lattice.
//!
//! The lattice `Z_n² = 2^{-n}ζ^{-1}Z²` is sampled at half its spacing so that
//! both vertices and edge midpoints carry a value. A lattice vertex with
//! integer coordinates `(a, b)` sits at refined index `(2a, 2b)`; the midpoint
//! of the edge between two neighbouring vertices sits at the sum of their
//! indices.

mod covariance;
pub mod io;
mod spectral;
mod truncated;

pub use covariance::{analytic_covariance, exp_integral_e1};
pub use truncated::{truncated_covariance, TruncatedStencil};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default memory budget for field synthesis.
pub const DEFAULT_BUDGET_BYTES: u64 = 4 << 30;

/// Inclusive index bounds of a rectangle of `Z_n²` vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBox {
    pub x_min: i64,
    pub x_max: i64,
    pub y_min: i64,
    pub y_max: i64,
}

impl LatticeBox {
    pub fn new(x_min: i64, x_max: i64, y_min: i64, y_max: i64) -> Self {
        LatticeBox { x_min, x_max, y_min, y_max }
    }

    /// Symmetric box `[-a, a] × [-b, b]` in vertex units.
    pub fn symmetric(a: i64, b: i64) -> Self {
        LatticeBox::new(-a, a, -b, b)
    }

    pub fn is_empty(&self) -> bool {
        self.x_min > self.x_max || self.y_min > self.y_max
    }

    pub fn width(&self) -> i64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> i64 {
        self.y_max - self.y_min
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }

    pub fn contains_box(&self, other: &LatticeBox) -> bool {
        !other.is_empty()
            && self.contains(other.x_min, other.y_min)
            && self.contains(other.x_max, other.y_max)
    }

    pub fn vertex_count(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            ((self.width() + 1) * (self.height() + 1)) as usize
        }
    }
}

/// Physical rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn centered(a: f64, b: f64) -> Self {
        Rect { x0: -a, x1: a, y0: -b, y1: b }
    }
}

/// The sampled lattice: scale `n`, mesh multiplier `ζ`, and the vertex box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: u32,
    pub zeta: u32,
    pub bounds: LatticeBox,
}

/// `⌈√n⌉`, the smallest admissible mesh multiplier.
pub fn default_zeta(n: u32) -> u32 {
    let mut z = (f64::from(n)).sqrt().floor() as u32;
    while z * z < n {
        z += 1;
    }
    z.max(1)
}

impl GridSpec {
    pub fn new(n: u32, zeta: u32, bounds: LatticeBox) -> Result<Self> {
        if n == 0 || n > 24 {
            return Err(Error::Grid(format!("scale n = {n} outside 1..=24")));
        }
        if zeta == 0 {
            return Err(Error::Grid("mesh multiplier must be positive".into()));
        }
        if bounds.is_empty() {
            return Err(Error::Domain("empty box".into()));
        }
        Ok(GridSpec { n, zeta, bounds })
    }

    /// The box `B(a, b) = [-a, a] × [-b, b]`; `a` and `b` must be multiples of the lattice spacing.
    pub fn centered(n: u32, zeta: u32, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Grid(format!("box half-sides must be positive, got {a} × {b}")));
        }
        let scale = f64::from(zeta) * 2f64.powi(n as i32);
        let to_units = |v: f64| -> Result<i64> {
            let u = v * scale;
            let r = u.round();
            if (u - r).abs() > 1e-9 * u.max(1.0) {
                return Err(Error::Grid(format!("{v} is not a multiple of the spacing 1/{scale}")));
            }
            Ok(r as i64)
        };
        GridSpec::new(n, zeta, LatticeBox::symmetric(to_units(a)?, to_units(b)?))
    }

    /// Number of lattice spacings per unit length, `2^n ζ`.
    pub fn scale(&self) -> f64 {
        f64::from(self.zeta) * 2f64.powi(self.n as i32)
    }

    /// Spacing of `Z_n²`.
    pub fn spacing(&self) -> f64 {
        1.0 / self.scale()
    }

    /// Spacing of the refined lattice.
    pub fn refined_spacing(&self) -> f64 {
        0.5 / self.scale()
    }

    /// Physical coordinate of a refined index.
    pub fn refined_coord(&self, i: i64) -> f64 {
        i as f64 / (2.0 * self.scale())
    }

    /// Physical position of the vertex with integer coordinates `(a, b)`.
    pub fn vertex_point(&self, a: i64, b: i64) -> [f64; 2] {
        [a as f64 / self.scale(), b as f64 / self.scale()]
    }

    /// Refined lattice dimensions `(nx, ny)`.
    pub fn refined_dims(&self) -> (usize, usize) {
        (
            (2 * self.bounds.width() + 1) as usize,
            (2 * self.bounds.height() + 1) as usize,
        )
    }

    pub fn refined_len(&self) -> usize {
        let (nx, ny) = self.refined_dims();
        nx * ny
    }

    /// Physical extent of the box along x and y.
    pub fn extent(&self) -> [f64; 2] {
        [
            self.bounds.width() as f64 / self.scale(),
            self.bounds.height() as f64 / self.scale(),
        ]
    }

    /// Physical rectangle covered by the box.
    pub fn rect(&self) -> Rect {
        let s = self.scale();
        Rect {
            x0: self.bounds.x_min as f64 / s,
            x1: self.bounds.x_max as f64 / s,
            y0: self.bounds.y_min as f64 / s,
            y1: self.bounds.y_max as f64 / s,
        }
    }

    /// Refined x and y coordinates in storage order.
    pub fn refined_axes(&self) -> (Vec<f64>, Vec<f64>) {
        let xs = (2 * self.bounds.x_min..=2 * self.bounds.x_max)
            .map(|i| self.refined_coord(i))
            .collect();
        let ys = (2 * self.bounds.y_min..=2 * self.bounds.y_max)
            .map(|i| self.refined_coord(i))
            .collect();
        (xs, ys)
    }

    /// Storage offset of an absolute refined index, if inside the box.
    pub fn refined_offset(&self, ix: i64, iy: i64) -> Option<usize> {
        let rx = ix - 2 * self.bounds.x_min;
        let ry = iy - 2 * self.bounds.y_min;
        let (nx, ny) = self.refined_dims();
        if rx < 0 || ry < 0 || rx as usize >= nx || ry as usize >= ny {
            return None;
        }
        Some(ry as usize * nx + rx as usize)
    }
}

/// Which kernel drives the white-noise integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    FullHeatKernel,
    Truncated,
}

/// Kernel choice plus the scale band `(m, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub eps0: f64,
    pub m: u32,
    pub n: u32,
}

impl KernelSpec {
    pub const EPS0: f64 = 0.01;

    pub fn full(m: u32, n: u32) -> Result<Self> {
        KernelSpec { kind: KernelKind::FullHeatKernel, eps0: Self::EPS0, m, n }.validated()
    }

    pub fn truncated(m: u32, n: u32) -> Result<Self> {
        KernelSpec { kind: KernelKind::Truncated, eps0: Self::EPS0, m, n }.validated()
    }

    pub fn with_eps0(mut self, eps0: f64) -> Result<Self> {
        self.eps0 = eps0;
        self.validated()
    }

    fn validated(self) -> Result<Self> {
        if self.m >= self.n {
            return Err(Error::InvalidRange { m: self.m, n: self.n });
        }
        if !(self.eps0 > 0.0 && self.eps0 < 1.0) {
            return Err(Error::Grid(format!("eps0 = {} must lie in (0, 1)", self.eps0)));
        }
        Ok(self)
    }

    pub fn layer_count(&self) -> u32 {
        self.n - self.m
    }

    /// Truncation width `σ_t = ε₀ √t |log t|^{ε₀}`; the truncated kernel vanishes beyond `2σ_t`.
    pub fn sigma(&self, t: f64) -> f64 {
        self.eps0 * t.sqrt() * t.ln().abs().powf(self.eps0)
    }
}

/// One realization of the field on the refined lattice of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub grid: GridSpec,
    pub kernel: KernelSpec,
    pub seed: u64,
    pub negated: bool,
    values: Vec<f64>,
}

impl FieldSample {
    /// Wrap precomputed refined-lattice values (row-major, x fastest).
    pub fn from_values(grid: GridSpec, kernel: KernelSpec, seed: u64, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.refined_len() {
            return Err(Error::Grid(format!(
                "expected {} values, got {}",
                grid.refined_len(),
                values.len()
            )));
        }
        Ok(FieldSample { grid, kernel, seed, negated: false, values })
    }

    /// Build a sample by evaluating `f` at every refined lattice point.
    pub fn from_fn(grid: GridSpec, kernel: KernelSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let (xs, ys) = grid.refined_axes();
        let values = ys.iter().flat_map(|&y| xs.iter().map(move |&x| (x, y))).map(|(x, y)| f(x, y)).collect();
        FieldSample { grid, kernel, seed: 0, negated: false, values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn layer_count(&self) -> u32 {
        self.kernel.layer_count()
    }

    /// Value at an absolute refined index.
    pub fn refined(&self, ix: i64, iy: i64) -> Option<f64> {
        self.grid.refined_offset(ix, iy).map(|o| self.values[o])
    }

    /// Value at the vertex `(a, b)` of `Z_n²`.
    pub fn at_vertex(&self, a: i64, b: i64) -> Option<f64> {
        self.refined(2 * a, 2 * b)
    }

    /// Value at the midpoint of the edge between vertices `p` and `q`.
    pub fn at_midpoint(&self, p: [i64; 2], q: [i64; 2]) -> Option<f64> {
        self.refined(p[0] + q[0], p[1] + q[1])
    }

    /// Pointwise negation, the realization driven by `-W`.
    pub fn negate(&self) -> FieldSample {
        FieldSample {
            values: self.values.iter().map(|v| -v).collect(),
            negated: !self.negated,
            ..self.clone()
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Draw a realization of `φ_{m,n}` or `ψ_{m,n}` on `grid`.
pub fn sample_field(grid: &GridSpec, kernel: &KernelSpec, seed: u64, negate: bool) -> Result<FieldSample> {
    sample_field_with_budget(grid, kernel, seed, negate, DEFAULT_BUDGET_BYTES)
}

pub fn sample_field_with_budget(
    grid: &GridSpec,
    kernel: &KernelSpec,
    seed: u64,
    negate: bool,
    budget_bytes: u64,
) -> Result<FieldSample> {
    let kernel = kernel.validated()?;
    let required = match kernel.kind {
        KernelKind::FullHeatKernel => spectral::required_bytes(grid, &kernel),
        KernelKind::Truncated => truncated::required_bytes(grid, &kernel),
    };
    if required > budget_bytes {
        return Err(Error::Resource { required_bytes: required, budget_bytes });
    }
    let mut values = match kernel.kind {
        KernelKind::FullHeatKernel => spectral::synthesize(grid, &kernel, seed),
        KernelKind::Truncated => truncated::synthesize(grid, &kernel, seed),
    };
    if negate {
        values.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(FieldSample { grid: *grid, kernel, seed, negated: negate, values })
}

/// `sup |f(x) - f(y)|` over refined lattice pairs in `region` at distance at most `eps`.
pub fn oscillation(sample: &FieldSample, eps: f64, region: &Rect) -> Result<f64> {
    let g = &sample.grid;
    let h = g.refined_spacing();
    let outer = g.rect();
    let slack = 1e-9 * h;
    if region.x0 > region.x1
        || region.y0 > region.y1
        || region.x0 < outer.x0 - slack
        || region.x1 > outer.x1 + slack
        || region.y0 < outer.y0 - slack
        || region.y1 > outer.y1 + slack
    {
        return Err(Error::Domain(format!("region {region:?} is not inside the sampled box {outer:?}")));
    }
    if eps < h * (1.0 - 1e-9) {
        return Err(Error::Domain(format!("eps = {eps} is below the lattice spacing {h}")));
    }
    let to_idx = |v: f64, up: bool| -> i64 {
        let u = v / h;
        if up { (u - 1e-9).ceil() as i64 } else { (u + 1e-9).floor() as i64 }
    };
    let (ix0, ix1) = (to_idx(region.x0, true), to_idx(region.x1, false));
    let (iy0, iy1) = (to_idx(region.y0, true), to_idx(region.y1, false));
    let reach = eps / h * (1.0 + 1e-12);
    let rmax = reach.floor() as i64;
    let mut offsets = Vec::new();
    for dy in 0..=rmax {
        for dx in -rmax..=rmax {
            if (dy > 0 || dx > 0) && ((dx * dx + dy * dy) as f64) <= reach * reach {
                offsets.push((dx, dy));
            }
        }
    }
    let mut best = 0.0f64;
    for iy in iy0..=iy1 {
        for ix in ix0..=ix1 {
            let Some(v) = sample.refined(ix, iy) else { continue };
            for &(dx, dy) in &offsets {
                let (jx, jy) = (ix + dx, iy + dy);
                if jx < ix0 || jx > ix1 || jy > iy1 {
                    continue;
                }
                if let Some(w) = sample.refined(jx, jy) {
                    best = best.max((v - w).abs());
                }
            }
        }
    }
    Ok(best)
}
