//! Sparse symmetric positive definite solves.
//!
//! Small systems are factored directly (reverse Cuthill–McKee ordering and an
//! envelope Cholesky factor); larger ones use conjugate gradients with a
//! Jacobi preconditioner.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Systems with fewer unknowns than this are factored.
pub const DIRECT_LIMIT: usize = 5000;
pub const MAX_ITERATIONS: usize = 50_000;
pub const DEFAULT_TOL: f64 = 1e-10;

/// Symmetric matrix in compressed sparse row form (both triangles stored).
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Assemble from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *vals.last_mut().expect("previous entry") += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).find(|&(c, _)| c == i).map_or(0.0, |(_, v)| v))
            .collect()
    }
}

/// How a solve was carried out.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveStats {
    pub iterations: usize,
    /// Relative residual `‖b - Ax‖ / ‖b‖`.
    pub residual: f64,
    pub direct: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let mut ax = vec![0.0; a.n];
    a.mul_vec(x, &mut ax);
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (q - p) * (q - p)).sum::<f64>().sqrt();
    let nb = norm(b);
    if nb == 0.0 { r } else { r / nb }
}

/// Solve `A x = b` for symmetric positive definite `A`.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveStats)> {
    if a.n == 0 {
        return Ok((Vec::new(), SolveStats { iterations: 0, residual: 0.0, direct: true }));
    }
    if a.n < DIRECT_LIMIT {
        let f = EnvelopeCholesky::factor(a)?;
        let x = f.solve(b);
        let residual = relative_residual(a, &x, b);
        Ok((x, SolveStats { iterations: 0, residual, direct: true }))
    } else {
        pcg(a, b, tol, MAX_ITERATIONS)
    }
}

/// Conjugate gradients with Jacobi preconditioning, started from zero.
pub fn pcg(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.n;
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let nb = norm(b);
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok((x, SolveStats { iterations: 0, residual: 0.0, direct: false }));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 1..=max_iter {
        a.mul_vec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::Structure("matrix is not positive definite".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= tol * nb {
            let residual = relative_residual(a, &x, b);
            if residual <= 10.0 * tol {
                return Ok((x, SolveStats { iterations: it, residual, direct: false }));
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver { iterations: max_iter, residual: relative_residual(a, &x, b) })
}

/// Reverse Cuthill–McKee ordering: `perm[new] = old`.
pub fn rcm_order(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n;
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).filter(|&(c, _)| c != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs_last = |start: usize, visited: &[bool]| -> (usize, usize) {
        let mut seen = visited.to_vec();
        let mut dist = vec![0usize; n];
        let mut q = VecDeque::from([start]);
        seen[start] = true;
        let (mut far, mut depth) = (start, 0);
        while let Some(x) = q.pop_front() {
            if dist[x] > depth || (dist[x] == depth && degree[x] < degree[far]) {
                far = x;
                depth = dist[x];
            }
            for (y, _) in a.row(x) {
                if !seen[y] {
                    seen[y] = true;
                    dist[y] = dist[x] + 1;
                    q.push_back(y);
                }
            }
        }
        (far, depth)
    };
    loop {
        let Some(seed) = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| degree[i]) else { break };
        // pseudo-peripheral start
        let mut start = seed;
        let mut depth = 0;
        for _ in 0..8 {
            let (far, d) = bfs_last(start, &visited);
            if d <= depth {
                break;
            }
            start = far;
            depth = d;
        }
        let first = order.len();
        visited[start] = true;
        order.push(start);
        let mut head = first;
        while head < order.len() {
            let x = order[head];
            head += 1;
            let mut nbrs: Vec<usize> = a.row(x).map(|(y, _)| y).filter(|&y| !visited[y]).collect();
            nbrs.sort_by_key(|&y| (degree[y], y));
            for y in nbrs {
                visited[y] = true;
                order.push(y);
            }
        }
    }
    order.reverse();
    order
}

/// Cholesky factor stored row-wise over each row's envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    vals: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n;
        let perm = rcm_order(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for (c, _) in a.row(old) {
                let j = inv[c];
                if j < first[new] {
                    first[new] = j;
                }
            }
        }
        let mut start = vec![0; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut vals = vec![0.0; start[n]];
        for (new, &old) in perm.iter().enumerate() {
            for (c, v) in a.row(old) {
                let j = inv[c];
                if j <= new {
                    vals[start[new] + j - first[new]] += v;
                }
            }
        }
        let scale = (0..n).map(|i| vals[start[i + 1] - 1].abs()).fold(0.0, f64::max);
        for i in 0..n {
            let fi = first[i];
            let row_i = start[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let row_j = start[j];
                let mut s = vals[row_i + j - fi];
                for k in k0..j {
                    s -= vals[row_i + k - fi] * vals[row_j + k - fj];
                }
                vals[row_i + j - fi] = s / vals[row_j + j - fj];
            }
            let mut d = vals[row_i + i - fi];
            for k in fi..i {
                d -= vals[row_i + k - fi].powi(2);
            }
            if d <= 1e-14 * scale {
                return Err(Error::Structure(format!("matrix is singular or indefinite at pivot {i}")));
            }
            vals[row_i + i - fi] = d.sqrt();
        }
        Ok(EnvelopeCholesky { perm, first, start, vals })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = self.start[i];
            let mut s = y[i];
            for k in fi..i {
                s -= self.vals[row + k - fi] * y[k];
            }
            y[i] = s / self.vals[row + i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = self.start[i];
            y[i] /= self.vals[row + i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= self.vals[row + k - fi] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Dirichlet Laplacian of an `m × m` grid with conductances from `c`.
    fn grid_matrix(m: usize, c: impl Fn(usize) -> f64) -> CsrMatrix {
        let idx = |x: usize, y: usize| y * m + x;
        let mut t = Vec::new();
        let mut k = 0;
        for y in 0..m {
            for x in 0..m {
                let i = idx(x, y);
                // boundary link to ground keeps the matrix definite
                if x == 0 {
                    t.push((i, i, 1.0));
                }
                for (dx, dy) in [(1, 0), (0, 1)] {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < m && ny < m {
                        let j = idx(nx, ny);
                        let w = c(k);
                        k += 1;
                        t.extend([(i, i, w), (j, j, w), (i, j, -w), (j, i, -w)]);
                    }
                }
            }
        }
        CsrMatrix::from_triplets(m * m, t)
    }

    #[test]
    fn direct_and_iterative_agree() {
        let a = grid_matrix(12, |k| (0.3 * (k as f64).sin()).exp());
        let b: Vec<f64> = (0..a.dim()).map(|i| (i as f64 * 0.7).cos()).collect();
        let f = EnvelopeCholesky::factor(&a).unwrap();
        let x1 = f.solve(&b);
        let (x2, stats) = pcg(&a, &b, 1e-12, 10_000).unwrap();
        assert!(stats.iterations > 0);
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-9 * (1.0 + p.abs()));
        }
        assert!(relative_residual(&a, &x1, &b) < 1e-13);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let t = vec![(0, 0, 1.0), (1, 1, 1.0), (0, 1, -1.0), (1, 0, -1.0)];
        let a = CsrMatrix::from_triplets(2, t);
        assert!(matches!(EnvelopeCholesky::factor(&a), Err(Error::Structure(_))));
    }

    #[test]
    fn iteration_cap_is_an_error() {
        let a = grid_matrix(30, |_| 1.0);
        let b = vec![1.0; a.dim()];
        assert!(matches!(pcg(&a, &b, 1e-14, 3), Err(Error::Solver { iterations: 3, .. })));
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = grid_matrix(7, |_| 1.0);
        let mut p = rcm_order(&a);
        p.sort_unstable();
        assert_eq!(p, (0..49).collect::<Vec<_>>());
    }

    proptest! {
        #[test]
        fn cholesky_solves_random_grids(m in 2usize..9, seed in 0u64..1000) {
            let a = grid_matrix(m, |k| ((seed as f64 + k as f64) * 1.3).sin().exp());
            let b: Vec<f64> = (0..a.dim()).map(|i| ((i as u64 + seed) % 7) as f64 - 3.0).collect();
            let x = EnvelopeCholesky::factor(&a).unwrap().solve(&b);
            prop_assert!(relative_residual(&a, &x, &b) < 1e-12);
        }
    }
}
