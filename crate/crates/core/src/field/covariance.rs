//! Closed-form covariance of the band-limited field.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Entire exponential integral `Σ_{k≥1} (-1)^{k+1} z^k / (k·k!)`, accurate for `0 ≤ z ≤ 2`.
fn ein(z: f64) -> f64 {
    let mut term = z;
    let mut sum = z;
    let mut k = 1.0;
    loop {
        term *= -z / (k + 1.0);
        k += 1.0;
        let add = term / k;
        sum += add;
        if add.abs() <= 1e-17 * sum.abs() {
            return sum;
        }
    }
}

/// Exponential integral `E1(z) = ∫_z^∞ e^{-s}/s ds` for `z > 0`.
pub fn exp_integral_e1(z: f64) -> f64 {
    debug_assert!(z > 0.0);
    if z <= 1.0 {
        return -EULER_GAMMA - z.ln() + ein(z);
    }
    if z > 745.0 {
        return 0.0;
    }
    // Modified Lentz on the continued fraction for e^z E1(z).
    let tiny = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}

/// `E[φ_{m,n}(x) φ_{m,n}(y)]`, the covariance of the field band between scales `2^{-m}` and `2^{-n}`.
///
/// Equal to `∫_a^b e^{-s}/(2s) ds` with `a = r²4^m/2`, `b = r²4^n/2`, `r = |x-y|`.
pub fn analytic_covariance(x: [f64; 2], y: [f64; 2], m: u32, n: u32) -> Result<f64> {
    if m >= n {
        return Err(Error::InvalidRange { m, n });
    }
    let r2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
    let band = f64::from(n - m) * std::f64::consts::LN_2;
    if r2 == 0.0 {
        return Ok(band);
    }
    let a = r2 * 4f64.powi(m as i32) / 2.0;
    let b = r2 * 4f64.powi(n as i32) / 2.0;
    if b <= 2.0 {
        // ln(b/a) is exactly 2(n-m)ln2
        return Ok(band + 0.5 * (ein(a) - ein(b)));
    }
    Ok(0.5 * (exp_integral_e1(a) - exp_integral_e1(b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }

    /// Adaptive Simpson in log-variable: ∫_a^b e^{-s}/(2s) ds = ∫ ½ exp(-e^u) du.
    fn quadrature(a: f64, b: f64) -> f64 {
        let f = |u: f64| 0.5 * (-u.exp()).exp();
        let (lo, hi) = (a.ln(), b.ln());
        let mid = 0.5 * (lo + hi);
        let (fa, fm, fb) = (f(lo), f(mid), f(hi));
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        simpson(&f, lo, hi, fa, fm, fb, whole, 1e-14 * whole.abs().max(1e-300), 60)
    }

    fn oracle(r: f64, m: u32, n: u32) -> f64 {
        quadrature(r * r * 4f64.powi(m as i32) / 2.0, r * r * 4f64.powi(n as i32) / 2.0)
    }

    #[test]
    fn diagonal_is_exact() {
        let v = analytic_covariance([0.3, 0.1], [0.3, 0.1], 0, 3).unwrap();
        assert_eq!(v, 3.0 * std::f64::consts::LN_2);
        assert!((v - 2.079442).abs() < 1e-6);
    }

    #[test]
    fn half_distance_matches_quadrature() {
        // r = 0.5, (m, n) = (0, 4): integral over [0.125, 0.125·2^8]
        let v = analytic_covariance([0.0, 0.0], [0.5, 0.0], 0, 4).unwrap();
        let q = quadrature(0.125, 32.0);
        assert!((v - q).abs() <= 1e-10 * q.abs(), "{v} vs {q}");
        assert!((v - 0.811_712_820_292_084_1).abs() < 1e-12, "{v}");
    }

    #[test]
    fn matches_quadrature_across_regimes() {
        for &(r, m, n) in &[
            (1e-4, 0, 5),
            (0.01, 2, 6),
            (0.2, 0, 1),
            (0.2, 1, 3),
            (0.7, 0, 2),
            (1.3, 0, 6),
            (2.5, 0, 3),
            (0.9, 3, 4),
        ] {
            let v = analytic_covariance([0.0, 0.0], [r, 0.0], m, n).unwrap();
            let q = oracle(r, m, n);
            assert!((v - q).abs() <= 1e-10 * q.abs().max(1e-300), "r={r} m={m} n={n}: {v} vs {q}");
        }
    }

    #[test]
    fn far_apart_vanishes() {
        let v = analytic_covariance([0.0, 0.0], [60.0, 0.0], 0, 1).unwrap();
        assert!(v.abs() < 1e-300);
    }

    #[test]
    fn invalid_range() {
        assert!(matches!(
            analytic_covariance([0.0; 2], [1.0, 0.0], 3, 3),
            Err(Error::InvalidRange { m: 3, n: 3 })
        ));
    }

    #[test]
    fn dyadic_scaling() {
        for j in 1..4 {
            let s = 0.5f64.powi(j);
            let a = analytic_covariance([0.1, 0.2], [0.4, -0.1], 1, 4).unwrap();
            let b = analytic_covariance([0.1 * s, 0.2 * s], [0.4 * s, -0.1 * s], 1 + j as u32, 4 + j as u32).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.abs());
        }
    }

    #[test]
    fn e1_known_values() {
        assert!((exp_integral_e1(1.0) - 0.219_383_934_395_520_3).abs() < 1e-15);
        assert!((exp_integral_e1(0.1) - 1.822_923_958_419_390_7).abs() < 1e-14);
        assert!((exp_integral_e1(5.0) - 0.001_148_295_591_275_325_6).abs() < 1e-17);
    }
}
