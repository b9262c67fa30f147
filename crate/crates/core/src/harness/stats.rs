//! Order statistics, bootstrap intervals and trend fits.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::compensated_sum;
use crate::rng::replica_rng;

pub const BOOTSTRAP_RESAMPLES: usize = 1000;
/// Two-sided normal quantile for 95% intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Lower-interpolation quantile: the order statistic at `floor(p (N - 1))`.
pub fn quantile_lower(samples: &[f64], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Data("no samples".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Precondition(format!("probability {p} outside [0, 1]")));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(sorted_quantile(&s, p))
}

fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    sorted[(p * (sorted.len() - 1) as f64).floor() as usize]
}

/// Mean, sample standard deviation and standard error.
pub fn mean_sd_se(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, 0.0, 0.0);
    }
    let var = compensated_sum(values.iter().map(|v| (v - mean).powi(2))) / (n - 1.0);
    (mean, var.sqrt(), (var / n).sqrt())
}

/// Normal-approximation 95% interval for a binomial proportion.
pub fn binomial_ci(successes: u64, trials: u64) -> (f64, [f64; 2]) {
    let p = successes as f64 / trials as f64;
    let h = Z95 * (p * (1.0 - p) / trials as f64).sqrt();
    (p, [p - h, p + h])
}

/// Percentile 95% interval of `statistic` over resamples of `0..len`, from stream `seed`.
pub fn bootstrap_ci(len: usize, seed: u64, resamples: usize, mut statistic: impl FnMut(&[usize]) -> f64) -> [f64; 2] {
    let mut rng = replica_rng(seed, 0);
    let mut idx = vec![0; len];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for i in idx.iter_mut() {
                *i = rng.random_range(0..len);
            }
            statistic(&idx)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    [sorted_quantile(&stats, 0.025), sorted_quantile(&stats, 0.975)]
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Quantile estimate with its bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub p: f64,
    pub value: f64,
    pub ci: [f64; 2],
}

/// Quantiles at every `p`, each with a bootstrap interval from stream `seed`.
pub fn estimate_quantiles(samples: &[f64], p_list: &[f64], seed: u64) -> Result<Vec<QuantileRow>> {
    if samples.is_empty() {
        return Err(Error::Data("no samples".into()));
    }
    let mut scratch = Vec::with_capacity(samples.len());
    p_list
        .iter()
        .map(|&p| {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Precondition(format!("probability {p} outside (0, 1)")));
            }
            let value = quantile_lower(samples, p)?;
            let ci = bootstrap_ci(samples.len(), seed, BOOTSTRAP_RESAMPLES, |idx| {
                scratch.clear();
                scratch.extend(idx.iter().map(|&i| samples[i]));
                scratch.sort_by(f64::total_cmp);
                sorted_quantile(&scratch, p)
            });
            Ok(QuantileRow { p, value, ci })
        })
        .collect()
}

/// Per-scale quantiles of the crossing resistance and the running ratio maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable {
    pub n: Vec<u32>,
    pub p: f64,
    /// `l̂(p)` per scale.
    pub low: Vec<QuantileRow>,
    /// `l̂(1 - p)` per scale.
    pub high: Vec<QuantileRow>,
    /// `l̂(1 - p) / l̂(p)` per scale.
    pub ratio: Vec<f64>,
    /// `Λ̂_n = max_{m ≤ n} ratio_m`.
    pub lambda: Vec<f64>,
    pub lambda_ci: Vec<[f64; 2]>,
    /// Least-squares slope of `ratio` against `n`, with a bootstrap interval.
    pub ratio_slope: f64,
    pub ratio_slope_ci: [f64; 2],
}

fn ratios(per_scale: &[Vec<f64>], idx: Option<&[usize]>, p: f64) -> Vec<f64> {
    per_scale
        .iter()
        .map(|s| {
            let mut v: Vec<f64> = match idx {
                Some(idx) => idx.iter().map(|&i| s[i]).collect(),
                None => s.clone(),
            };
            v.sort_by(f64::total_cmp);
            sorted_quantile(&v, 1.0 - p) / sorted_quantile(&v, p)
        })
        .collect()
}

fn running_max(v: &[f64]) -> Vec<f64> {
    v.iter()
        .scan(f64::NEG_INFINITY, |m, &x| {
            *m = m.max(x);
            Some(*m)
        })
        .collect()
}

/// Builds the table from replica-aligned samples: `per_scale[i][r]` is replica `r` at scale `n[i]`.
///
/// Bootstrap resamples draw the same replica indices at every scale.
pub fn quantile_table(n: &[u32], per_scale: &[Vec<f64>], p: f64, seed: u64) -> Result<QuantileTable> {
    if n.len() != per_scale.len() || per_scale.is_empty() {
        return Err(Error::Data("one sample set per scale is required".into()));
    }
    let len = per_scale[0].len();
    if len == 0 || per_scale.iter().any(|s| s.len() != len) {
        return Err(Error::Data("sample sets must be nonempty and replica-aligned".into()));
    }
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::Precondition(format!("probability {p} outside (0, 1/2)")));
    }
    let mut low = Vec::new();
    let mut high = Vec::new();
    for (i, s) in per_scale.iter().enumerate() {
        let rows = estimate_quantiles(s, &[p, 1.0 - p], crate::rng::mix64(seed, i as u64))?;
        low.push(rows[0]);
        high.push(rows[1]);
    }
    let ratio = ratios(per_scale, None, p);
    let lambda = running_max(&ratio);
    let xs: Vec<f64> = n.iter().map(|&v| f64::from(v)).collect();
    let mut boot: Vec<Vec<f64>> = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let ratio_slope_ci = bootstrap_ci(len, crate::rng::mix64(seed, u64::MAX), BOOTSTRAP_RESAMPLES, |idx| {
        let r = ratios(per_scale, Some(idx), p);
        let s = ols_slope(&xs, &r);
        boot.push(running_max(&r));
        s
    });
    let lambda_ci = (0..n.len())
        .map(|i| {
            let mut v: Vec<f64> = boot.iter().map(|b| b[i]).collect();
            v.sort_by(f64::total_cmp);
            [sorted_quantile(&v, 0.025), sorted_quantile(&v, 0.975)]
        })
        .collect();
    Ok(QuantileTable { n: n.to_vec(), p, low, high, ratio_slope: ols_slope(&xs, &ratio), ratio, lambda, lambda_ci, ratio_slope_ci })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lower_interpolation() {
        assert_eq!(quantile_lower(&[4.0, 2.0, 1.0, 3.0], 0.5).unwrap(), 2.0);
        assert_eq!(quantile_lower(&[4.0, 2.0, 1.0, 3.0], 1.0).unwrap(), 4.0);
        assert_eq!(quantile_lower(&[4.0, 2.0, 1.0, 3.0], 0.0).unwrap(), 1.0);
        assert!(quantile_lower(&[], 0.5).is_err());
        assert!(estimate_quantiles(&[], &[0.5], 0).is_err());
    }

    #[test]
    fn bootstrap_interval_covers_the_estimate() {
        let mut rng = replica_rng(4, 4);
        let s: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
        let q = estimate_quantiles(&s, &[0.25, 0.75], 9).unwrap();
        for r in &q {
            assert!(r.ci[0] <= r.value && r.value <= r.ci[1]);
            assert!((r.value - r.p).abs() < 0.06);
        }
        assert_eq!(q, estimate_quantiles(&s, &[0.25, 0.75], 9).unwrap());
    }

    #[test]
    fn statistics_helpers() {
        let (m, sd, se) = mean_sd_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((se - sd / 2.0).abs() < 1e-15);
        assert_eq!(ols_slope(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]), 2.0);
        assert_eq!(ols_slope(&[1.0, 1.0], &[2.0, 4.0]), 0.0);
        let (p, ci) = binomial_ci(50, 100);
        assert_eq!(p, 0.5);
        assert!((ci[1] - ci[0] - 2.0 * Z95 * 0.05).abs() < 1e-12);
    }

    #[test]
    fn lambda_is_the_running_maximum() {
        let a: Vec<f64> = (1..=100).map(f64::from).collect();
        let b: Vec<f64> = a.iter().map(|x| x.sqrt()).collect();
        let c: Vec<f64> = a.iter().map(|x| x * x).collect();
        let t = quantile_table(&[3, 4, 5], &[a.clone(), b, c], 0.25, 1).unwrap();
        // numpy-lower order statistics: indices 24 and 74
        assert_eq!(t.ratio[0], 75.0 / 25.0);
        assert_eq!(t.ratio[1], 75f64.sqrt() / 5.0);
        assert_eq!(t.ratio[2], 9.0);
        assert_eq!(t.lambda, vec![3.0, 3.0, 9.0]);
        assert!(t.ratio.iter().all(|&r| r >= 1.0));
        assert!(t.lambda_ci.iter().all(|ci| ci[0] <= ci[1]));
        assert!(quantile_table(&[3], &[vec![]], 0.25, 0).is_err());
        assert!(quantile_table(&[3, 4], &[a.clone(), a[..5].to_vec()], 0.25, 0).is_err());
    }

    proptest! {
        #[test]
        fn quantiles_are_monotone(v in prop::collection::vec(-1e3f64..1e3, 1..60), p1 in 0.0f64..1.0, p2 in 0.0f64..1.0) {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            prop_assert!(quantile_lower(&v, lo).unwrap() <= quantile_lower(&v, hi).unwrap());
        }
    }
}
