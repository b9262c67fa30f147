//! The registered experiments.

use serde_json::{json, Value};

use super::stats::{binomial_ci, bootstrap_ci, estimate_quantiles, mean_sd_se, ols_slope, quantile_lower};
use super::{cells, environment, field_seed, par_replicas, Artifact, Assertion, ExperimentConfig, ExperimentReport};
use crate::error::{Error, Result};
use crate::field::{default_zeta, sample_field, GridSpec, LatticeBox};
use crate::measure::{eta_measure, pi_measure};
use crate::network::{annulus_views, build_network, dual_network, Network, Slit, Terminals};
use crate::resistance::{
    around_resistance, brute_force_min_cut, green_function, hitting_probability, max_flow_min_cut, path_decomposition,
    resdif_gap, solve_two_terminal,
};
use crate::rng::{mix64, replica_rng};
use crate::walk::{
    cmp_distance, exit_measure, exit_moments, exit_time_stats, harmonic_exit_measure, rescaled_path, time_scale, write_trace,
    RescaledPath, Start, Walker,
};

const WALK_STREAM: u64 = 0x5741_4C4B;
const BOOTSTRAP_STREAM: u64 = 0x424F_4F54;

const RC_TOL: f64 = 1e-9;
const ENERGY_TOL: f64 = 1e-9;
const DUALITY_TOL: f64 = 1e-8;
const CONSERVATION_TOL: f64 = 1e-9;
const PATH_ENERGY_TOL: f64 = 1e-6;
const MAX_FLOW_TOL: f64 = 1e-9;
const GREEN_TOL: f64 = 1e-8;
const LAW_SLACK: f64 = 1e-12;
const RESDIF_SLACK: f64 = 1e-8;
const ANNULUS_DUALITY_TOL: f64 = 1e-6;

fn scales(cfg: &ExperimentConfig) -> Result<Vec<(u32, u32)>> {
    (0..cfg.n_list.len()).map(|i| Ok((cfg.n_list[i], cfg.zeta(i)?))).collect()
}

/// `(k+1) × k` cells with `k` from the geometry.
fn self_dual_bounds(cfg: &ExperimentConfig, n: u32, zeta: u32) -> Result<LatticeBox> {
    let k = match cfg.geometry.k {
        Some(k) => i64::from(k),
        None => cells(cfg.geometry.height, n, zeta)?.max(2),
    };
    Ok(LatticeBox::new(0, k + 1, 0, k))
}

fn terminals_of(net: &Network) -> Result<&Terminals> {
    net.terminals().ok_or_else(|| Error::Terminals("network carries no terminals".into()))
}

fn resistance_between(net: &Network, t: &Terminals, tol: f64) -> Result<f64> {
    Ok(solve_two_terminal(net, t, tol)?.resistance)
}

fn origin(net: &Network) -> Result<usize> {
    net.find_lattice([0, 0]).ok_or_else(|| Error::Domain("origin is not a lattice vertex".into()))
}

/// Vertices strictly inside the rectangle.
fn interior(net: &Network) -> Result<Vec<bool>> {
    let s = net.shape().ok_or_else(|| Error::Shape("not a rectangle".into()))?;
    let mut dom = vec![false; net.vertex_count()];
    for r in 1..s.height {
        for c in 1..s.width {
            dom[s.vertex(c, r)] = true;
        }
    }
    Ok(dom)
}

fn n_key(n: u32) -> String {
    format!("n={n}")
}

fn contains_zero(ci: [f64; 2]) -> bool {
    ci[0] <= 0.0 && 0.0 <= ci[1]
}

pub fn duality_median(rep: &mut ExperimentReport) -> Result<()> {
    let cfg = rep.config.clone();
    let mut worst = 0.0f64;
    let mut total = 0u64;
    for (n, zeta) in scales(&cfg)? {
        let bounds = self_dual_bounds(&cfg, n, zeta)?;
        let res = par_replicas(cfg.replicas, |r| {
            let (_, net) = environment(&cfg, n, zeta, bounds, cfg.gamma, field_seed(&cfg, r))?;
            let lr = resistance_between(&net, &net.left_right_terminals()?, cfg.tol)?;
            let d = dual_network(&net)?;
            let ud = resistance_between(&d, terminals_of(&d)?, cfg.tol)?;
            Ok((lr, ud))
        })?;
        let mut below = 0u64;
        for (r, &(lr, ud)) in res.iter().enumerate() {
            let seed = field_seed(&cfg, r as u64);
            rep.row(n, zeta, cfg.gamma, r as u64, "R_lr", lr, seed);
            rep.row(n, zeta, cfg.gamma, r as u64, "R_dual_ud", ud, seed);
            worst = worst.max((lr * ud - 1.0).abs());
            below += u64::from(lr <= 1.0);
        }
        total += cfg.replicas;
        let (p, ci) = binomial_ci(below, cfg.replicas);
        rep.assert(
            Assertion::at_most(format!("P(R<=1) n={n}"), false, (p - 0.5).abs(), cfg.thresholds.median_band)
                .with_samples(cfg.replicas)
                .with_ci(ci)
                .with_detail(format!("P(R <= 1) = {p}")),
        );
        let lr: Vec<f64> = res.iter().map(|x| x.0).collect();
        rep.summary.insert(
            n_key(n),
            json!({"zeta": zeta, "cells": [bounds.width(), bounds.height()], "p_below_one": p, "ci": ci, "median": quantile_lower(&lr, 0.5)?}),
        );
    }
    rep.assert(Assertion::at_most("duality product", true, worst, DUALITY_TOL).with_samples(total));
    Ok(())
}

pub fn quantile_table(rep: &mut ExperimentReport) -> Result<()> {
    let cfg = rep.config.clone();
    let sc = scales(&cfg)?;
    let mut per_scale = Vec::new();
    for &(n, zeta) in &sc {
        let bounds = self_dual_bounds(&cfg, n, zeta)?;
        let r = par_replicas(cfg.replicas, |r| {
            let (_, net) = environment(&cfg, n, zeta, bounds, cfg.gamma, field_seed(&cfg, r))?;
            resistance_between(&net, &net.left_right_terminals()?, cfg.tol)
        })?;
        for (i, &v) in r.iter().enumerate() {
            rep.row(n, zeta, cfg.gamma, i as u64, "R_lr", v, field_seed(&cfg, i as u64));
        }
        per_scale.push(r);
    }
    let ns: Vec<u32> = sc.iter().map(|s| s.0).collect();
    for &p in &cfg.geometry.p_list {
        let t = super::stats::quantile_table(&ns, &per_scale, p, mix64(cfg.seed, BOOTSTRAP_STREAM))?;
        let ordered = t.low.iter().zip(&t.high).all(|(l, h)| l.value <= h.value) && t.lambda.iter().all(|&l| l >= 1.0);
        rep.assert(Assertion {
            name: format!("quantile order p={p}"),
            hard: true,
            passed: ordered,
            value: f64::from(u8::from(ordered)),
            threshold: 1.0,
            sample_size: Some(cfg.replicas),
            ci: None,
            detail: "l(p) <= l(1-p) and lambda >= 1".into(),
        });
        let top = t.lambda.last().copied().unwrap_or(1.0);
        rep.assert(
            Assertion::at_most(format!("lambda p={p}"), false, top, cfg.thresholds.lambda_max)
                .with_samples(cfg.replicas)
                .with_ci(*t.lambda_ci.last().unwrap_or(&[top, top])),
        );
        rep.assert(Assertion {
            name: format!("ratio trend p={p}"),
            hard: false,
            passed: contains_zero(t.ratio_slope_ci),
            value: t.ratio_slope,
            threshold: 0.0,
            sample_size: Some(cfg.replicas),
            ci: Some(t.ratio_slope_ci),
            detail: "slope of l(1-p)/l(p) against n; passes when the interval contains 0".into(),
        });
        rep.plot(&format!("lambda_p{p}"), "n", "lambda", ns.iter().map(|&n| f64::from(n)).zip(t.lambda.iter().copied()).collect());
        rep.plot(&format!("ratio_p{p}"), "n", "ratio", ns.iter().map(|&n| f64::from(n)).zip(t.ratio.iter().copied()).collect());
        rep.summary.insert(format!("p={p}"), serde_json::to_value(&t).map_err(|e| Error::Data(e.to_string()))?);
    }
    Ok(())
}

pub fn mesh_compare(rep: &mut ExperimentReport) -> Result<()> {
    let cfg = rep.config.clone();
    let g = &cfg.geometry;
    let zetas = g.mesh_zetas.clone();
    for (n, _) in scales(&cfg)? {
        if let Some(&z) = zetas.iter().find(|&&z| !cfg.allow_small_zeta && z < default_zeta(n)) {
            return Err(Error::Config(format!("mesh zeta {z} below ceil(sqrt({n}))")));
        }
        let grids = zetas
            .iter()
            .map(|&z| GridSpec::centered(n, z, g.aspect * g.half_height, g.half_height))
            .collect::<Result<Vec<_>>>()?;
        let res = par_replicas(cfg.replicas, |r| {
            grids
                .iter()
                .map(|grid| {
                    let (_, net) = environment(&cfg, n, grid.zeta, grid.bounds, cfg.gamma, field_seed(&cfg, r))?;
                    resistance_between(&net, &net.left_right_terminals()?, cfg.tol)
                })
                .collect::<Result<Vec<f64>>>()
        })?;
        let mut summary = serde_json::Map::new();
        for (j, &z) in zetas.iter().enumerate() {
            for (r, v) in res.iter().enumerate() {
                rep.row(n, z, cfg.gamma, r as u64, "R_lr", v[j], field_seed(&cfg, r as u64));
            }
            if j == 0 {
                continue;
            }
            let diffs: Vec<f64> = res.iter().map(|v| (v[j].ln() - v[0].ln()).abs()).collect();
            for (r, &d) in diffs.iter().enumerate() {
                rep.row(n, z, cfg.gamma, r as u64, format!("abs_log_diff_vs_{}", zetas[0]), d, field_seed(&cfg, r as u64));
            }
            let q = estimate_quantiles(&diffs, &[cfg.thresholds.mesh_quantile], mix64(cfg.seed, BOOTSTRAP_STREAM))?[0];
            rep.assert(
                Assertion::at_most(format!("mesh n={n} zeta={}:{z}", zetas[0]), false, q.value, cfg.thresholds.mesh_bound)
                    .with_samples(cfg.replicas)
                    .with_ci(q.ci)
                    .with_detail(format!("{}-quantile of |log R_zeta - log R_zeta'|", cfg.thresholds.mesh_quantile)),
            );
            summary.insert(format!("{}:{z}", zetas[0]), json!({"quantile": q.value, "ci": q.ci, "mean": mean_sd_se(&diffs).0}));
        }
        rep.summary.insert(n_key(n), Value::Object(summary));
    }
    Ok(())
}

pub fn annulus_ratio(rep: &mut ExperimentReport) -> Result<()> {
    let cfg = rep.config.clone();
    let g = &cfg.geometry;
    let mut worst = 0.0f64;
    let mut medians = Vec::new();
    for (n, zeta) in scales(&cfg)? {
        let (r_in, r_out) = (cells(g.r_inner, n, zeta)?, cells(g.r_outer, n, zeta)?);
        if r_in >= r_out {
            return Err(Error::Config(format!("annulus radii collapse to {r_in} cells at n = {n}")));
        }
        let bounds = LatticeBox::symmetric(r_out + 1, r_out + 1);
        let res = par_replicas(cfg.replicas, |r| {
            let (_, net) = environment(&cfg, n, zeta, bounds, cfg.gamma, field_seed(&cfg, r))?;
            let v = annulus_views(&net, [0, 0], r_in, r_out, Slit::PosX)?;
            let around = around_resistance(&v, cfg.tol)?;
            let across_net = v.across().ok_or_else(|| Error::Domain("annulus has no width".into()))?;
            let across = resistance_between(&across_net, terminals_of(&across_net)?, cfg.tol)?;
            let d = v.dual()?;
            let rd = resistance_between(&d, terminals_of(&d)?, cfg.tol)?;
            Ok((around, across, (around * rd - 1.0).abs()))
        })?;
        let mut logs = Vec::new();
        for (r, &(around, across, err)) in res.iter().enumerate() {
            let seed = field_seed(&cfg, r as u64);
            rep.row(n, zeta, cfg.gamma, r as u64, "R_around", around, seed);
            rep.row(n, zeta, cfg.gamma, r as u64, "R_across", across, seed);
            rep.row(n, zeta, cfg.gamma, r as u64, "log_ratio", (around / across).ln(), seed);
            worst = worst.max(err);
            logs.push((around / across).ln());
        }
        let q = estimate_quantiles(&logs, &[0.1, 0.5, 0.9], mix64(cfg.seed, BOOTSTRAP_STREAM))?;
        medians.push((f64::from(n), q[1].value));
        rep.summary.insert(n_key(n), json!({"zeta": zeta, "radii_cells": [r_in, r_out], "log_ratio_quantiles": q}));
    }
    rep.assert(Assertion::at_most("around-across duality", true, worst, ANNULUS_DUALITY_TOL).with_samples(cfg.replicas));
    rep.plot("annulus_log_ratio", "n", "median_log_ratio", medians);
    Ok(())
}

pub fn exit_time_scaling(rep: &mut ExperimentReport) -> Result<()> {
    let cfg = rep.config.clone();
    let sc = scales(&cfg)?;
    let mut per_scale = Vec::new();
    for &(n, zeta) in &sc {
        let r = cells(cfg.geometry.box_radius, n, zeta)?;
        let bounds = LatticeBox::symmetric(r, r);
        let chi = time_scale(n, zeta, cfg.gamma);
        let res = par_replicas(cfg.replicas, |i| {
            let (_, net) = environment(&cfg, n, zeta, bounds, cfg.gamma, field_seed(&cfg, i))?;
            let dom = interior(&net)?;
            crate::walk::exact_exit_expectation(&net, &dom, origin(&net)?, cfg.tol)
        })?;
        let logs: Vec<f64> = res.iter().map(|e| (e / chi).ln()).collect();
        for (i, (&e, &l)) in res.iter().zip(&logs).enumerate() {
            let seed = field_seed(&cfg, i as u64);
            rep.row(n, zeta, cfg.gamma, i as u64, "exit_mean", e, seed);
            rep.row(n, zeta, cfg.gamma, i as u64, "log_exit_over_chi", l, seed);
        }
        per_scale.push(logs);
    }
    let xs: Vec<f64> = sc.iter().map(|s| f64::from(s.0)).collect();
    let medians: Vec<f64> = per_scale.iter().map(|v| quantile_lower(v, 0.5)).collect::<Result<_>>()?;
    let boot_seed = mix64(cfg.seed, BOOTSTRAP_STREAM);
    let median_ci: Vec<[f64; 2]> = per_scale
        .iter()
        .map(|v| {
            let mut s = Vec::with_capacity(v.len());
            bootstrap_ci(v.len(), boot_seed, super::BOOTSTRAP_RESAMPLES, |idx| {
                s.clear();
                s.extend(idx.iter().map(|&i| v[i]));
                quantile_lower(&s, 0.5).unwrap_or(f64::NAN)
            })
        })
        .collect();
    let slope = ols_slope(&xs, &medians);
    let mut m = Vec::with_capacity(xs.len());
    let slope_ci = bootstrap_ci(cfg.replicas as usize, boot_seed, super::BOOTSTRAP_RESAMPLES, |idx| {
        m.clear();
        for v in &per_scale {
            let s: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
            m.push(quantile_lower(&s, 0.5).unwrap_or(f64::NAN));
        }
        ols_slope(&xs, &m)
    });
    let range = medians.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - medians.iter().cloned().fold(f64::INFINITY, f64::min);
    rep.assert(
        Assertion::at_most("exit-time median range", false, range, cfg.thresholds.exit_range)
            .with_samples(cfg.replicas)
            .with_detail(format!("slope {slope} with interval {slope_ci:?}")),
    );
    for (i, &(n, zeta)) in sc.iter().enumerate() {
        rep.summary.insert(n_key(n), json!({"zeta": zeta, "median": medians[i], "ci": median_ci[i]}));
    }
    rep.summary.insert("slope".into(), json!({"value": slope, "ci": slope_ci}));
    rep.plot("exit_time_scaling", "n", "median_log_exit_over_chi", xs.into_iter().zip(medians).collect());
    Ok(())
}

pub fn lqg_moments(rep: &mut ExperimentReport) -> Result<()> {
    let cfg = rep.config.clone();
    let g = &cfg.geometry;
    let mut radii = g.lqg_radii.clone();
    radii.sort_by(|a, b| b.total_cmp(a));
    let q = g.negative_moment;
    // (n, radius index) -> (mean, se, second moment, negative moment)
    let mut table = Vec::new();
    for (n, zeta) in scales(&cfg)? {
        let rc: Vec<i64> = radii.iter().map(|&r| cells(r, n, zeta)).collect::<Result<_>>()?;
        let bounds = LatticeBox::symmetric(rc[0], rc[0]);
        let grid = GridSpec::new(n, zeta, bounds)?;
        let kernel = super::kernel(&cfg, n)?;
        let res = par_replicas(cfg.replicas, |r| {
            let sample = sample_field(&grid, &kernel, field_seed(&cfg, r), false)?;
            let net = build_network(&sample, cfg.gamma, bounds)?;
            rc.iter()
                .map(|&c| {
                    let pts: Vec<[i64; 2]> = (-c..=c).flat_map(|y| (-c..=c).map(move |x| [x, y])).collect();
                    let ids: Vec<usize> = pts.iter().map(|&p| net.find_lattice(p).expect("box vertex")).collect();
                    Ok((eta_measure(&sample, cfg.gamma, &pts)?.normalized, pi_measure(&net, &ids)?.raw))
                })
                .collect::<Result<Vec<(f64, f64)>>>()
        })?;
        let mut summary = serde_json::Map::new();
        for (j, &radius) in radii.iter().enumerate() {
            let eta: Vec<f64> = res.iter().map(|v| v[j].0).collect();
            let pi: Vec<f64> = res.iter().map(|v| v[j].1).collect();
            let pi_mean = mean_sd_se(&pi).0;
            for r in 0..res.len() {
                let seed = field_seed(&cfg, r as u64);
                rep.row(n, zeta, cfg.gamma, r as u64, format!("eta_norm@{radius}"), eta[r], seed);
                rep.row(n, zeta, cfg.gamma, r as u64, format!("pi_raw@{radius}"), pi[r], seed);
                rep.row(n, zeta, cfg.gamma, r as u64, format!("pi_norm_empirical@{radius}"), pi[r] / pi_mean, seed);
            }
            let (mean, _, se) = mean_sd_se(&eta);
            let second = mean_sd_se(&eta.iter().map(|x| x * x).collect::<Vec<_>>()).0;
            let negative = mean_sd_se(&eta.iter().map(|x| x.powf(-q)).collect::<Vec<_>>()).0;
            rep.assert(
                Assertion::at_most(format!("eta mean n={n} r={radius}"), false, (mean - 1.0).abs(), cfg.thresholds.se_multiple * se)
                    .with_samples(cfg.replicas)
                    .with_ci([mean - super::Z95 * se, mean + super::Z95 * se])
                    .with_detail(format!("mean normalized eta {mean}")),
            );
            summary.insert(
                format!("r={radius}"),
                json!({"cells": rc[j], "eta_mean": mean, "eta_se": se, "eta_second": second, "eta_negative": negative,
                       "negative_order": q, "pi_mean": pi_mean, "pi_normalization": "empirical"}),
            );
            table.push((n, j, mean, second, negative));
        }
        rep.summary.insert(n_key(n), Value::Object(summary));
    }
    let factor = cfg.thresholds.moment_factor;
    for (j, &radius) in radii.iter().enumerate() {
        rep.plot(
            &format!("eta_mean_r{radius}"),
            "n",
            "mean_normalized_eta",
            table.iter().filter(|t| t.1 == j).map(|t| (f64::from(t.0), t.2)).collect(),
        );
        let neg: Vec<f64> = table.iter().filter(|t| t.1 == j).map(|t| t.4).collect();
        let spread = neg.iter().cloned().fold(0.0, f64::max) / neg.iter().cloned().fold(f64::INFINITY, f64::min);
        rep.assert(
            Assertion::at_most(format!("negative moment stability r={radius}"), false, spread, factor)
                .with_samples(cfg.replicas)
                .with_detail(format!("max/min over n of E[eta^-{q}]")),
        );
        // box scales two dyadic steps apart
        if let Some(k) = radii.iter().position(|&s| (radius / s - 4.0).abs() < 1e-9) {
            if cfg.gamma <= 0.3 {
                for (n, _) in scales(&cfg)? {
                    let a = table.iter().find(|t| t.0 == n && t.1 == j).map_or(f64::NAN, |t| t.3);
                    let b = table.iter().find(|t| t.0 == n && t.1 == k).map_or(f64::NAN, |t| t.3);
                    rep.assert(
                        Assertion::at_most(format!("second moment scaling n={n} r={radius}:{}", radii[k]), false, (a / b).max(b / a), factor)
                            .with_samples(cfg.replicas),
                    );
                }
            }
        }
    }
    Ok(())
}

/// Worst deviations of one environment from the exact identities.
#[derive(Debug, Clone, Copy, Default)]
struct IdentityErrors {
    log_r: f64,
    rc: f64,
    energy: f64,
    duality: f64,
    conservation: f64,
    path_energy: f64,
    max_flow_cut: f64,
    max_flow_brute: f64,
    windows: usize,
    green_symmetry: f64,
    series: f64,
    parallel: f64,
    resdif: f64,
}

fn identity_checks(cfg: &ExperimentConfig, n: u32, zeta: u32, gamma: f64, seed: u64) -> Result<IdentityErrors> {
    let tol = cfg.tol;
    let bounds = self_dual_bounds(cfg, n, zeta)?;
    let (sample, net) = environment(cfg, n, zeta, bounds, gamma, seed)?;
    let s = net.shape().ok_or_else(|| Error::Shape("not a rectangle".into()))?;
    let t = net.left_right_terminals()?;
    let sol = solve_two_terminal(&net, &t, tol)?;
    let r = sol.resistance;
    let mut e = IdentityErrors {
        log_r: r.ln(),
        rc: (r * sol.conductance - 1.0).abs(),
        energy: (sol.energy - r).abs() / r,
        ..Default::default()
    };
    let d = dual_network(&net)?;
    e.duality = (r * resistance_between(&d, terminals_of(&d)?, tol)? - 1.0).abs();
    let roles = t.roles(net.vertex_count());
    e.conservation = (sol.strength(&net) - 1.0).abs();
    for x in (0..net.vertex_count()).filter(|&x| roles[x] == 0) {
        e.conservation = e.conservation.max(sol.divergence(&net, x).abs());
    }
    let paths = path_decomposition(&net, &sol)?;
    e.path_energy = (paths.energy() - r).abs() / r;

    let caps: Vec<f64> = net.edges().iter().map(|e| e.conductance()).collect();
    let mf = max_flow_min_cut(&net, &caps, &t)?;
    e.max_flow_cut = (mf.value - mf.cut_capacity).abs() / mf.value.max(1.0);
    for x in bounds.x_min..bounds.x_max - 1 {
        for y in bounds.y_min..bounds.y_max - 1 {
            let w = net.sub_rectangle(LatticeBox::new(x, x + 2, y, y + 2))?;
            let wc: Vec<f64> = w.edges().iter().map(|e| e.conductance()).collect();
            let wt = w.left_right_terminals()?;
            let v = max_flow_min_cut(&w, &wc, &wt)?.value;
            e.max_flow_brute = e.max_flow_brute.max((v - brute_force_min_cut(&w, &wc, &wt)?).abs() / v.max(1.0));
            e.windows += 1;
        }
    }

    let dom = interior(&net)?;
    let x = s.vertex(s.width / 2, s.height / 2);
    let y = if x == s.vertex(1, 1) { s.vertex(s.width - 1, s.height - 1) } else { s.vertex(1, 1) };
    let gxy = green_function(&net, &dom, x, y, tol)? / net.conductance_mass(y);
    let gyx = green_function(&net, &dom, y, x, tol)? / net.conductance_mass(x);
    e.green_symmetry = (gxy - gyx).abs() / gxy.abs().max(1.0);

    let ra = resistance_between(&net, &Terminals::new(t.a.clone(), vec![x])?, tol)?;
    let rz = resistance_between(&net, &Terminals::new(vec![x], t.z.clone())?, tol)?;
    e.series = (r - (ra + rz)) / r;
    let right = s.right_column();
    let (z1, z2) = right.split_at(right.len() / 2);
    let c1 = 1.0 / resistance_between(&net, &Terminals::new(t.a.clone(), z1.to_vec())?, tol)?;
    let c2 = 1.0 / resistance_between(&net, &Terminals::new(t.a.clone(), z2.to_vec())?, tol)?;
    e.parallel = (sol.conductance - (c1 + c2)) / sol.conductance;

    // annulus of radii 1 and 2 in a square of side 8 with the same field law
    let square = LatticeBox::symmetric(4, 4);
    let grid = GridSpec::new(n, zeta, square)?;
    let field = if sample.grid.bounds.contains_box(&square) {
        sample
    } else {
        sample_field(&grid, &super::kernel(cfg, n)?, seed, false)?
    };
    let sq = build_network(&field, gamma, square)?;
    let v = annulus_views(&sq, [0, 0], 1, 2, Slit::PosX)?;
    let gap = resdif_gap(&sq, &sq.left_right_terminals()?, &v.hole_edges, &v.ring_edges, &v, tol)?;
    e.resdif = if gap.disconnected { f64::INFINITY } else { gap.lhs - gap.rhs };
    Ok(e)
}

pub fn identity_suite(rep: &mut ExperimentReport) -> Result<()> {
    let cfg = rep.config.clone();
    let mut all: Vec<IdentityErrors> = Vec::new();
    let p = cfg.geometry.p_list.first().copied().unwrap_or(0.25);
    for (n, zeta) in scales(&cfg)? {
        for &gamma in &cfg.geometry.gamma_list {
            let res = par_replicas(cfg.replicas, |r| identity_checks(&cfg, n, zeta, gamma, field_seed(&cfg, r)))?;
            for (r, e) in res.iter().enumerate() {
                let seed = field_seed(&cfg, r as u64);
                let stats = [
                    ("log_R", e.log_r),
                    ("rc_error", e.rc),
                    ("energy_error", e.energy),
                    ("duality_error", e.duality),
                    ("conservation_error", e.conservation),
                    ("path_energy_error", e.path_energy),
                    ("max_flow_cut_error", e.max_flow_cut),
                    ("max_flow_brute_error", e.max_flow_brute),
                    ("green_symmetry_error", e.green_symmetry),
                    ("series_gap", e.series),
                    ("parallel_gap", e.parallel),
                    ("resdif_gap", e.resdif),
                ];
                for (name, v) in stats {
                    rep.row(n, zeta, gamma, r as u64, name, v, seed);
                }
            }
            let logs: Vec<f64> = res.iter().map(|e| e.log_r).collect();
            let rs: Vec<f64> = logs.iter().map(|l| l.exp()).collect();
            let sd = mean_sd_se(&logs).1;
            let ratio = quantile_lower(&rs, 1.0 - p)? / quantile_lower(&rs, p)?;
            let bound = (std::f64::consts::SQRT_2 / p * sd).exp();
            let mut s = Vec::with_capacity(rs.len());
            let ci = bootstrap_ci(rs.len(), mix64(cfg.seed, BOOTSTRAP_STREAM), super::BOOTSTRAP_RESAMPLES, |idx| {
                s.clear();
                s.extend(idx.iter().map(|&i| rs[i]));
                quantile_lower(&s, 1.0 - p).unwrap_or(f64::NAN) / quantile_lower(&s, p).unwrap_or(f64::NAN)
            });
            rep.assert(Assertion {
                name: format!("quantile-variance bound n={n} gamma={gamma}"),
                hard: false,
                passed: ci[0] <= bound * (1.0 + LAW_SLACK),
                value: ratio,
                threshold: bound,
                sample_size: Some(cfg.replicas),
                ci: Some(ci),
                detail: format!("l(1-p)/l(p) against exp(sqrt(2)/p sd(log R)), p = {p}"),
            });
            all.extend(res);
        }
    }
    let count = all.len() as u64;
    let worst = |f: fn(&IdentityErrors) -> f64| all.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let checks: [(&str, f64, f64); 11] = [
        ("resistance times conductance", worst(|e| e.rc), RC_TOL),
        ("energy equals resistance", worst(|e| e.energy), ENERGY_TOL),
        ("duality product", worst(|e| e.duality), DUALITY_TOL),
        ("flow conservation", worst(|e| e.conservation), CONSERVATION_TOL),
        ("path decomposition energy", worst(|e| e.path_energy), PATH_ENERGY_TOL),
        ("max flow equals min cut", worst(|e| e.max_flow_cut), MAX_FLOW_TOL),
        ("max flow equals brute-force cut", worst(|e| e.max_flow_brute), MAX_FLOW_TOL),
        ("green symmetry", worst(|e| e.green_symmetry), GREEN_TOL),
        ("series law", worst(|e| e.series), LAW_SLACK),
        ("parallel law", worst(|e| e.parallel), LAW_SLACK),
        ("resdif bound", worst(|e| e.resdif), RESDIF_SLACK),
    ];
    for (name, value, tol) in checks {
        rep.assert(Assertion::at_most(name, true, value, tol).with_samples(count));
    }
    rep.summary.insert(
        "environments".into(),
        json!({"count": count, "brute_force_windows": all.iter().map(|e| e.windows).sum::<usize>()}),
    );
    Ok(())
}

/// Per-environment walk checks.
struct WalkCheck {
    exact_mean: f64,
    exact_second: f64,
    green_double_sum: f64,
    mc_mean: f64,
    mc_se: f64,
    mc_second: f64,
    mc_second_se: f64,
    tv: f64,
    tv_scale: f64,
    hitting_exact: f64,
    hitting_freq: f64,
    deterministic: bool,
    path: RescaledPath,
}

fn walk_checks(cfg: &ExperimentConfig, n: u32, zeta: u32, r: u64) -> Result<WalkCheck> {
    let g = &cfg.geometry;
    let rc = cells(g.walk_radius, n, zeta)?;
    let (_, net) = environment(cfg, n, zeta, LatticeBox::symmetric(rc, rc), cfg.gamma, field_seed(cfg, r))?;
    let dom = interior(&net)?;
    let start = origin(&net)?;
    let wseed = mix64(mix64(cfg.seed, WALK_STREAM), r);
    let exact = exit_moments(&net, &dom, start, cfg.tol)?;
    let walker = Walker::for_workload(&net, (exact.mean * g.walk_samples as f64) as u64)?;
    let mc = exit_time_stats(&walker, Start::Vertex(start), &dom, g.walk_samples, mix64(wseed, 0))?;
    let law = harmonic_exit_measure(&net, &dom, start, cfg.tol)?;
    let em = exit_measure(&walker, Start::Vertex(start), &dom, g.measure_samples, mix64(wseed, 1))?;
    let tv_scale = 0.5 * law.iter().map(|p| (p * (1.0 - p) / g.measure_samples as f64).sqrt()).sum::<f64>();

    let s = net.shape().ok_or_else(|| Error::Shape("not a rectangle".into()))?;
    let (a, z) = (s.left_column(), s.right_column());
    let hit_dom: Vec<bool> = (0..net.vertex_count()).map(|x| !a.contains(&x) && !z.contains(&x)).collect();
    let hitting_exact = hitting_probability(&net, start, &a, &z, cfg.tol)?;
    let hm = exit_measure(&walker, Start::Vertex(start), &hit_dom, g.walk_samples, mix64(wseed, 2))?;
    let hitting_freq = a.iter().map(|&x| hm.frequency(x)).sum();

    let first = walker.run(start, &dom, &mut replica_rng(wseed, 3), true, crate::walk::DEFAULT_STEP_BUDGET)?;
    let again = walker.run(start, &dom, &mut replica_rng(wseed, 3), true, crate::walk::DEFAULT_STEP_BUDGET)?;
    // the same walk stream at every scale couples the traces
    let traced = walker.run(start, &dom, &mut replica_rng(mix64(cfg.seed, WALK_STREAM), r), true, crate::walk::DEFAULT_STEP_BUDGET)?;
    Ok(WalkCheck {
        exact_mean: exact.mean,
        exact_second: exact.second_moment,
        green_double_sum: exact.green_double_sum,
        mc_mean: mc.mean,
        mc_se: mc.se,
        mc_second: mc.second_moment,
        mc_second_se: mc.second_moment_se,
        tv: em.total_variation(&law),
        tv_scale,
        hitting_exact,
        hitting_freq,
        deterministic: first == again,
        path: rescaled_path(&traced, &net, n, zeta, cfg.gamma)?,
    })
}

pub fn walk_consistency(rep: &mut ExperimentReport) -> Result<()> {
    let cfg = rep.config.clone();
    let g = cfg.geometry.clone();
    let k = cfg.thresholds.se_multiple;
    let mut worst_mean_z = 0.0f64;
    let mut worst_second_z = 0.0f64;
    let mut worst_hit_z = 0.0f64;
    let mut worst_tv = 0.0f64;
    let mut worst_tv_ratio = 0.0f64;
    let mut bound_ok = true;
    let mut deterministic = true;
    let mut prev: Option<(u32, Vec<RescaledPath>)> = None;
    let sc = scales(&cfg)?;
    for &(n, zeta) in &sc {
        let res = par_replicas(cfg.replicas, |r| walk_checks(&cfg, n, zeta, r))?;
        for (r, c) in res.iter().enumerate() {
            let seed = field_seed(&cfg, r as u64);
            let stats = [
                ("exit_mean_exact", c.exact_mean),
                ("exit_mean_mc", c.mc_mean),
                ("exit_mean_se", c.mc_se),
                ("exit_second_exact", c.exact_second),
                ("exit_second_mc", c.mc_second),
                ("green_double_sum", c.green_double_sum),
                ("exit_tv", c.tv),
                ("hitting_exact", c.hitting_exact),
                ("hitting_freq", c.hitting_freq),
            ];
            for (name, v) in stats {
                rep.row(n, zeta, cfg.gamma, r as u64, name, v, seed);
            }
            worst_mean_z = worst_mean_z.max((c.mc_mean - c.exact_mean).abs() / c.mc_se);
            worst_second_z = worst_second_z.max((c.mc_second - c.exact_second).abs() / c.mc_second_se);
            let hse = (c.hitting_exact * (1.0 - c.hitting_exact) / g.walk_samples as f64).sqrt();
            worst_hit_z = worst_hit_z.max((c.hitting_freq - c.hitting_exact).abs() / hse);
            worst_tv = worst_tv.max(c.tv);
            worst_tv_ratio = worst_tv_ratio.max(c.tv / (3.0 * c.tv_scale));
            bound_ok &= c.exact_second <= 2.0 * c.green_double_sum * (1.0 + LAW_SLACK);
            deterministic &= c.deterministic;
        }
        let paths: Vec<RescaledPath> = res.into_iter().map(|c| c.path).collect();
        if let Some((pn, pp)) = &prev {
            let d: Vec<f64> = pp.iter().zip(&paths).map(|(a, b)| cmp_distance(a, b, g.resolution)).collect();
            for (r, &v) in d.iter().enumerate() {
                rep.row(n, zeta, cfg.gamma, r as u64, format!("d_cmp_vs_n{pn}"), v, field_seed(&cfg, r as u64));
            }
            let (mean, sd, _) = mean_sd_se(&d);
            rep.summary.insert(format!("d_cmp n={pn}:{n}"), json!({"mean": mean, "sd": sd, "resolution": g.resolution}));
        }
        prev = Some((n, paths));
    }
    let envs = cfg.replicas * sc.len() as u64;
    rep.assert(Assertion::at_most("exit mean z-score", false, worst_mean_z, k).with_samples(g.walk_samples));
    rep.assert(Assertion::at_most("exit second moment z-score", false, worst_second_z, k).with_samples(g.walk_samples));
    rep.assert(Assertion::at_most("hitting frequency z-score", false, worst_hit_z, k).with_samples(g.walk_samples));
    let tv = match cfg.thresholds.total_variation {
        Some(t) => Assertion::at_most("exit measure total variation", false, worst_tv, t),
        None => Assertion::at_most("exit measure total variation", false, worst_tv_ratio, 1.0)
            .with_detail(format!("ratio to three statistical scales; largest distance {worst_tv}")),
    };
    rep.assert(tv.with_samples(g.measure_samples));
    rep.assert(Assertion {
        name: "second moment bound".into(),
        hard: true,
        passed: bound_ok,
        value: f64::from(u8::from(bound_ok)),
        threshold: 1.0,
        sample_size: Some(envs),
        ci: None,
        detail: "exact E tau^2 <= 2 sum G G".into(),
    });
    rep.assert(Assertion {
        name: "walk determinism".into(),
        hard: true,
        passed: deterministic,
        value: f64::from(u8::from(deterministic)),
        threshold: 1.0,
        sample_size: Some(envs),
        ci: None,
        detail: "identical streams give identical records".into(),
    });
    rep.summary.insert(
        "worst".into(),
        json!({"mean_z": worst_mean_z, "second_z": worst_second_z, "hitting_z": worst_hit_z, "total_variation": worst_tv}),
    );
    Ok(())
}

pub fn sample_fields(rep: &mut ExperimentReport) -> Result<()> {
    let cfg = rep.config.clone();
    for (n, zeta) in scales(&cfg)? {
        let rc = cells(cfg.geometry.box_radius, n, zeta)?;
        let grid = GridSpec::new(n, zeta, LatticeBox::symmetric(rc, rc))?;
        let kernel = super::kernel(&cfg, n)?;
        let samples = par_replicas(cfg.replicas, |r| sample_field(&grid, &kernel, field_seed(&cfg, r), false))?;
        for (r, s) in samples.into_iter().enumerate() {
            let (mean, sd, _) = mean_sd_se(s.values());
            let seed = field_seed(&cfg, r as u64);
            rep.row(n, zeta, cfg.gamma, r as u64, "mean", mean, seed);
            rep.row(n, zeta, cfg.gamma, r as u64, "variance", sd * sd, seed);
            rep.row(n, zeta, cfg.gamma, r as u64, "max_abs", s.max_abs(), seed);
            rep.artifacts.push(Artifact::Field(format!("field_n{n}_r{r}"), s));
        }
        rep.summary.insert(n_key(n), json!({"zeta": zeta, "refined_dims": grid.refined_dims(), "variance_target": f64::from(n) * std::f64::consts::LN_2}));
    }
    Ok(())
}

pub fn resistances(rep: &mut ExperimentReport) -> Result<()> {
    let cfg = rep.config.clone();
    let g = &cfg.geometry;
    let mut worst = 0.0f64;
    for (n, zeta) in scales(&cfg)? {
        let grid = GridSpec::centered(n, zeta, g.aspect * g.half_height, g.half_height)?;
        let res = par_replicas(cfg.replicas, |r| {
            let (_, net) = environment(&cfg, n, zeta, grid.bounds, cfg.gamma, field_seed(&cfg, r))?;
            let lr = solve_two_terminal(&net, &net.left_right_terminals()?, cfg.tol)?;
            let ud = resistance_between(&net, &net.bottom_top_terminals()?, cfg.tol)?;
            Ok((lr.resistance, ud, (lr.resistance * lr.conductance - 1.0).abs()))
        })?;
        for (r, &(lr, ud, err)) in res.iter().enumerate() {
            let seed = field_seed(&cfg, r as u64);
            rep.row(n, zeta, cfg.gamma, r as u64, "R_lr", lr, seed);
            rep.row(n, zeta, cfg.gamma, r as u64, "R_ud", ud, seed);
            worst = worst.max(err);
        }
        let lr: Vec<f64> = res.iter().map(|x| x.0).collect();
        rep.summary.insert(n_key(n), json!({"zeta": zeta, "cells": [grid.bounds.width(), grid.bounds.height()], "median_lr": quantile_lower(&lr, 0.5)?}));
    }
    rep.assert(Assertion::at_most("resistance times conductance", true, worst, RC_TOL).with_samples(cfg.replicas));
    Ok(())
}

pub fn walk_trace(rep: &mut ExperimentReport) -> Result<()> {
    let cfg = rep.config.clone();
    let g = &cfg.geometry;
    for (n, zeta) in scales(&cfg)? {
        let rc = cells(g.walk_radius, n, zeta)?;
        let bounds = LatticeBox::symmetric(rc, rc);
        for r in 0..cfg.replicas {
            let (_, net) = environment(&cfg, n, zeta, bounds, cfg.gamma, field_seed(&cfg, r))?;
            let dom = interior(&net)?;
            let start = origin(&net)?;
            let walker = Walker::linear(&net);
            let rec = walker.run(start, &dom, &mut replica_rng(mix64(cfg.seed, WALK_STREAM), r), true, crate::walk::DEFAULT_STEP_BUDGET)?;
            let seed = field_seed(&cfg, r);
            rep.row(n, zeta, cfg.gamma, r, "steps", rec.steps as f64, seed);
            rep.row(n, zeta, cfg.gamma, r, "exit_vertex", rec.exit_vertex as f64, seed);
            let mut buf = Vec::new();
            write_trace(&rec, &net, &mut buf)?;
            rep.artifacts.push(Artifact::Text(format!("trace_n{n}_r{r}.txt"), String::from_utf8_lossy(&buf).into_owned()));
            let path = rescaled_path(&rec, &net, n, zeta, cfg.gamma)?;
            rep.plot(&format!("path_n{n}_r{r}"), "x", "y", path.samples.iter().map(|s| (s.1[0], s.1[1])).collect());
            if r == 0 {
                let walker = Walker::for_workload(&net, g.measure_samples.saturating_mul(rec.steps.max(1)))?;
                let m = exit_measure(&walker, Start::Vertex(start), &dom, g.measure_samples, mix64(mix64(cfg.seed, WALK_STREAM), u64::MAX))?;
                let mut buf = Vec::new();
                m.write_csv(&net, &mut buf)?;
                rep.artifacts.push(Artifact::Text(format!("exit_measure_n{n}.csv"), String::from_utf8_lossy(&buf).into_owned()));
            }
        }
        rep.summary.insert(n_key(n), json!({"zeta": zeta, "chi": time_scale(n, zeta, cfg.gamma), "radius_cells": rc}));
    }
    Ok(())
}
