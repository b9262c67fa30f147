use proptest::prelude::*;

use super::*;
use crate::field::{sample_field, GridSpec, KernelSpec, LatticeBox};
use crate::network::{build_network, Edge};
use crate::resistance::hitting_probability;

const TOL: f64 = 1e-10;

fn random_rectangle(w: i64, h: i64, gamma: f64, seed: u64) -> Network {
    let grid = GridSpec::new(3, 2, LatticeBox::new(0, w, 0, h)).unwrap();
    let s = sample_field(&grid, &KernelSpec::full(0, 3).unwrap(), seed, false).unwrap();
    build_network(&s, gamma, grid.bounds).unwrap()
}

fn interior(net: &Network) -> Vec<bool> {
    let s = net.shape().unwrap();
    let lat = net.lattice_coords().unwrap();
    let (x0, y0) = (lat[0][0], lat[0][1]);
    lat.iter()
        .map(|p| p[0] > x0 && p[0] < x0 + s.width as i64 && p[1] > y0 && p[1] < y0 + s.height as i64)
        .collect()
}

fn path_domain() -> (Network, Vec<bool>) {
    (Network::path(&[1.0; 4]).unwrap(), vec![false, true, true, true, false])
}

#[test]
fn step_law_normalizes_conductances() {
    let e = |v, c: f64| Edge { u: 0, v, log_resistance: -c.ln(), midpoint: [0.0; 2] };
    let net = Network::new(vec![[0.0; 2]; 5], vec![e(1, 1.0), e(2, 2.0), e(3, 3.0), e(4, 4.0)], "star").unwrap();
    let d = step_distribution(&net, 0).unwrap();
    for (p, want) in d.probabilities.iter().zip([0.1, 0.2, 0.3, 0.4]) {
        assert!((p - want).abs() < 1e-15);
    }
    let lone = Network::new(vec![[0.0; 2]; 2], vec![], "empty").unwrap();
    assert!(matches!(step_distribution(&lone, 1), Err(Error::Degree(1))));
}

#[test]
fn step_law_is_uniform_without_disorder() {
    let net = Network::uniform_rectangle(4, 4).unwrap();
    let v = net.shape().unwrap().vertex(2, 2);
    let d = step_distribution(&net, v).unwrap();
    assert_eq!(d.probabilities, vec![0.25; 4]);
}

#[test]
fn step_law_follows_midpoint_field() {
    let grid = GridSpec::new(3, 2, LatticeBox::new(0, 6, 0, 6)).unwrap();
    let s = sample_field(&grid, &KernelSpec::full(0, 3).unwrap(), 8, false).unwrap();
    let gamma = 0.2;
    let net = build_network(&s, gamma, grid.bounds).unwrap();
    let lat = net.lattice_coords().unwrap();
    let v = net.shape().unwrap().vertex(3, 2);
    let d = step_distribution(&net, v).unwrap();
    let w: Vec<f64> = d.neighbors.iter().map(|&u| (-gamma * s.at_midpoint(lat[v], lat[u]).unwrap()).exp()).collect();
    let total: f64 = w.iter().sum();
    assert!((d.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    for (p, w) in d.probabilities.iter().zip(&w) {
        assert!((p - w / total).abs() < 1e-14);
    }
}

#[test]
fn boundary_start_stops_immediately() {
    let (net, dom) = path_domain();
    let mut rng = replica_rng(1, 0);
    let r = simulate_until_exit(&net, 4, &dom, &mut rng, true).unwrap();
    assert_eq!(r, ExitRecord { exit_vertex: 4, steps: 0, trace: Some(vec![4]) });
}

#[test]
fn simulation_is_deterministic() {
    let net = random_rectangle(6, 6, 0.5, 2);
    let dom = interior(&net);
    let start = net.shape().unwrap().vertex(3, 3);
    let a = simulate_until_exit(&net, start, &dom, &mut replica_rng(9, 4), true).unwrap();
    let b = simulate_until_exit(&net, start, &dom, &mut replica_rng(9, 4), true).unwrap();
    assert_eq!(a, b);
    let t = a.trace.as_ref().unwrap();
    assert_eq!(t.len() as u64, a.steps + 1);
    assert!(!dom[a.exit_vertex]);
    assert!(t[..t.len() - 1].iter().all(|&v| dom[v]));
}

#[test]
fn step_budget_returns_partial_record() {
    let (net, dom) = path_domain();
    let w = Walker::linear(&net);
    let err = w.run(2, &dom, &mut replica_rng(0, 0), true, 1).unwrap_err();
    match err {
        Error::StepBudget { budget, partial } => {
            assert_eq!(budget, 1);
            assert_eq!(partial.steps, 1);
            assert_eq!(partial.trace.unwrap().len(), 2);
        }
        e => panic!("unexpected {e:?}"),
    }
}

#[test]
fn gamblers_ruin_by_simulation() {
    let (net, dom) = path_domain();
    let w = Walker::linear(&net);
    let n = 100_000;
    let st = exit_time_stats(&w, Start::Vertex(2), &dom, n, 17).unwrap();
    assert!((st.mean - 4.0).abs() < 4.0 * st.se, "{st:?}");
    let m = exit_measure(&w, Start::Vertex(2), &dom, n, 18).unwrap();
    let se = (0.25 / n as f64).sqrt();
    assert!((m.frequency(0) - 0.5).abs() < 4.0 * se);
    assert_eq!(m.counts.values().sum::<u64>(), n);
}

#[test]
fn gamblers_ruin_exactly() {
    let (net, dom) = path_domain();
    assert!((exact_exit_expectation(&net, &dom, 2, TOL).unwrap() - 4.0).abs() < 1e-12);
    assert!((exact_exit_expectation(&net, &dom, 1, TOL).unwrap() - 3.0).abs() < 1e-12);
    assert_eq!(exact_exit_expectation(&net, &dom, 0, TOL).unwrap(), 0.0);
    let law = harmonic_exit_measure(&net, &dom, 1, TOL).unwrap();
    assert!((law[0] - 0.75).abs() < 1e-12 && (law[4] - 0.25).abs() < 1e-12);
}

#[test]
fn trapped_start_is_a_structure_error() {
    let e = |u, v| Edge { u, v, log_resistance: 0.0, midpoint: [0.0; 2] };
    let net = Network::new(vec![[0.0; 2]; 4], vec![e(0, 1), e(2, 3)], "split").unwrap();
    let dom = [true, true, false, true];
    assert!(matches!(exact_exit_expectation(&net, &dom, 0, TOL), Err(Error::Structure(_))));
}

#[test]
fn second_moment_of_symmetric_ruin() {
    // simple walk from the middle of {0..4}: E τ² = (5a⁴ - 2a²)/3 with a = 2
    let (net, dom) = path_domain();
    let m = exit_moments(&net, &dom, 2, TOL).unwrap();
    assert!((m.mean - 4.0).abs() < 1e-12);
    assert!((m.second_moment - 24.0).abs() < 1e-10);
    assert!((m.green_double_sum - 14.0).abs() < 1e-10);
    assert!(m.second_moment <= 2.0 * m.green_double_sum);
}

#[test]
fn green_sum_matches_direct_solve() {
    for seed in 0..3 {
        let net = random_rectangle(6, 6, 0.2, seed);
        let dom = interior(&net);
        for v in [net.shape().unwrap().vertex(3, 3), net.shape().unwrap().vertex(1, 4)] {
            let a = exact_exit_expectation(&net, &dom, v, TOL).unwrap();
            let b = exit_expectation_green_sum(&net, &dom, v, TOL).unwrap();
            assert!((a - b).abs() < 1e-7 * a, "{a} vs {b}");
        }
    }
}

#[test]
fn monte_carlo_moments_match_exact() {
    let net = random_rectangle(6, 6, 0.8, 4);
    let dom = interior(&net);
    let v = net.shape().unwrap().vertex(3, 2);
    let exact = exit_moments(&net, &dom, v, TOL).unwrap();
    let st = exit_time_stats(&Walker::alias(&net).unwrap(), Start::Vertex(v), &dom, 40_000, 5).unwrap();
    assert!((st.mean - exact.mean).abs() < 4.0 * st.se, "{st:?} vs {exact:?}");
    assert!((st.second_moment - exact.second_moment).abs() < 4.0 * st.second_moment_se);
    assert!(exact.second_moment <= 2.0 * exact.green_double_sum);
}

#[test]
fn harmonic_measure_matches_hitting_solves() {
    let net = random_rectangle(6, 6, 0.6, 6);
    let dom = interior(&net);
    let v = net.shape().unwrap().vertex(2, 3);
    let law = harmonic_exit_measure(&net, &dom, v, TOL).unwrap();
    assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    let exits: Vec<usize> = (0..net.vertex_count()).filter(|&x| !dom[x]).collect();
    for &z in exits.iter().step_by(3) {
        let rest: Vec<usize> = exits.iter().copied().filter(|&y| y != z).collect();
        let p = hitting_probability(&net, v, &[z], &rest, TOL).unwrap();
        assert!((law[z] - p).abs() < 1e-9, "{} vs {p}", law[z]);
    }
}

#[test]
fn empirical_exit_measure_is_close_in_total_variation() {
    let net = random_rectangle(8, 8, 0.2, 12);
    let dom = interior(&net);
    let v = net.shape().unwrap().vertex(4, 4);
    let law = harmonic_exit_measure(&net, &dom, v, TOL).unwrap();
    let m = exit_measure(&Walker::alias(&net).unwrap(), Start::Vertex(v), &dom, 100_000, 3).unwrap();
    let tv = m.total_variation(&law);
    assert!(tv <= 0.02, "tv = {tv}");
}

#[test]
fn degenerate_barycentric_start_is_the_corner() {
    let net = random_rectangle(6, 6, 0.4, 1);
    let dom = interior(&net);
    let s = net.shape().unwrap();
    let corners = [s.vertex(2, 2), s.vertex(3, 2), s.vertex(3, 3)];
    let w = Walker::linear(&net);
    let bary = Start::Barycentric { corners, weights: [1.0, 0.0, 0.0] };
    let a = exit_measure(&w, bary, &dom, 20_000, 7).unwrap();
    let law = harmonic_exit_measure(&net, &dom, corners[0], TOL).unwrap();
    assert!(a.total_variation(&law) < 0.04);
    let mix = Start::Barycentric { corners, weights: [0.2, 0.3, 0.5] };
    let b = exit_measure(&w, mix, &dom, 20_000, 7).unwrap();
    let mut mixed = vec![0.0; net.vertex_count()];
    for (c, l) in corners.iter().zip([0.2, 0.3, 0.5]) {
        for (m, p) in mixed.iter_mut().zip(harmonic_exit_measure(&net, &dom, *c, TOL).unwrap()) {
            *m += l * p;
        }
    }
    assert!(b.total_variation(&mixed) < 0.04);
    let far = Start::Barycentric { corners: [s.vertex(0, 0), s.vertex(2, 0), s.vertex(1, 1)], weights: [1.0, 0.0, 0.0] };
    assert!(exit_measure(&w, far, &dom, 10, 0).is_err());
    let bad = Start::Barycentric { corners, weights: [0.5, 0.6, -0.1] };
    assert!(exit_measure(&w, bad, &dom, 10, 0).is_err());
    assert!(exit_measure(&w, Start::Vertex(0), &dom, 0, 0).is_err());
}

#[test]
fn hitting_frequency_matches_resistance_formula() {
    let net = random_rectangle(6, 6, 0.5, 10);
    let s = net.shape().unwrap();
    let a = s.left_column();
    let z = s.right_column();
    let dom: Vec<bool> = (0..net.vertex_count()).map(|x| !a.contains(&x) && !z.contains(&x)).collect();
    let v = s.vertex(2, 3);
    let p = hitting_probability(&net, v, &a, &z, TOL).unwrap();
    let n = 40_000;
    let m = exit_measure(&Walker::linear(&net), Start::Vertex(v), &dom, n, 11).unwrap();
    let freq: f64 = a.iter().map(|&x| m.frequency(x)).sum();
    assert!((freq - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
}

#[test]
fn alias_and_scan_walkers_agree_in_law() {
    let net = random_rectangle(5, 5, 1.0, 3);
    let dom = interior(&net);
    let v = net.shape().unwrap().vertex(2, 2);
    let n = 30_000;
    let a = exit_time_stats(&Walker::linear(&net), Start::Vertex(v), &dom, n, 1).unwrap();
    let b = exit_time_stats(&Walker::alias(&net).unwrap(), Start::Vertex(v), &dom, n, 2).unwrap();
    assert!((a.mean - b.mean).abs() < 4.0 * (a.se * a.se + b.se * b.se).sqrt());
    assert!(Walker::for_workload(&net, 10).unwrap().alias.is_none());
    assert!(Walker::for_workload(&net, 1 << 20).unwrap().alias.is_some());
}

#[test]
fn time_scale_examples() {
    assert_eq!(time_scale(4, 2, 0.0), 1024.0);
    assert!((time_scale(4, 2, 0.2) - 4.0 * 8.08f64.exp2()).abs() < 1e-9);
    assert!((time_scale(4, 2, 0.2) - 1082.39).abs() < 0.01);
}

fn traced(trace: Vec<usize>) -> ExitRecord {
    ExitRecord { exit_vertex: *trace.last().unwrap(), steps: trace.len() as u64 - 1, trace: Some(trace) }
}

#[test]
fn rescaled_path_interpolates() {
    let net = Network::path(&[1.0; 4]).unwrap();
    let p = rescaled_path(&traced(vec![2, 3, 2, 1]), &net, 1, 1, 0.0).unwrap();
    assert_eq!(p.chi, 4.0);
    assert_eq!(p.samples.len(), 4);
    assert_eq!(p.at(0.125), [2.5, 0.0]);
    assert_eq!(p.at(0.625), [1.5, 0.0]);
    assert_eq!(p.at(10.0), [1.0, 0.0]);
    let single = rescaled_path(&traced(vec![3]), &net, 1, 1, 0.0).unwrap();
    assert_eq!(single.samples, vec![(0.0, [3.0, 0.0]), (0.25, [3.0, 0.0])]);
    let bare = ExitRecord { exit_vertex: 0, steps: 0, trace: None };
    assert!(matches!(rescaled_path(&bare, &net, 1, 1, 0.0), Err(Error::Data(_))));
}

fn polyline(points: &[[f64; 2]], times: &[f64]) -> RescaledPath {
    RescaledPath { samples: times.iter().copied().zip(points.iter().copied()).collect(), chi: 1.0 }
}

#[test]
fn curve_distance_examples() {
    let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 2.0], [-1.0, 1.0]];
    let p = polyline(&pts, &[0.0, 1.0, 2.0, 3.0]);
    assert_eq!(cmp_distance(&p, &p, 64), 0.0);
    let d = [0.3, -0.4];
    let shifted: Vec<[f64; 2]> = pts.iter().map(|q| [q[0] + d[0], q[1] + d[1]]).collect();
    let q = polyline(&shifted, &[0.0, 1.0, 2.0, 3.0]);
    assert!((cmp_distance(&p, &q, 64) - 0.5).abs() < 1e-12);
    // same curve traversed with a different clock
    let r = polyline(&pts, &[0.0, 0.2, 2.5, 3.0]);
    let res = 64;
    let step = 3.0 / (res - 1) as f64;
    let max_seg = 2.0 * step / 0.2;
    assert!(cmp_distance(&p, &r, res) <= max_seg);
    assert!(cmp_distance(&p, &r, 512) < cmp_distance(&p, &r, 16));
}

#[test]
fn exports_have_the_documented_columns() {
    let net = Network::path(&[1.0; 2]).unwrap();
    let mut buf = Vec::new();
    write_trace(&traced(vec![1, 2]), &net, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "0 1 0\n1 2 0\n");
    let m = ExitMeasure { samples: 4, counts: [(0, 1), (2, 3)].into_iter().collect() };
    let mut buf = Vec::new();
    m.write_csv(&net, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "vertex_index,x,y,count,frequency\n0,0,0,1,0.25\n2,2,0,3,0.75\n");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn curve_distance_is_symmetric(pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..12),
                                    qts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..12)) {
        let mk = |v: &[(f64, f64)]| polyline(&v.iter().map(|&(x, y)| [x, y]).collect::<Vec<_>>(), &(0..v.len()).map(|i| i as f64).collect::<Vec<_>>());
        let (p, q) = (mk(&pts), mk(&qts));
        let a = cmp_distance(&p, &q, 40);
        let b = cmp_distance(&q, &p, 40);
        prop_assert!((a - b).abs() <= 1e-12);
        let ends = dist(p.samples[0].1, q.samples[0].1).max(dist(p.samples.last().unwrap().1, q.samples.last().unwrap().1));
        prop_assert!(a >= ends - 1e-12);
    }

    #[test]
    fn step_laws_sum_to_one(seed in 0u64..200, gamma in 0.0f64..2.0) {
        let net = random_rectangle(3, 3, gamma, seed);
        for v in 0..net.vertex_count() {
            let d = step_distribution(&net, v).unwrap();
            prop_assert!((d.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}
