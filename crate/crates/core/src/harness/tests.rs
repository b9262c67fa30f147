use super::*;

fn small(name: &str) -> ExperimentConfig {
    let mut c = ExperimentConfig::for_experiment(name).unwrap();
    c.n_list = vec![2, 3];
    c.replicas = 6;
    c.geometry.walk_samples = 400;
    c.geometry.measure_samples = 400;
    c
}

fn csv(r: &ExperimentReport) -> String {
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn every_registered_experiment_runs() {
    for name in EXPERIMENTS {
        let mut c = small(name);
        if name == "mesh-compare" {
            c.n_list = vec![3];
        }
        if name == "annulus-ratio" {
            c.n_list = vec![3];
        }
        let r = run(&c).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!r.rows.is_empty(), "{name}");
        assert!(r.passed(), "{name}: {:?}", r.assertions.iter().filter(|a| a.hard && !a.passed).collect::<Vec<_>>());
        assert!(r.rows.iter().all(|row| row.value.is_finite() || row.stat == "resdif_gap"), "{name}");
    }
}

#[test]
fn same_config_gives_identical_detail() {
    let c = small("duality-median");
    assert_eq!(csv(&run(&c).unwrap()), csv(&run(&c).unwrap()));
    let mut d = c.clone();
    d.seed += 1;
    assert_ne!(csv(&run(&c).unwrap()), csv(&run(&d).unwrap()));
}

#[test]
fn thread_count_does_not_change_results() {
    let c = small("identity-suite");
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run(&c).unwrap());
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| run(&c).unwrap());
    assert_eq!(csv(&one), csv(&many));
}

#[test]
fn zero_replicas_is_a_config_error() {
    let mut c = small("resistance");
    c.replicas = 0;
    assert!(matches!(run(&c), Err(Error::Config(_))));
}

#[test]
fn small_mesh_rule_is_enforced() {
    let mut c = small("mesh-compare");
    c.n_list = vec![5];
    c.geometry.mesh_zetas = vec![2, 3];
    assert!(matches!(run(&c), Err(Error::Config(_))));
    c.allow_small_zeta = true;
    assert!(run(&c).is_ok());
}

#[test]
fn duality_rows_multiply_to_one() {
    let r = run(&small("duality-median")).unwrap();
    let lr = r.values(3, "R_lr");
    let ud = r.values(3, "R_dual_ud");
    assert_eq!(lr.len(), 6);
    for (a, b) in lr.iter().zip(&ud) {
        assert!((a * b - 1.0).abs() < 1e-8);
    }
}

#[test]
fn lambda_matches_sorting_oracle() {
    let mut c = small("quantile-table");
    c.replicas = 40;
    let r = run(&c).unwrap();
    let p = c.geometry.p_list[0];
    let mut best = 1.0f64;
    for n in [2, 3] {
        let mut v = r.values(n, "R_lr");
        v.sort_by(f64::total_cmp);
        let idx = |q: f64| (q * (v.len() - 1) as f64).floor() as usize;
        best = best.max(v[idx(1.0 - p)] / v[idx(p)]);
    }
    let a = r.assertion(&format!("lambda p={p}")).unwrap();
    assert!((a.value - best).abs() < 1e-12 * best);
}

#[test]
fn uniform_identity_suite_has_log_resistance_of_a_uniform_grid() {
    let mut c = small("identity-suite");
    c.geometry.gamma_list = vec![0.0];
    c.replicas = 2;
    let r = run(&c).unwrap();
    // (k+1) × k cells with unit resistors give R = (k+1)/(k+1) = 1
    for v in r.values(3, "log_R") {
        assert!(v.abs() < 1e-9);
    }
}

#[test]
fn write_produces_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small("walk-trace");
    c.n_list = vec![2];
    c.replicas = 1;
    c.output_dir = dir.path().to_path_buf();
    let r = run_experiment(&c).unwrap();
    let json: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["experiment"], "walk-trace");
    assert_eq!(json["status"], "pass");
    let detail = std::fs::read_to_string(dir.path().join("detail.csv")).unwrap();
    assert!(detail.starts_with("experiment,n,zeta,gamma,replica,stat,value,seed\n"));
    assert_eq!(detail.lines().count(), 1 + r.rows.len());
    assert!(dir.path().join("trace_n2_r0.txt").exists());
    assert!(dir.path().join("exit_measure_n2.csv").exists());
    assert!(dir.path().join("path_n2_r0.dat").exists());
}

#[test]
fn field_artifacts_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small("sample-field");
    c.n_list = vec![2];
    c.replicas = 1;
    c.output_dir = dir.path().to_path_buf();
    run_experiment(&c).unwrap();
    let names: Vec<String> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(names.iter().any(|n| n.starts_with("field_n2_r0")), "{names:?}");
}

#[test]
fn failing_replicas_are_aggregated() {
    let e = par_replicas(10, |i| if i % 3 == 0 { Err(Error::Domain(format!("bad {i}"))) } else { Ok(i) }).unwrap_err();
    match e {
        Error::Replicas { count, detail } => {
            assert_eq!(count, 4);
            assert!(detail.contains("replica 0") && detail.contains("replica 9"));
        }
        other => panic!("{other}"),
    }
}

#[test]
fn cells_rounds_and_rejects_subgrid_lengths() {
    assert_eq!(cells(0.25, 4, 2).unwrap(), 8);
    assert_eq!(cells(0.125, 3, 2).unwrap(), 2);
    assert!(cells(0.01, 2, 2).is_err());
}
