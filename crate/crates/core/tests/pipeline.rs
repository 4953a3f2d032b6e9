use std::process::Command;

use graphent::experiments::{self, parse_csv, ExperimentConfig, Mode};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_graphent"))
}

#[test]
fn list_presets_shows_every_figure() {
    let out = bin().arg("--list-presets").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig3", "fig4", "fig5", "fig6", "fig7"] {
        assert!(text.contains(name), "{name} missing");
    }
    assert!(text.contains("theta-grid"));
}

#[test]
fn preset_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["--preset", "fig4", "--p-grid", "0:1:6", "--seed", "11", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("fig4.csv")).unwrap();
    assert!(csv.starts_with("p,llb,lb_theta0,lb_thetapi4,ub,exact_or_oracle,certificate\n"));
    assert_eq!(csv.lines().count(), 7);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig4.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 11);
    assert_eq!(meta["channel"], "ad:p");
    assert_eq!(meta["graph"]["n"], 4);
    assert!(meta["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(meta["tolerances"]["negative_eigenvalue_threshold"].is_number());
}

#[test]
fn stdout_matches_library_output() {
    let out = bin()
        .args(["--graph", "ring:5", "--partition", "0,0,1,1,1", "--channel", "dephase:p", "--mode", "exact-pauli", "--p-grid", "0:1:5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let mut c = ExperimentConfig::new("run", "ring:5", "0,0,1,1,1", "dephase:p", Mode::ExactPauli).unwrap();
    c.p_grid = "0:1:5".parse().unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), experiments::run(&c).unwrap().csv);
}

#[test]
fn exit_codes() {
    let config_error = bin()
        .args(["--graph", "chain:4", "--channel", "ad:p", "--mode", "exact-pauli"])
        .output()
        .unwrap();
    assert_eq!(config_error.status.code(), Some(2));
    let missing_file = bin()
        .args(["--graph", "/nonexistent/graph.txt", "--channel", "depol:p", "--mode", "exact-pauli"])
        .output()
        .unwrap();
    assert_eq!(missing_file.status.code(), Some(2));
    let limit = bin()
        .args(["--graph", "chain:9", "--partition", "one-vs-rest:4", "--channel", "depol:p", "--mode", "oracle-check", "--p-grid", "0.2"])
        .output()
        .unwrap();
    assert_eq!(limit.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&limit.stderr).contains("limit"));
}

#[test]
fn edge_list_file_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.txt");
    std::fs::write(&graph, "# square with a chord\n0 1\n1 2\n2 3\n3 0\n0 2\n").unwrap();
    let mut c = ExperimentConfig::new("sq", graph.to_str().unwrap(), "0,1,1,0", "bitflip:p", Mode::OracleCheck).unwrap();
    c.p_grid = "0:0.9:4".parse().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, c.to_json()).unwrap();
    let out = bin().arg("--config").arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("case_id,fast,oracle,abs_diff\n"));
    for row in parse_csv(&text) {
        assert!(row[3] <= 1e-9);
    }
}

#[test]
fn random_oracle_check_is_seeded() {
    let run = |seed: &str| {
        bin()
            .args(["--graph", "random:5", "--channel", "depol:p", "--mode", "oracle-check", "--p-grid", "0.1:0.9:3", "--seed", seed])
            .output()
            .unwrap()
    };
    let (a, b, c) = (run("3"), run("3"), run("4"));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let rows = parse_csv(&String::from_utf8(a.stdout).unwrap());
    assert_eq!(rows.len(), 15);
    assert!(rows.iter().all(|r| r[3] <= 1e-9));
}

#[test]
fn theta_scan_reference_column() {
    let p = experiments::preset("fig7").unwrap();
    let rows = parse_csv(&experiments::run(&p.runs[0]).unwrap().csv);
    assert_eq!(rows.len(), 33);
    let reference = rows[0][2];
    for r in &rows {
        assert_eq!(r[2], reference);
        assert!(r[1] <= reference + 1e-9);
    }
}

#[test]
fn jobs_do_not_change_numbers() {
    let mut c = ExperimentConfig::new("j", "chain:10", "one-vs-rest:5", "depol:p", Mode::ExactPauli).unwrap();
    c.p_grid = "0:1:11".parse().unwrap();
    c.jobs = Some(1);
    let a = experiments::run(&c).unwrap();
    c.jobs = Some(4);
    let b = experiments::run(&c).unwrap();
    for (x, y) in parse_csv(&a.csv).iter().flatten().zip(parse_csv(&b.csv).iter().flatten()) {
        assert!((x - y).abs() <= 1e-12);
    }
    assert_eq!(a.metadata["jobs"], 1);
    assert_eq!(b.metadata["jobs"], 4);
}
