mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hexflow::conformal::curvature_at;
use hexflow::io::{save_factors, save_target};
use hexflow::{ConformalFactor, CurvatureVector};

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn hexflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hexflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Target `K(0.3, −0.2, 0.1)` on the pants with all lengths arccosh 2.
fn pants_target(dir: &Path) -> PathBuf {
    let (cx, bg) = common::pants();
    let k = curvature_at(&ConformalFactor(vec![0.3, -0.2, 0.1]), &bg, &cx).unwrap();
    let path = dir.join("target.json");
    save_target(&path, &k).unwrap();
    path
}

#[test]
fn validate_pants() {
    let o = hexflow(&["validate", "--surface", &fixture("pair_of_pants.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("F=2 E=3 n=3 chi=-1"), "{text}");
    assert!(text.contains("boundary_cycle_lengths=2,2,2"));
}

#[test]
fn validate_torus() {
    let o = hexflow(&["validate", "--surface", &fixture("one_holed_torus.json")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("n=1"));
}

#[test]
fn validate_rejects_bad_files() {
    let o = hexflow(&["validate", "--surface", &fixture("self_paired.json")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("self-paired side (face 0, slot 0)"), "{}", stderr(&o));

    let o = hexflow(&["validate", "--surface", &fixture("malformed.json")]);
    assert_eq!(o.status.code(), Some(2));
    let o = hexflow(&["validate", "--surface", "/nonexistent/surface.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_random_surface_is_seeded() {
    let a = hexflow(&["validate", "--surface", "random:20", "--seed", "7"]);
    let b = hexflow(&["validate", "--surface", "random:20", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("F=20 E=30 "));
}

fn parse_k(text: &str) -> Vec<f64> {
    text.lines()
        .filter(|l| l.starts_with("K_"))
        .map(|l| l.split('=').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn curvature_closed_forms() {
    let o = hexflow(&[
        "curvature",
        "--surface",
        &fixture("pair_of_pants.json"),
        "--metric",
        &fixture("arccosh2_metric.json"),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let k = parse_k(&stdout(&o));
    assert_eq!(k.len(), 3);
    for ki in k {
        assert!((ki - 2.6339157938496334).abs() < 1e-10);
    }
    assert!(stdout(&o).contains("boundary_margin="));

    let o = hexflow(&[
        "curvature",
        "--surface",
        &fixture("one_holed_torus.json"),
        "--metric",
        &fixture("arccosh2_metric.json"),
    ]);
    let k = parse_k(&stdout(&o));
    assert!((k[0] - 7.9017473815489003).abs() < 1e-10);
}

#[test]
fn curvature_rejects_inadmissible_factors() {
    let o = hexflow(&[
        "curvature",
        "--surface",
        &fixture("pair_of_pants.json"),
        "--metric",
        &fixture("arccosh2_metric.json"),
        "--factors",
        &fixture("outside_factors.json"),
    ]);
    assert_eq!(o.status.code(), Some(3));

    // exactly on the boundary of edge 0 (components 0 and 2)
    let dir = tempfile::tempdir().unwrap();
    let c = hexflow::conformal::ln_cosh(common::arccosh2() / 2.0);
    let path = dir.path().join("w.json");
    save_factors(&path, &ConformalFactor(vec![-c, 0.0, 0.0])).unwrap();
    let o = hexflow(&[
        "curvature",
        "--surface",
        &fixture("pair_of_pants.json"),
        "--metric",
        "uniform:1.3169578969248166",
        "--factors",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stderr(&o).contains("not admissible"));
}

#[test]
fn flow_sweep_converges_to_common_factor() {
    let dir = tempfile::tempdir().unwrap();
    let target = pants_target(dir.path());
    let trace = dir.path().join("trace.csv");
    let report = dir.path().join("report.json");
    let o = hexflow(&[
        "flow",
        "--surface",
        &fixture("pair_of_pants.json"),
        "--metric",
        &fixture("arccosh2_metric.json"),
        "--target",
        target.to_str().unwrap(),
        "--s-list",
        "-1,0,0.5,1,2",
        "--sample-every",
        "10",
        "--trace",
        trace.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let mut finals = Vec::new();
    for s in ["-1", "0", "0.5", "1", "2"] {
        let trace = fs::read_to_string(dir.path().join(format!("trace.s{s}.csv"))).unwrap();
        assert!(trace.starts_with("t,w_0,w_1,w_2,K_0,K_1,K_2,calabi_energy,potential_energy,boundary_margin,dt\n"));
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(format!("report.s{s}.json"))).unwrap()).unwrap();
        assert_eq!(summary["status"], "converged");
        assert!(summary["curvature_error"].as_f64().unwrap() < 1e-10);
        let w: Vec<f64> = serde_json::from_value(summary["w_final"].clone()).unwrap();
        assert_eq!(summary["K_final"].as_array().unwrap().len(), 3);
        finals.push(w);
    }
    for w in &finals {
        assert!(common::max_abs_diff(w, &finals[0]) < 1e-6);
        assert!(common::max_abs_diff(w, &[0.3, -0.2, 0.1]) < 1e-8);
    }
}

#[test]
fn flow_status_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let target = pants_target(dir.path());
    let base = [
        "flow",
        "--surface",
        &fixture("pair_of_pants.json"),
        "--metric",
        &fixture("arccosh2_metric.json"),
        "--target",
        target.to_str().unwrap(),
    ]
    .map(String::from);
    let with = |extra: &[&str]| {
        let mut args: Vec<&str> = base.iter().map(String::as_str).collect();
        args.extend_from_slice(extra);
        hexflow(&args)
    };

    let o = with(&["--t-max", "0"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("status=horizon_reached"));

    let o = with(&["--tol", "100"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("t_final=0.0000000000000000e0"), "{}", stdout(&o));

    let o = with(&["--dt0", "1e-15"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stdout(&o).contains("status=step_underflow"));

    let o = with(&["--dt0", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = with(&["--s-list", "1,x"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flow_and_solve_reject_zero_targets() {
    for cmd in ["flow", "solve"] {
        let o = hexflow(&[
            cmd,
            "--surface",
            &fixture("pair_of_pants.json"),
            "--metric",
            &fixture("arccosh2_metric.json"),
            "--target",
            &fixture("zero_target.json"),
        ]);
        assert_eq!(o.status.code(), Some(2), "{cmd}");
        assert!(stderr(&o).contains("K_bar[1]"));
    }
}

#[test]
fn solve_round_trip_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let target = pants_target(dir.path());
    let report = dir.path().join("solve.json");
    let o = hexflow(&[
        "solve",
        "--surface",
        &fixture("pair_of_pants.json"),
        "--metric",
        &fixture("arccosh2_metric.json"),
        "--target",
        target.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["status"], "converged");
    let iterations = doc["iterations"].as_u64().unwrap();
    assert!(iterations <= 20);
    assert_eq!(doc["residual_history"].as_array().unwrap().len() as u64, iterations + 1);
    let w: Vec<f64> = serde_json::from_value(doc["w_star"].clone()).unwrap();
    assert!(common::max_abs_diff(&w, &[0.3, -0.2, 0.1]) < 1e-8);

    // starting at the solution
    let start = dir.path().join("w.json");
    save_factors(&start, &ConformalFactor(w)).unwrap();
    let o = hexflow(&[
        "solve",
        "--surface",
        &fixture("pair_of_pants.json"),
        "--metric",
        &fixture("arccosh2_metric.json"),
        "--target",
        target.to_str().unwrap(),
        "--factors",
        start.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("iterations=0"));
}

#[test]
fn solve_failure_exit_codes() {
    let args = |tol: &str, max_iter: &str| {
        hexflow(&[
            "solve",
            "--surface",
            &fixture("pair_of_pants.json"),
            "--metric",
            &fixture("skew_metric.json"),
            "--target",
            &fixture("roundoff_target.json"),
            "--tol",
            tol,
            "--max-iter",
            max_iter,
        ])
    };
    let o = args("1e-300", "100");
    assert_eq!(o.status.code(), Some(5));
    assert!(stdout(&o).contains("status=line_search_failed"));
    let o = args("1e-10", "1");
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("status=max_iterations"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (cx, bg) = (
        hexflow::SurfaceComplex::random(6, 4).unwrap(),
        hexflow::BackgroundMetric::uniform(9, 1.1).unwrap(),
    );
    let k = curvature_at(&ConformalFactor((0..cx.num_components()).map(|i| 0.05 * i as f64).collect()), &bg, &cx).unwrap();
    let target = dir.path().join("target.json");
    save_target(&target, &CurvatureVector(k.0)).unwrap();

    let run = |tag: &str| {
        let trace = dir.path().join(format!("trace_{tag}.csv"));
        let report = dir.path().join(format!("report_{tag}.json"));
        let solve = dir.path().join(format!("solve_{tag}.json"));
        let common_args = ["--surface", "random:6", "--seed", "4", "--metric", "uniform:1.1", "--target", target.to_str().unwrap()];
        let mut flow: Vec<&str> = vec!["flow"];
        flow.extend(common_args);
        flow.extend(["--trace", trace.to_str().unwrap(), "--report", report.to_str().unwrap()]);
        assert_eq!(hexflow(&flow).status.code(), Some(0));
        let mut sv: Vec<&str> = vec!["solve"];
        sv.extend(common_args);
        sv.extend(["--report", solve.to_str().unwrap()]);
        assert_eq!(hexflow(&sv).status.code(), Some(0));
        (fs::read(trace).unwrap(), fs::read(report).unwrap(), fs::read(solve).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}
