use std::path::Path;
use std::process::{Command, Output};

use mitscherlich::{solve_with, Bounds, Family, ModelParams, SolveOptions};
use serde_json::Value;

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mitscherlich")).current_dir(dir).args(args).output().expect("binary runs")
}

fn run(args: &[&str]) -> Output {
    run_in(Path::new(env!("CARGO_MANIFEST_DIR")), args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

#[test]
fn poisson_design() {
    let o = run(&["design", "--family", "poisson", "--beta", "0.5", "1.0", "1.0", "--bounds", "0", "15"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("x1 = 0.00  x2 = 2.67  x3 = 15.00"), "{out}");
    assert!(out.contains("method      root-find"));
}

#[test]
fn gamma_without_intercept_exits_2() {
    let o = run(&["design", "--family", "gamma", "--beta", "0", "1", "1", "--bounds", "0", "15"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("beta1 > 0"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn invalid_parameters_exit_2() {
    let o = run(&["design", "--family", "poisson", "--beta", "0.5", "-1", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn usage_and_config_errors_exit_1() {
    assert_eq!(run(&["design", "--family", "binomial", "--beta", "1", "1", "1"]).status.code(), Some(1));
    assert_eq!(run(&["design", "--family", "weibull", "--beta", "1", "1", "1"]).status.code(), Some(1));
    assert_eq!(run(&["design", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn gaussian_json_round_trips() {
    let o = run(&["design", "--family", "gaussian", "--beta", "1", "1", "1", "--bounds", "0", "15", "--json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], "mitscherlich-design/v1");
    let x2 = v["report"]["design"]["x"][1].as_f64().unwrap();
    assert!((x2 - 15.0 * (-1.0f64).exp()).abs() < 1e-12, "{x2}");

    let family: Family = serde_json::from_value(v["family"].clone()).unwrap();
    let params: ModelParams = serde_json::from_value(v["params"].clone()).unwrap();
    let bounds: Bounds = serde_json::from_value(v["bounds"].clone()).unwrap();
    let again = solve_with(family, &params, &bounds, &SolveOptions::default()).unwrap();
    let emitted: Vec<f64> = v["report"]["design"]["x"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(emitted, again.design.x.to_vec());
}

#[test]
fn json_round_trips_for_grid_designs() {
    let o = run(&["design", "--family", "binomial", "--trials", "25", "--row", "2", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["method"], "grid-search-3d");
    let family: Family = serde_json::from_value(v["family"].clone()).unwrap();
    assert_eq!(family, Family::Binomial { trials: 25 });
    let params: ModelParams = serde_json::from_value(v["params"].clone()).unwrap();
    let bounds: Bounds = serde_json::from_value(v["bounds"].clone()).unwrap();
    let again = solve_with(family, &params, &bounds, &SolveOptions::default()).unwrap();
    let report: mitscherlich::SolveReport = serde_json::from_value(v["report"].clone()).unwrap();
    assert_eq!(report.design.x, again.design.x);
}

#[test]
fn heteroscedastic_and_transformed_designs() {
    let o = run(&["design", "--power", "3", "--sigma2", "0.01", "--beta", "0.1", "1", "0.8", "--csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("grid-search-2d"), "{}", stdout(&o));

    let o = run(&["design", "--family", "poisson", "--transform", "sqrt", "--row", "2", "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["design"]["x"][0], 0.0);
    assert_eq!(v["report"]["design"]["x"][2], 15.0);

    let o = run(&["design", "--family", "poisson", "--transform", "exp", "--beta", "0.5", "0.1", "1", "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["conditions"]["c2"], false);

    let o = run(&["design", "--family", "poisson", "--transform", "exp", "--beta", "0.5", "0.1", "1", "--no-grid-fallback"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unsupported"));
}

#[test]
fn table1_matches_reference_and_is_deterministic() {
    let a = run(&["table1", "--csv"]);
    assert!(a.status.success());
    let expected = [
        [4.94, 2.24, 0.70],
        [5.52, 2.67, 0.90],
        [6.04, 3.10, 1.14],
        [4.94, 2.58, 1.12],
        [5.52, 3.02, 1.38],
        [6.04, 3.47, 1.68],
    ];
    let rows = csv_rows(&stdout(&a));
    assert_eq!(rows.len(), 6);
    for (row, exp) in rows.iter().zip(expected) {
        for k in 0..3 {
            assert!((row[3 + k] - exp[k]).abs() <= 0.01 + 1e-9, "{row:?}");
        }
    }
    assert_eq!(stdout(&a), stdout(&run(&["table1", "--csv"])));
    let pretty = run(&["table1"]);
    assert_eq!(stdout(&pretty), stdout(&run(&["table1"])));
    assert!(stdout(&pretty).contains("5.52"));
}

#[test]
fn table2_matches_reference() {
    let o = run(&["table2", "--csv"]);
    assert!(o.status.success());
    let expected = [
        (0.26, 5.21, 1.455),
        (0.36, 5.32, 1.697),
        (0.48, 5.58, 2.192),
        (0.57, 11.34, 0.045),
        (0.72, 10.65, 0.053),
        (0.91, 10.53, 0.068),
    ];
    for (row, (x2, x3, det)) in csv_rows(&stdout(&o)).iter().zip(expected) {
        assert!((row[4] - x2).abs() <= 0.01 + 1e-9 && (row[5] - x3).abs() <= 0.01 + 1e-9, "{row:?}");
        assert!((row[6] - det).abs() <= 0.005, "{row:?}");
    }
    let pretty = stdout(&run(&["table2"]));
    assert!(pretty.contains("73.7%"), "{pretty}");
}

#[test]
fn efficiency_of_dilution_designs() {
    let o = run(&["efficiency", "--family", "inverse-gaussian", "--row", "5", "--dilution", "30", "--csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    let ratio: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
    assert!((ratio - 0.737).abs() < 0.0005, "{line}");

    let o = run(&["efficiency", "--family", "poisson", "--row", "2", "--design", "0", "2.67", "15", "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let r = v["candidates"][0]["efficiency"]["ratio"].as_f64().unwrap();
    assert!(r > 0.999 && r <= 1.0, "{r}");
}

#[test]
fn verify_passes_and_catches_a_broken_solver() {
    let ok = run(&["verify", "--no-simulation"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    assert!(stdout(&ok).contains("all checks passed"));
    assert!(!stdout(&ok).contains("FAIL"));

    let bad = run(&["verify", "--no-simulation", "--corrupt-x2-equation"]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(stderr(&bad).contains("oracle agreement"), "{}", stderr(&bad));
    assert!(stdout(&bad).contains("FAIL oracle"));
}

#[test]
fn verify_is_reproducible_for_a_seed() {
    let args = ["verify", "--seed", "42", "--replicates", "100", "--n-per-point", "100", "--grid-step", "0.05", "--json"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(stdout(&a), stdout(&b));
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["schema"], "mitscherlich-verify/v1");
    assert_eq!(v["oracle"].as_array().unwrap().len(), 42);
    assert_eq!(v["covariance"].as_array().unwrap().len(), 2);
}

#[test]
fn simulate_reports_covariance() {
    let o = run(&[
        "simulate", "--family", "poisson", "--row", "2", "--replicates", "200", "--n-per-point", "100", "--seed", "3",
        "--json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], "mitscherlich-covariance/v1");
    assert_eq!(v["config"]["replicates"], 200);
    let dev = v["max_relative_diagonal_deviation"].as_f64().unwrap();
    assert!(dev < 0.5, "{dev}");

    let o = run(&["simulate", "--family", "gaussian", "--row", "1", "--dispersion", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("dispersion"));
}

#[test]
fn config_file_and_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# Poisson, preset window\nfamily = poisson\nbeta = 0.5 1.0 1.0\nformat = csv\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let o = run(&["design", "--config", cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    let x2: f64 = line.split(',').nth(7).unwrap().parse().unwrap();
    assert!((x2 - 2.67).abs() < 0.01, "{line}");

    // Flags beat the file.
    let o = run(&["design", "--config", cfg, "--family", "gaussian"]);
    assert!(stdout(&o).contains("\"gaussian\""), "{}", stdout(&o));

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "family = poisson\n\nbeta = 0.5 1.0\n").unwrap();
    let o = run(&["design", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.cfg:3:"), "{}", stderr(&o));
}

#[test]
fn files_are_written_only_with_out() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["table1"]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);

    let target = dir.path().join("t1.json");
    let o = run_in(dir.path(), &["table1", "--json", "--out", target.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(v["schema"], "mitscherlich-table1/v1");
    assert_eq!(v["rows"].as_array().unwrap().len(), 6);
}
