use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn warpsplit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_warpsplit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("machine output is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const NEARLY_PARALLEL: &str = r#"
name = "nearly-parallel"
dimension = 2
coordinates = ["x", "y"]
metric = [["1"], ["0", "1"]]
field = ["1", "1e-5*x"]

[domain]
intervals = [[-1, 1], [-1, 1]]
"#;

#[test]
fn exported_fixture_classifies_parallel() {
    let dir = tempfile::tempdir().unwrap();
    let out = warpsplit(&["fixtures", "--export", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let path = dir.path().join("1-minkowski-torus.toml");
    let r = json(&warpsplit(&["classify", path.to_str().unwrap(), "--format", "machine"]));
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["command"], "classify");
    assert_eq!(r["result"]["classification"]["parallel"]["holds"], true);
    assert_eq!(r["result"]["decomposition"], "Direct");
}

#[test]
fn asymmetric_metric_is_a_spec_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "bad.toml",
        r#"
name = "asymmetric"
dimension = 2
coordinates = ["x", "y"]
metric = [["1", "0.5"], ["0", "1"]]
field = ["1", "0"]

[domain]
intervals = [[-1, 1], [-1, 1]]
"#,
    );
    let out = warpsplit(&["classify", &spec]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("(0,1)") && err.contains("(1,0)"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_keys_and_names_are_spec_errors() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "extra.toml", &format!("{NEARLY_PARALLEL}\ncolour = \"red\"\n"));
    assert_eq!(warpsplit(&["classify", &spec]).status.code(), Some(2));
    assert_eq!(warpsplit(&["split", "no-such-fixture"]).status.code(), Some(2));
    assert_eq!(warpsplit(&["split", "2", "--t-span", "1,-1"]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exit_code() {
    // g(U,·) is not closed for this field, so there is no period group
    let out = warpsplit(&["periods", "nongeodesic-plane"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not closed"));
}

#[test]
fn tolerance_override_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "np.toml", NEARLY_PARALLEL);
    let flags = [
        "unit",
        "pregeodesic",
        "geodesic_unit",
        "irrotational",
        "orth_irrotational",
        "conformal",
        "orth_conformal",
        "parallel",
        "grad_div_e_parallel_e",
    ];
    let mut previous: Option<Vec<u64>> = None;
    let mut parallel = Vec::new();
    for tol in ["1e-9", "1e-7", "1e-5", "1e-3", "1e-1"] {
        let r = json(&warpsplit(&["classify", &spec, "--tol", tol, "--format", "machine"]));
        let c = &r["result"]["classification"];
        assert_eq!(c["tolerance"].as_f64().unwrap(), tol.parse::<f64>().unwrap());
        let failures: Vec<u64> = flags.iter().map(|f| c[f]["failures"].as_u64().unwrap()).collect();
        if let Some(prev) = &previous {
            for (a, b) in prev.iter().zip(&failures) {
                assert!(b <= a, "failures grew when loosening to {tol}");
            }
        }
        previous = Some(failures);
        parallel.push(c["parallel"]["holds"].as_bool().unwrap());
    }
    assert!(!parallel[1], "borderline flag should fail at the default tolerance");
    assert!(parallel[3], "borderline flag should hold at 1e-3");
}

#[test]
fn split_warped_fixture_gives_exponential_warping() {
    let r = json(&warpsplit(&["split", "2", "--format", "machine"]));
    let v = &r["result"]["verdict"]["class"];
    assert_eq!(v["base"], "line");
    assert_eq!(v["type"], "Warped");
    let w = &r["result"]["warping"];
    let t: Vec<f64> = w["t"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let k = t.iter().position(|&x| (x - 1.0).abs() < 1e-12).expect("grid contains t = 1");
    let f1 = w["f"][0][k].as_f64().unwrap();
    assert!((f1 - std::f64::consts::E).abs() < 1e-6, "f(1) = {f1}");

    let human = warpsplit(&["split", "2"]);
    let text = String::from_utf8(human.stdout).unwrap();
    assert!(text.contains("ℝ×L"), "{text}");
    assert!(text.contains("2.71828182"), "{text}");
}

#[test]
fn periods_of_minkowski_torus() {
    let r = json(&warpsplit(&["periods", "1", "--format", "machine"]));
    let p = &r["result"];
    assert_eq!(p["class"], "discrete");
    assert_eq!(p["rank"], 1);
    let g = p["generator"].as_f64().unwrap();
    assert!((g - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9, "generator {g}");
}

#[test]
fn run_all_fixtures_passes() {
    let out = warpsplit(&["fixtures", "--run-all"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 11);
    assert!(!text.contains("FAIL"));
}

#[test]
fn machine_reports_are_byte_identical() {
    for args in [
        ["classify", "4", "--format", "machine"],
        ["split", "5", "--format", "machine"],
        ["verify", "6", "--format", "machine"],
        ["periods", "8", "--format", "machine"],
    ] {
        let a = warpsplit(&args);
        let b = warpsplit(&args);
        assert!(a.status.success(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn seed_and_sample_overrides_reach_the_report() {
    let r = json(&warpsplit(&["classify", "3", "--seed", "7", "--samples", "50", "--format", "machine"]));
    assert_eq!(r["seed"], 7);
    assert_eq!(r["samples"], 50);
    assert_eq!(r["result"]["classification"]["samples"], 50);
}

#[test]
fn emitted_tables_have_one_header_line() {
    let dir = tempfile::tempdir().unwrap();
    let split = dir.path().join("f.csv");
    let out = warpsplit(&["split", "2", "--t-span=-2,2", "--emit-table", split.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&split).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("time,leaf,t,s,f"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 21 * 16);
    assert!(rows.iter().any(|r| r[0] == -2.0) && rows.iter().any(|r| r[0] == 2.0));
    for r in rows.iter().filter(|r| r[1] == 0.0) {
        assert!((r[4] - r[0].exp()).abs() < 1e-6 * r[0].exp());
    }

    let grid = dir.path().join("res.csv");
    assert!(warpsplit(&["verify", "6", "--emit-table", grid.to_str().unwrap()]).status.success());
    let text = std::fs::read_to_string(&grid).unwrap();
    assert_eq!(text.lines().next(), Some("time,leaf,residual"));
    assert!(text.lines().count() > 1);
}
