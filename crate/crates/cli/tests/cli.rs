use std::path::Path;
use std::process::{Command, Output};

fn sections(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sections"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).expect("utf-8")
}

/// Parses a CSV body into (header, rows).
fn csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let (header, rows) = csv(text);
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).expect("valid JSON")
}

#[test]
fn modulus_example() {
    let out = stdout(&sections(&["modulus", "--profile", "power:4", "--r", "1", "--t-grid", "5,10,20"]));
    let (header, rows) = csv(&out);
    assert_eq!(&header[..4], &["t", "xi", "r_max", "bound_power"]);
    assert_eq!(rows.len(), 3);
    let xi = column(&out, "xi");
    // The quoted reference value has three significant digits.
    assert!((xi[1] / 5.78e-3 - 1.0).abs() < 5e-3, "xi(10) = {}", xi[1]);
    assert!(xi.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn product_example() {
    let out = stdout(&sections(&[
        "product",
        "--profiles",
        "power:4,power:4",
        "--theta",
        "0.70710678,0.70710678",
        "--T",
        "10",
        "--r",
        "2",
        "--format",
        "json",
    ]));
    let doc = json(&out);
    let frame = &doc["records"][0]["frame"];
    for c in frame["y"].as_array().unwrap() {
        assert!((c.as_f64().unwrap() - 7.0711).abs() < 1e-4);
    }
    let expected = 5000.0 - 0.5 * (2.0 * std::f64::consts::PI).ln();
    assert!((frame["log_alpha"].as_f64().unwrap() - expected).abs() < 1e-9);
    assert_eq!(frame["q"]["rows"], 2);
    assert_eq!(frame["q"]["cols"], 1);
}

#[test]
fn star_example() {
    let out = stdout(&sections(&[
        "star",
        "--body",
        "euclidean",
        "--radial",
        "halfsquare",
        "--theta-axis",
        "1",
        "--t-grid",
        "2,4,8",
        "--omega",
        "2",
    ]));
    let err = column(&out, "sup_abs");
    assert_eq!(err.len(), 3);
    assert!(err.iter().all(|&e| e <= 1e-10), "{err:?}");
}

#[test]
fn product_frames_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json");
    let second = dir.path().join("second.json");
    let base = ["product", "--profiles", "power:4,cosh,power:3", "--r", "1.5", "--format", "json"];
    let mut args: Vec<&str> = base.to_vec();
    args.extend(["--theta", "1,-2,0.5", "--T", "7,3", "--out", first.to_str().unwrap()]);
    stdout(&sections(&args));
    let mut again: Vec<&str> = base.to_vec();
    again.extend(["--frame", first.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    stdout(&sections(&again));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    // Rows come out sorted by T.
    let doc = json(&std::fs::read_to_string(&first).unwrap());
    assert_eq!(doc["records"][0]["T"].as_f64(), Some(3.0));
}

#[test]
fn star_frame_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json");
    let second = dir.path().join("second.json");
    let base = [
        "star", "--body", "orlicz:exp", "--radial", "power:4", "--t-grid", "2,4", "--omega", "1", "--points", "9",
        "--format", "json",
    ];
    let mut args = base.to_vec();
    args.extend(["--theta", "1,2,3", "--out", first.to_str().unwrap()]);
    stdout(&sections(&args));
    let mut again = base.to_vec();
    again.extend(["--frame", first.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    stdout(&sections(&again));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"mode": "modulus", "profile": "power:4", "r": 1, "t_grid": [5, 10], "format": "csv"}"#,
    )
    .unwrap();
    let from_file = stdout(&sections(&["modulus", "--config", cfg.to_str().unwrap()]));
    let flags = stdout(&sections(&["modulus", "--profile", "power:4", "--r", "1", "--t-grid", "5,10"]));
    assert_eq!(from_file, flags);
    let overridden = stdout(&sections(&["modulus", "--config", cfg.to_str().unwrap(), "--r", "2"]));
    assert_eq!(column(&overridden, "r"), vec![2.0, 2.0]);
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let cases = [
        r#"{"profile": "power:4", "r": 1, "t_grid": [5], "colour": "red"}"#,
        r#"{"profile": "power:4", "r": 1, "t_grid": [5], "body": "euclidean"}"#,
        "{\n  \"profile\": \"power:4\",\n  \"r\": \"wide\"\n}",
        r#"{"mode": "star", "profile": "power:4"}"#,
    ];
    for text in cases {
        std::fs::write(&cfg, text).unwrap();
        let out = sections(&["modulus", "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{text}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
    std::fs::write(&cfg, cases[2]).unwrap();
    let out = sections(&["modulus", "--config", cfg.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    assert_eq!(sections(&["modulus", "--profile", "power:4", "--r", "1"]).status.code(), Some(1));
    assert_eq!(sections(&["modulus", "--profile", "quartic", "--r", "1", "--t-grid", "5"]).status.code(), Some(1));
    assert_eq!(sections(&["modulus", "--t-grid", "5,x"]).status.code(), Some(1));
    assert_eq!(sections(&["nonsense"]).status.code(), Some(1));
    assert_eq!(sections(&["--help"]).status.code(), Some(0));
}

#[test]
fn numerical_failures_exit_2() {
    let pole = sections(&[
        "star", "--body", "lp:4", "--radial", "power:4", "--theta-axis", "1", "--t-grid", "2", "--omega", "1",
    ]);
    assert_eq!(pole.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&pole.stderr).contains("curvature"));
    let deep = sections(&["conditional", "--profile", "power:4", "--T", "6", "--delta", "0.05", "--samples", "10"]);
    assert_eq!(deep.status.code(), Some(2));
}

#[test]
fn strict_conditions_exit_3() {
    let bad = sections(&[
        "product", "--profiles", "power:2,power:4", "--theta", "1,1", "--T", "100", "--r", "1", "--strict-conditions",
    ]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("(b1)"));
    let good = sections(&[
        "product", "--profiles", "power:4,power:4", "--theta", "1,1", "--T", "10", "--r", "1", "--strict-conditions",
    ]);
    assert_eq!(good.status.code(), Some(0));
    // Without the flag the same failing case still runs.
    let lax = sections(&["product", "--profiles", "power:2,power:4", "--theta", "1,1", "--T", "100", "--r", "1"]);
    assert_eq!(lax.status.code(), Some(0));
    // t·ρ'(t) = t² only reaches 4 on this grid, short of 10·ω².
    let radial = sections(&[
        "star", "--body", "euclidean", "--radial", "halfsquare", "--theta-axis", "1", "--t-grid", "1,2", "--omega", "2",
        "--strict-conditions",
    ]);
    assert_eq!(radial.status.code(), Some(3));
}

#[test]
fn conditional_samples_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("samples.txt");
    let args = [
        "conditional", "--profile", "gaussian", "--T", "1", "--delta", "0.1", "--samples", "3000", "--seed", "5",
        "--samples-out", path.to_str().unwrap(),
    ];
    let out = stdout(&sections(&args));
    let values: Vec<f64> = std::fs::read_to_string(&path)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(values.len(), 3000);
    let (_, rows) = csv(&out);
    assert_eq!(rows[0][6], "3000");
    let first = std::fs::read(&path).unwrap();
    stdout(&sections(&args));
    assert_eq!(std::fs::read(&path).unwrap(), first);
}

fn run_twice(args: &[&str], dir: &Path) {
    let a = dir.join("a.out");
    let b = dir.join("b.out");
    for target in [&a, &b] {
        let mut full = args.to_vec();
        full.extend(["--out", target.to_str().unwrap()]);
        stdout(&sections(&full));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{args:?}");
}

#[test]
fn every_mode_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    run_twice(&["modulus", "--profile", "cosh", "--r", "1", "--t-grid", "2,4"], dir.path());
    run_twice(
        &["sweep", "--profiles", "power:4,power:4", "--theta", "1,1", "--T", "10,5", "--r-grid", "2,1", "--format", "json"],
        dir.path(),
    );
    run_twice(&["cross-validate", "--p", "4", "--dim", "2", "--T", "5,10", "--format", "json"], dir.path());
    run_twice(
        &["conditional", "--profile", "power:4", "--T", "2", "--delta", "0.05", "--samples", "2000", "--seed", "3"],
        dir.path(),
    );
}

#[test]
fn sweep_rows_sorted_and_slopes_reported() {
    let out = stdout(&sections(&[
        "sweep", "--profiles", "gaussian,gaussian", "--theta", "1,2", "--T", "20,1,5", "--r-grid", "4,2", "--format",
        "json",
    ]));
    let doc = json(&out);
    let keys: Vec<(f64, f64)> = doc["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["T"].as_f64().unwrap(), r["r"].as_f64().unwrap()))
        .collect();
    assert_eq!(keys, vec![(1.0, 2.0), (1.0, 4.0), (5.0, 2.0), (5.0, 4.0), (20.0, 2.0), (20.0, 4.0)]);
    for rec in doc["records"].as_array().unwrap() {
        assert!(rec["sup_rel"].as_f64().unwrap() <= 1e-10);
    }
    assert_eq!(doc["slopes"].as_array().unwrap().len(), 2);
}
